#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfs/error.hpp"
#include "qfs/qubo.hpp"
#include "qfs/random.hpp"

namespace qfs {

struct AnnealConfig {
  std::size_t num_reads = 16;
  std::size_t sweeps = 1000;
  double beta_initial = 0.1;
  double beta_final = 10.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_reads < 1) throw ConfigError("anneal: num_reads must be >= 1");
    if (sweeps < 1) throw ConfigError("anneal: sweeps must be >= 1");
    if (!(beta_initial > 0.0) || !(beta_final > beta_initial))
      throw ConfigError("anneal: need beta_final > beta_initial > 0");
  }
};

struct Sample {
  Assignment x;
  double energy = 0.0;
  std::size_t occurrences = 1;
};

// Sorted by energy ascending, then lexicographically by assignment.
struct SampleSet {
  std::vector<Sample> samples;
  std::optional<double> runner_up_energy;  // set by solve_exact only

  bool empty() const { return samples.empty(); }
  const Sample& best() const {
    if (samples.empty()) throw SolverError("empty sample set");
    return samples.front();
  }
};

namespace detail {

inline bool sample_less(const Sample& a, const Sample& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  return a.x < b.x;
}

// Sorts and merges identical assignments.
inline SampleSet merge_samples(std::vector<Sample> raw) {
  std::sort(raw.begin(), raw.end(), sample_less);
  SampleSet out;
  for (auto& s : raw) {
    if (!out.samples.empty() && out.samples.back().x == s.x)
      out.samples.back().occurrences += s.occurrences;
    else
      out.samples.push_back(std::move(s));
  }
  return out;
}

// Symmetric dense couplings with cached local fields; flipping variable i
// changes the energy by (1 - 2 x_i) * field_i.
class FlipState {
 public:
  explicit FlipState(const QuboMatrix& q) : p_(q.dim()), diag_(p_), w_(p_ * p_, 0.0) {
    for (std::size_t i = 0; i < p_; ++i) {
      diag_[i] = q.at(i, i);
      for (std::size_t j = i + 1; j < p_; ++j) {
        w_[i * p_ + j] = q.at(i, j);
        w_[j * p_ + i] = q.at(i, j);
      }
    }
  }

  void reset(const Assignment& x, double e) {
    x_ = x;
    energy_ = e;
    field_ = diag_;
    for (std::size_t j = 0; j < p_; ++j)
      if (x_[j])
        for (std::size_t i = 0; i < p_; ++i) field_[i] += w_[j * p_ + i];
  }

  double delta(std::size_t i) const { return x_[i] ? -field_[i] : field_[i]; }

  void flip(std::size_t i) {
    energy_ += delta(i);
    const double s = x_[i] ? -1.0 : 1.0;
    x_[i] ^= 1;
    const double* row = &w_[i * p_];
    for (std::size_t j = 0; j < p_; ++j) field_[j] += s * row[j];
  }

  std::size_t dim() const { return p_; }
  double energy() const { return energy_; }
  const Assignment& x() const { return x_; }

 private:
  std::size_t p_;
  std::vector<double> diag_;
  std::vector<double> w_;
  std::vector<double> field_;
  Assignment x_;
  double energy_ = 0.0;
};

}  // namespace detail

inline constexpr std::size_t kMaxExactDim = 24;

// Brute-force minimization over all 2^dim assignments (Gray-code order).
// Returns every optimal assignment and the best non-optimal energy.
inline SampleSet solve_exact(const QuboMatrix& q, double tie_tolerance = 1e-9) {
  const std::size_t p = q.dim();
  if (p > kMaxExactDim)
    throw ConfigError("solve_exact refuses dim " + std::to_string(p) + " > " + std::to_string(kMaxExactDim));
  detail::FlipState st(q);
  st.reset(Assignment(p, 0), q.offset());

  double best = st.energy();
  double second = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> ties{0};
  std::uint32_t mask = 0;
  const std::uint64_t total = std::uint64_t{1} << p;
  for (std::uint64_t step = 1; step < total; ++step) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(step));
    st.flip(bit);
    mask ^= (1u << bit);
    const double e = st.energy();
    if (e < best - tie_tolerance) {
      second = std::min(second, best);
      best = e;
      ties.assign(1, mask);
    } else if (e <= best + tie_tolerance) {
      ties.push_back(mask);
    } else {
      second = std::min(second, e);
    }
  }

  std::vector<Sample> raw;
  raw.reserve(ties.size());
  for (auto m : ties) {
    Sample s;
    s.x.resize(p);
    for (std::size_t i = 0; i < p; ++i) s.x[i] = (m >> i) & 1u;
    s.energy = energy(q, s.x);
    raw.push_back(std::move(s));
  }
  auto out = detail::merge_samples(std::move(raw));
  if (std::isfinite(second)) out.runner_up_energy = second;
  return out;
}

// Single-flip Metropolis annealing. Each read starts from a uniform random
// assignment and walks a geometric beta schedule, one full variable sweep per
// step; the lowest-energy state seen in a read is that read's sample. Read r
// draws from its own stream seeded by derive_seed(cfg.seed, {r}).
inline SampleSet anneal(const QuboMatrix& q, const AnnealConfig& cfg) {
  cfg.validate();
  const std::size_t p = q.dim();
  detail::FlipState st(q);

  std::vector<double> betas(cfg.sweeps);
  for (std::size_t s = 0; s < cfg.sweeps; ++s) {
    const double t = cfg.sweeps == 1 ? 1.0 : static_cast<double>(s) / static_cast<double>(cfg.sweeps - 1);
    betas[s] = cfg.beta_initial * std::pow(cfg.beta_final / cfg.beta_initial, t);
  }

  std::vector<Sample> raw;
  raw.reserve(cfg.num_reads);
  for (std::size_t r = 0; r < cfg.num_reads; ++r) {
    Rng rng(derive_seed(cfg.seed, {r}));
    Assignment x(p);
    for (auto& v : x) v = static_cast<std::uint8_t>(rng.next() >> 63);
    st.reset(x, energy(q, x));

    Assignment best = st.x();
    double best_e = st.energy();
    for (double beta : betas) {
      for (std::size_t i = 0; i < p; ++i) {
        const double d = st.delta(i);
        if (d <= 0.0 || rng.uniform() < std::exp(-beta * d)) {
          st.flip(i);
          if (st.energy() < best_e) {
            best_e = st.energy();
            best = st.x();
          }
        }
      }
    }
    Sample s;
    s.x = std::move(best);
    s.energy = energy(q, s.x);
    raw.push_back(std::move(s));
  }
  return detail::merge_samples(std::move(raw));
}

struct Selection {
  std::vector<std::size_t> indices;  // ascending
  double energy = 0.0;               // energy under the unpenalized QUBO
  double lambda = 0.0;               // penalty weight that produced it
  std::size_t attempts = 0;
};

inline constexpr std::size_t kMaxPenaltyEscalations = 6;

// Largest energy decrease any single variable can contribute, doubled.
inline double initial_penalty(const QuboMatrix& q) {
  double worst = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    double gain = std::abs(q.at(i, i));
    for (std::size_t j = 0; j < q.dim(); ++j)
      if (j != i) gain += std::max(0.0, -q.at(i, j));
    worst = std::max(worst, gain);
  }
  return worst > 0.0 ? 2.0 * worst : 1.0;
}

namespace detail {

inline std::vector<std::size_t> ones_of(const Assignment& x) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) idx.push_back(i);
  return idx;
}

}  // namespace detail

// Best exact-k subset under q_base, found by annealing q_base plus the
// cardinality penalty. The penalized problem is annealed after dividing by
// the largest |coefficient| of q_base, so the beta schedule is relative to the
// scale of the feature scores rather than nats; argmin is unaffected.
inline Selection select_k_features(const QuboMatrix& q_base, std::size_t k, const AnnealConfig& cfg,
                                   double tie_tolerance = 1e-9) {
  if (k < 1 || k > q_base.dim())
    throw ConfigError("select_k_features: k=" + std::to_string(k) + " outside [1, " + std::to_string(q_base.dim()) + "]");
  const double scale = q_base.max_abs_coefficient() > 0.0 ? q_base.max_abs_coefficient() : 1.0;
  double lambda = initial_penalty(q_base);

  for (std::size_t attempt = 0; attempt <= kMaxPenaltyEscalations; ++attempt, lambda *= 2.0) {
    AnnealConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {attempt});
    const auto penalized = apply_cardinality(q_base, k, lambda);
    const auto set = anneal(penalized.scaled(1.0 / scale), c);

    const bool best_feasible = detail::ones_of(set.best().x).size() == k;
    if (!best_feasible && attempt < kMaxPenaltyEscalations) continue;

    std::optional<Selection> pick;
    for (const auto& s : set.samples) {
      auto idx = detail::ones_of(s.x);
      if (idx.size() != k) continue;
      const double e = energy(q_base, s.x);
      if (!pick || e < pick->energy - tie_tolerance ||
          (e <= pick->energy + tie_tolerance && idx < pick->indices)) {
        pick = Selection{std::move(idx), e, lambda, attempt + 1};
      }
    }
    if (pick) return *pick;
  }
  throw SolverError("no sample with exactly " + std::to_string(k) + " selected features after " +
                    std::to_string(kMaxPenaltyEscalations) + " penalty escalations");
}

inline std::string assignment_string(const Assignment& x) {
  std::string s(x.size(), '0');
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) s[i] = '1';
  return s;
}

inline nlohmann::json to_json(const SampleSet& set) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : set.samples)
    samples.push_back({{"assignment", assignment_string(s.x)}, {"energy", s.energy}, {"occurrences", s.occurrences}});
  nlohmann::json j = {{"samples", samples}};
  if (set.runner_up_energy) j["runner_up_energy"] = *set.runner_up_energy;
  return j;
}

}  // namespace qfs
