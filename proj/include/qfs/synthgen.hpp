#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfs/dataset.hpp"
#include "qfs/error.hpp"
#include "qfs/random.hpp"

namespace qfs::synth {

// Survey-shaped synthetic data: i.i.d. uniform Likert features, linear
// targets over a planted informative subset, optional near-duplicate copies
// of informative features, optional missing cells.
struct SynthSpec {
  std::size_t n_rows = 1000;
  std::size_t n_features = 40;
  std::size_t n_informative = 10;
  int likert_levels = 5;
  std::vector<double> signal_weights;  // one per informative feature; empty = all 1
  double noise_sd = 1.0;
  double missing_rate = 0.0;
  double missing_column_fraction = 0.25;  // share of feature columns that receive missing cells
  std::vector<std::string> target_names{"y"};
  // Targets after the first keep this many of the first target's informative
  // features and replace the rest with fresh ones.
  std::size_t shared_informative = std::numeric_limits<std::size_t>::max();
  // Redundancy knob: each of the first `redundant_sources` informative
  // features of the first target gets `copies_per_source` extra columns that
  // repeat its value with probability copy_fidelity (else a fresh draw).
  std::size_t redundant_sources = 0;
  std::size_t copies_per_source = 0;
  double copy_fidelity = 1.0;
  // Same construction over non-informative columns: `noise_sources` noise
  // features each get `noise_copies` near-duplicates.
  std::size_t noise_sources = 0;
  std::size_t noise_copies = 0;
  double noise_copy_fidelity = 1.0;
  std::string feature_prefix = "q";
  std::uint64_t seed = 0;

  std::size_t shared() const { return std::min(shared_informative, n_informative); }

  std::size_t slots_needed() const {
    const std::size_t extra_targets = target_names.empty() ? 0 : target_names.size() - 1;
    return n_informative + extra_targets * (n_informative - shared()) + redundant_sources * copies_per_source +
           noise_sources * (1 + noise_copies);
  }

  void validate() const {
    if (n_rows < 2) throw ConfigError("synth: n_rows must be >= 2");
    if (n_features < 1) throw ConfigError("synth: n_features must be >= 1");
    if (n_informative > n_features) throw ConfigError("synth: n_informative exceeds n_features");
    if (likert_levels < 2) throw ConfigError("synth: likert_levels must be >= 2");
    if (!signal_weights.empty() && signal_weights.size() != n_informative)
      throw ConfigError("synth: signal_weights must have n_informative entries");
    if (!(noise_sd >= 0.0)) throw ConfigError("synth: noise_sd must be non-negative");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("synth: missing_rate must lie in [0, 1)");
    if (!(missing_column_fraction >= 0.0 && missing_column_fraction <= 1.0))
      throw ConfigError("synth: missing_column_fraction must lie in [0, 1]");
    if (target_names.empty()) throw ConfigError("synth: at least one target name required");
    if (redundant_sources > n_informative) throw ConfigError("synth: redundant_sources exceeds n_informative");
    if (!(copy_fidelity >= 0.0 && copy_fidelity <= 1.0)) throw ConfigError("synth: copy_fidelity must lie in [0, 1]");
    if (!(noise_copy_fidelity >= 0.0 && noise_copy_fidelity <= 1.0))
      throw ConfigError("synth: noise_copy_fidelity must lie in [0, 1]");
    if (slots_needed() > n_features)
      throw ConfigError("synth: informative sets and copies need " + std::to_string(slots_needed()) +
                        " feature columns, only " + std::to_string(n_features) + " available");
  }

  double weight(std::size_t i) const { return signal_weights.empty() ? 1.0 : signal_weights[i]; }
};

struct RedundancyGroup {
  std::size_t source = 0;
  bool informative = true;
  std::vector<std::size_t> copies;
};

struct GroundTruth {
  std::vector<std::string> target_names;
  std::vector<std::vector<std::size_t>> informative;  // per target, feature indices
  std::vector<std::vector<double>> weights;           // per target, aligned with informative
  std::vector<RedundancyGroup> redundancy;
  std::vector<std::size_t> missing_columns;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;

  std::vector<std::string> informative_names(std::size_t t) const {
    std::vector<std::string> out;
    for (auto i : informative.at(t)) out.push_back(feature_names[i]);
    return out;
  }
};

struct SynthOutput {
  RawTable table;
  GroundTruth truth;
};

inline SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_rows;
  const std::size_t p = spec.n_features;
  const std::size_t n_targets = spec.target_names.size();

  GroundTruth gt;
  gt.seed = spec.seed;
  gt.target_names = spec.target_names;
  for (std::size_t j = 0; j < p; ++j) gt.feature_names.push_back(spec.feature_prefix + std::to_string(j + 1));

  // Slot assignment from one random permutation of the feature columns.
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng layout(derive_seed(spec.seed, {0}));
  layout.shuffle(perm.begin(), perm.end());
  std::size_t cursor = 0;
  gt.informative.resize(n_targets);
  gt.weights.resize(n_targets);
  for (std::size_t i = 0; i < spec.n_informative; ++i) gt.informative[0].push_back(perm[cursor++]);
  for (std::size_t t = 1; t < n_targets; ++t) {
    gt.informative[t].assign(gt.informative[0].begin(), gt.informative[0].begin() + static_cast<std::ptrdiff_t>(spec.shared()));
    while (gt.informative[t].size() < spec.n_informative) gt.informative[t].push_back(perm[cursor++]);
  }
  for (std::size_t t = 0; t < n_targets; ++t)
    for (std::size_t i = 0; i < spec.n_informative; ++i) gt.weights[t].push_back(spec.weight(i));
  for (std::size_t s = 0; s < spec.redundant_sources; ++s) {
    RedundancyGroup g;
    g.source = gt.informative[0][s];
    for (std::size_t c = 0; c < spec.copies_per_source; ++c) g.copies.push_back(perm[cursor++]);
    gt.redundancy.push_back(std::move(g));
  }
  for (std::size_t s = 0; s < spec.noise_sources; ++s) {
    RedundancyGroup g;
    g.source = perm[cursor++];
    g.informative = false;
    for (std::size_t c = 0; c < spec.noise_copies; ++c) g.copies.push_back(perm[cursor++]);
    gt.redundancy.push_back(std::move(g));
  }

  const auto likert = [&](Rng& r) { return static_cast<double>(1 + r.below(static_cast<std::uint64_t>(spec.likert_levels))); };
  std::vector<std::vector<double>> feat(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) {
    Rng r(derive_seed(spec.seed, {1, j}));
    for (auto& v : feat[j]) v = likert(r);
  }
  for (const auto& g : gt.redundancy) {
    const double fidelity = g.informative ? spec.copy_fidelity : spec.noise_copy_fidelity;
    for (auto c : g.copies) {
      Rng r(derive_seed(spec.seed, {2, c}));
      for (std::size_t i = 0; i < n; ++i) {
        const double fresh = likert(r);
        feat[c][i] = r.uniform() < fidelity ? feat[g.source][i] : fresh;
      }
    }
  }

  std::vector<std::vector<double>> targets(n_targets, std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < n_targets; ++t) {
    Rng r(derive_seed(spec.seed, {3, t}));
    for (std::size_t i = 0; i < n; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k < gt.informative[t].size(); ++k) y += gt.weights[t][k] * feat[gt.informative[t][k]][i];
      targets[t][i] = y + spec.noise_sd * r.normal();
    }
  }

  std::vector<std::vector<Cell>> cols(p + n_targets, std::vector<Cell>(n));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = feat[j][i];
  for (std::size_t t = 0; t < n_targets; ++t)
    for (std::size_t i = 0; i < n; ++i) cols[p + t][i] = targets[t][i];

  if (spec.missing_rate > 0.0) {
    std::vector<std::size_t> candidates(p);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    Rng pick(derive_seed(spec.seed, {4}));
    pick.shuffle(candidates.begin(), candidates.end());
    const auto count = static_cast<std::size_t>(std::llround(spec.missing_column_fraction * static_cast<double>(p)));
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    gt.missing_columns = candidates;
    for (auto j : candidates) {
      Rng r(derive_seed(spec.seed, {5, j}));
      for (std::size_t i = 0; i < n; ++i)
        if (r.uniform() < spec.missing_rate) cols[j][i].reset();
    }
  }

  std::vector<std::string> names = gt.feature_names;
  names.insert(names.end(), spec.target_names.begin(), spec.target_names.end());
  return {RawTable(std::move(names), std::move(cols)), std::move(gt)};
}

// 751 respondents, 161 candidate features, before/after targets whose
// informative sets overlap in 14 of 20 features.
inline SynthSpec paper_shaped_preset(std::uint64_t seed = 0) {
  SynthSpec s;
  s.n_rows = 751;
  s.n_features = 161;
  s.n_informative = 20;
  s.signal_weights.resize(s.n_informative);
  for (std::size_t i = 0; i < s.n_informative; ++i)
    s.signal_weights[i] = 1.5 - static_cast<double>(i) / static_cast<double>(s.n_informative - 1);
  s.noise_sd = 3.0;
  s.target_names = {"depression_before", "depression_after"};
  s.shared_informative = 14;
  s.seed = seed;
  return s;
}

// 40 features, 10 informative; the planted-signal recovery setting.
inline SynthSpec planted_preset(std::uint64_t seed = 0) {
  SynthSpec s;
  s.n_rows = 1000;
  s.n_features = 40;
  s.n_informative = 10;
  s.noise_sd = 0.5;
  s.seed = seed;
  return s;
}

// Planted signal plus 36 noise columns that each come with two copies agreeing
// on all but ~0.2% of rows. The near-collinear noise triples inflate OLS
// coefficient variance, so coefficient-magnitude rankings fill up with noise
// while their mutual information with the target stays near zero.
inline SynthSpec redundant_preset(std::uint64_t seed = 0) {
  SynthSpec s;
  s.n_rows = 1000;
  s.n_features = 120;
  s.n_informative = 10;
  s.noise_sd = 3.0;
  s.noise_sources = 36;
  s.noise_copies = 2;
  s.noise_copy_fidelity = 0.998;
  s.seed = seed;
  return s;
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  nlohmann::json targets = nlohmann::json::array();
  for (std::size_t t = 0; t < gt.target_names.size(); ++t)
    targets.push_back({{"name", gt.target_names[t]},
                       {"informative", gt.informative_names(t)},
                       {"informative_indices", gt.informative[t]},
                       {"weights", gt.weights[t]}});
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : gt.redundancy) {
    nlohmann::json copies = nlohmann::json::array();
    for (auto c : g.copies) copies.push_back(gt.feature_names[c]);
    groups.push_back({{"source", gt.feature_names[g.source]}, {"informative", g.informative}, {"copies", copies}});
  }
  nlohmann::json missing = nlohmann::json::array();
  for (auto c : gt.missing_columns) missing.push_back(gt.feature_names[c]);
  return {{"seed", gt.seed}, {"targets", targets}, {"redundancy_groups", groups}, {"missing_columns", missing}};
}

inline SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec base = {}) {
  try {
    base.n_rows = j.value("n_rows", base.n_rows);
    base.n_features = j.value("n_features", base.n_features);
    base.n_informative = j.value("n_informative", base.n_informative);
    base.likert_levels = j.value("likert_levels", base.likert_levels);
    base.signal_weights = j.value("signal_weights", base.signal_weights);
    base.noise_sd = j.value("noise_sd", base.noise_sd);
    base.missing_rate = j.value("missing_rate", base.missing_rate);
    base.missing_column_fraction = j.value("missing_column_fraction", base.missing_column_fraction);
    base.target_names = j.value("target_names", base.target_names);
    base.shared_informative = j.value("shared_informative", base.shared_informative);
    base.redundant_sources = j.value("redundant_sources", base.redundant_sources);
    base.copies_per_source = j.value("copies_per_source", base.copies_per_source);
    base.copy_fidelity = j.value("copy_fidelity", base.copy_fidelity);
    base.noise_sources = j.value("noise_sources", base.noise_sources);
    base.noise_copies = j.value("noise_copies", base.noise_copies);
    base.noise_copy_fidelity = j.value("noise_copy_fidelity", base.noise_copy_fidelity);
    base.feature_prefix = j.value("feature_prefix", base.feature_prefix);
    base.seed = j.value("seed", base.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  return base;
}

}  // namespace qfs::synth
