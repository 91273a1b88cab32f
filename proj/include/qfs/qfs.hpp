#pragma once

#include "qfs/error.hpp"
#include "qfs/random.hpp"
#include "qfs/parallel.hpp"
#include "qfs/dataset.hpp"
#include "qfs/infotheory.hpp"
#include "qfs/qubo.hpp"
#include "qfs/solver.hpp"
#include "qfs/ols.hpp"
#include "qfs/ranking.hpp"
#include "qfs/metrics.hpp"
#include "qfs/gbt.hpp"
#include "qfs/evaluator.hpp"
#include "qfs/synthgen.hpp"
#include "qfs/cli.hpp"
