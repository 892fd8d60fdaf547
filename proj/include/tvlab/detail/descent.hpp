#pragma once

#include <functional>

#include "tvlab/geom.hpp"

namespace tvlab::detail {

using Objective = std::function<double(const Vec&)>;

struct LocalResult {
  Vec x;
  double fx = 0.0;
};

// Standard Nelder-Mead with an evaluation budget; deterministic.
LocalResult nelder_mead(const Objective& fn, const Vec& x0, double step, int max_evals);

// Coordinate pattern search with halving steps; polishes a local minimum.
LocalResult compass_polish(const Objective& fn, Vec x, double fx, double step, double min_step);

}  // namespace tvlab::detail
