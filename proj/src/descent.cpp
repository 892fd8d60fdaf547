#include "tvlab/detail/descent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace tvlab::detail {

LocalResult nelder_mead(const Objective& fn, const Vec& x0, double step, int max_evals) {
  const int n = static_cast<int>(x0.size());
  std::vector<Vec> xs(static_cast<size_t>(n + 1), x0);
  std::vector<double> fs(static_cast<size_t>(n + 1));
  for (int i = 0; i < n; ++i) xs[static_cast<size_t>(i + 1)][static_cast<size_t>(i)] += step;
  int evals = 0;
  for (int i = 0; i <= n; ++i) {
    fs[static_cast<size_t>(i)] = fn(xs[static_cast<size_t>(i)]);
    ++evals;
  }

  std::vector<int> order(static_cast<size_t>(n + 1));
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return fs[static_cast<size_t>(a)] < fs[static_cast<size_t>(b)];
    });
    const int best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (fs[static_cast<size_t>(worst)] - fs[static_cast<size_t>(best)] <
        1e-13 * (1.0 + std::abs(fs[static_cast<size_t>(best)])))
      break;

    Vec centroid = zeros(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) axpy(centroid, 1.0 / n, xs[static_cast<size_t>(i)]);

    const auto blend = [&](double t) {
      Vec p = centroid;
      axpy(p, t, sub(xs[static_cast<size_t>(worst)], centroid));
      return p;
    };

    Vec xr = blend(-1.0);
    const double fr = fn(xr);
    ++evals;
    if (fr < fs[static_cast<size_t>(best)]) {
      Vec xe = blend(-2.0);
      const double fe = fn(xe);
      ++evals;
      if (fe < fr) {
        xs[static_cast<size_t>(worst)] = std::move(xe);
        fs[static_cast<size_t>(worst)] = fe;
      } else {
        xs[static_cast<size_t>(worst)] = std::move(xr);
        fs[static_cast<size_t>(worst)] = fr;
      }
    } else if (fr < fs[static_cast<size_t>(second)]) {
      xs[static_cast<size_t>(worst)] = std::move(xr);
      fs[static_cast<size_t>(worst)] = fr;
    } else {
      const bool outside = fr < fs[static_cast<size_t>(worst)];
      Vec xc = blend(outside ? -0.5 : 0.5);
      const double fc = fn(xc);
      ++evals;
      if (fc < std::min(fr, fs[static_cast<size_t>(worst)])) {
        xs[static_cast<size_t>(worst)] = std::move(xc);
        fs[static_cast<size_t>(worst)] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {  // shrink toward the best vertex
          if (i == best) continue;
          Vec& xi = xs[static_cast<size_t>(i)];
          for (int j = 0; j < n; ++j)
            xi[static_cast<size_t>(j)] =
                0.5 * (xi[static_cast<size_t>(j)] + xs[static_cast<size_t>(best)][static_cast<size_t>(j)]);
          fs[static_cast<size_t>(i)] = fn(xi);
          ++evals;
        }
      }
    }
  }

  size_t arg = 0;
  for (size_t i = 1; i < fs.size(); ++i)
    if (fs[i] < fs[arg]) arg = i;
  return {xs[arg], fs[arg]};
}

LocalResult compass_polish(const Objective& fn, Vec x, double fx, double step, double min_step) {
  const int n = static_cast<int>(x.size());
  while (step > min_step) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vec y = x;
        y[static_cast<size_t>(i)] += sgn * step;
        const double fy = fn(y);
        if (fy < fx - 1e-15 * (1.0 + std::abs(fx))) {
          x = std::move(y);
          fx = fy;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {std::move(x), fx};
}


}  // namespace tvlab::detail
