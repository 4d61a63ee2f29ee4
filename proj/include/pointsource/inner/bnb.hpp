#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "pointsource/core/point.hpp"
#include "pointsource/kernels/certificate.hpp"
#include "pointsource/util/parallel.hpp"

namespace ps {

enum class BnBMode { Min, Max };

template <int Dim>
struct BnBTask {
  const CertificateFunction<Dim>* objective = nullptr;
  Domain<Dim> box;
  double tolerance = 1e-6;
  BnBMode mode = BnBMode::Min;
  std::size_t max_boxes = 4000000;
  int initial_splits = 16;  ///< initial uniform subdivision per axis
};

template <int Dim>
struct BnBResult {
  Point<Dim> x{};
  double value = 0.0;        ///< objective value at x (in the original sign)
  double lower_bound = 0.0;  ///< certified bound on the optimum (lower for Min, upper for Max)
  double gap = 0.0;          ///< |value − bound|
  std::size_t boxes = 0;
  bool converged = false;
};

/// Best-first Lipschitz branch-and-bound over a box.
/// Each box is bounded below by max(f(c) − L·R, f(c) − |∇f(c)|·R − ½L_∇R²) with constants
/// restricted to the bumps touching the box and R the half-diagonal. Boxes are popped in fixed
/// batches ordered by (bound, centre), children are evaluated in parallel into indexed slots and
/// merged serially, so the result does not depend on the worker count.
template <int Dim>
BnBResult<Dim> bnb_minimize(const BnBTask<Dim>& task, WorkerPool* pool = nullptr) {
  const CertificateFunction<Dim>& f = *task.objective;
  const double sgn = task.mode == BnBMode::Min ? 1.0 : -1.0;

  struct Box {
    Point<Dim> lo, hi;
    double value;  // sign-adjusted value at centre
    double bound;  // sign-adjusted lower bound
    Point<Dim> center;
  };
  auto center_of = [](const Point<Dim>& lo, const Point<Dim>& hi) {
    Point<Dim> c;
    for (int a = 0; a < Dim; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
    return c;
  };
  auto evaluate = [&](Box& b) {
    b.center = center_of(b.lo, b.hi);
    auto info = f.eval_box(b.lo, b.hi);
    const double R = 0.5 * norm<Dim>(b.hi - b.lo);
    b.value = sgn * info.value;
    const double cone = b.value - info.lip * R;
    const double quad = b.value - norm<Dim>(info.grad) * R - 0.5 * info.lip_grad * R * R;
    b.bound = std::max(cone, quad);
    if (!std::isfinite(b.bound)) b.bound = -std::numeric_limits<double>::infinity();
  };
  auto worse = [](const Box& a, const Box& b) {
    // priority_queue pops the largest; we want the smallest bound, then lexicographically smallest centre.
    if (a.bound != b.bound) return a.bound > b.bound;
    return lex_less<Dim>(b.center, a.center);
  };
  std::priority_queue<Box, std::vector<Box>, decltype(worse)> queue(worse);

  BnBResult<Dim> res;
  double best = std::numeric_limits<double>::infinity();
  // Smallest bound among discarded boxes; each was within the tolerance of the best value at the time.
  double pruned = std::numeric_limits<double>::infinity();
  Point<Dim> best_x = task.box.lower;
  auto offer = [&](const Box& b) {
    if (b.value < best || (b.value == best && lex_less<Dim>(b.center, best_x))) {
      best = b.value;
      best_x = b.center;
    }
  };

  // Initial uniform subdivision.
  {
    const int s = std::max(1, task.initial_splits);
    std::size_t total = 1;
    for (int a = 0; a < Dim; ++a) total *= static_cast<std::size_t>(s);
    std::vector<Box> init(total);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t r = t;
      for (int a = 0; a < Dim; ++a) {
        const int k = static_cast<int>(r % s);
        r /= s;
        const double w = (task.box.upper[a] - task.box.lower[a]) / s;
        init[t].lo[a] = task.box.lower[a] + k * w;
        init[t].hi[a] = k == s - 1 ? task.box.upper[a] : task.box.lower[a] + (k + 1) * w;
      }
    }
    parallel_for(pool, init.size(), [&](std::size_t i) { evaluate(init[i]); });
    res.boxes += init.size();
    for (const auto& b : init) offer(b);
    for (const auto& b : init) {
      if (b.bound < best - task.tolerance)
        queue.push(b);
      else
        pruned = std::min(pruned, b.bound);
    }
  }

  constexpr std::size_t batch = 32;
  std::vector<Box> children;
  children.reserve(2 * batch);
  while (!queue.empty() && res.boxes < task.max_boxes) {
    if (queue.top().bound >= best - task.tolerance) break;
    children.clear();
    for (std::size_t k = 0; k < batch && !queue.empty(); ++k) {
      Box b = queue.top();
      if (b.bound >= best - task.tolerance) break;
      queue.pop();
      int axis = 0;
      for (int a = 1; a < Dim; ++a)
        if (b.hi[a] - b.lo[a] > b.hi[axis] - b.lo[axis]) axis = a;
      const double mid = 0.5 * (b.lo[axis] + b.hi[axis]);
      Box l = b, r = b;
      l.hi[axis] = mid;
      r.lo[axis] = mid;
      children.push_back(l);
      children.push_back(r);
    }
    parallel_for(pool, children.size(), [&](std::size_t i) { evaluate(children[i]); });
    res.boxes += children.size();
    for (const auto& c : children) offer(c);
    for (const auto& c : children) {
      if (c.bound < best - task.tolerance)
        queue.push(c);
      else
        pruned = std::min(pruned, c.bound);
    }
  }

  double bound = std::min(best, pruned);
  if (!queue.empty()) bound = std::min(best, queue.top().bound);
  res.x = best_x;
  res.value = sgn * best;
  res.lower_bound = sgn * bound;
  res.gap = best - bound;
  res.converged = res.gap <= task.tolerance;
  return res;
}

}  // namespace ps
