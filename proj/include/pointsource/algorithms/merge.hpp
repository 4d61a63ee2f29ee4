#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "pointsource/algorithms/config.hpp"
#include "pointsource/core/measure.hpp"

namespace ps {

struct MergeStats {
  int accepted = 0;
  int rejected = 0;
};

/// Greedy pairwise merging of spikes closer than the policy radius, closest pairs first.
/// interpolate: the pair becomes one spike at the weighted centroid; move-mass: the lighter spike's weight
/// moves onto the heavier one. Each candidate is accepted only if value(new) ≤ value(old) + gate.
template <int Dim>
DiscreteMeasure<Dim> merge_spikes(const DiscreteMeasure<Dim>& mu, const MergePolicy& policy,
                                  const std::function<double(const DiscreteMeasure<Dim>&)>& value, double gate,
                                  MergeStats* stats = nullptr) {
  MergeStats st;
  if (policy.kind == MergePolicy::Kind::None || mu.size() < 2) {
    if (stats) *stats = st;
    return mu;
  }
  DiscreteMeasure<Dim> cur = mu;
  double v_cur = value(cur);
  std::set<std::pair<std::size_t, std::size_t>> tried;  // indices into the current measure
  for (;;) {
    const auto& sp = cur.spikes();
    double best = policy.radius;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < sp.size(); ++i)
      for (std::size_t j = i + 1; j < sp.size(); ++j) {
        const double d = norm<Dim>(sp[i].x - sp[j].x);
        if (d < best && !tried.count({i, j})) {
          best = d;
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) break;
    const Spike<Dim> a = sp[bi], b = sp[bj];
    Spike<Dim> m;
    m.w = a.w + b.w;
    if (policy.kind == MergePolicy::Kind::Interpolate) {
      const double wa = std::abs(a.w), wb = std::abs(b.w);
      const double t = (wa + wb) > 0 ? wb / (wa + wb) : 0.5;
      m.x = a.x + t * (b.x - a.x);
    } else {
      m.x = std::abs(a.w) >= std::abs(b.w) ? a.x : b.x;
    }
    DiscreteMeasure<Dim> cand(cur.mode());
    for (std::size_t k = 0; k < sp.size(); ++k)
      if (k != bi && k != bj) cand.add(sp[k].x, sp[k].w);
    if (m.w != 0.0) cand.add(m.x, m.w);
    const double v_cand = value(cand);
    if (v_cand <= v_cur + gate) {
      ++st.accepted;
      cur = std::move(cand);
      v_cur = v_cand;
      tried.clear();
    } else {
      ++st.rejected;
      tried.insert({bi, bj});
    }
  }
  if (stats) *stats = st;
  return cur;
}

}  // namespace ps
