#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointsource/model/forward_model.hpp"
#include "pointsource/util/rng.hpp"

namespace ps {

enum class ExperimentKind { Fast1D, Fast2D, Biased1D, Biased2D };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Fast1D: return "fast1d";
    case ExperimentKind::Fast2D: return "fast2d";
    case ExperimentKind::Biased1D: return "biased1d";
    case ExperimentKind::Biased2D: return "biased2d";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "fast1d") return ExperimentKind::Fast1D;
  if (s == "fast2d") return ExperimentKind::Fast2D;
  if (s == "biased1d") return ExperimentKind::Biased1D;
  if (s == "biased2d") return ExperimentKind::Biased2D;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

inline int experiment_dim(ExperimentKind k) {
  return (k == ExperimentKind::Fast1D || k == ExperimentKind::Biased1D) ? 1 : 2;
}

inline bool experiment_biased(ExperimentKind k) {
  return k == ExperimentKind::Biased1D || k == ExperimentKind::Biased2D;
}

/// Noise level and regularisation parameters per experiment, plus the model geometry.
struct ExperimentParams {
  ExperimentKind kind = ExperimentKind::Fast1D;
  double noise_std = 0.2;
  double alpha = 0.06;
  double lambda = 0.0;        ///< TV weight of the bias (biased kinds only)
  int sensors_per_axis = 100;
  double spread_width = 0.05; ///< half-width of the cubic spread ψ
  std::uint64_t seed = 0;

  static ExperimentParams defaults(ExperimentKind k) {
    ExperimentParams p;
    p.kind = k;
    switch (k) {
      case ExperimentKind::Fast1D:
        p.noise_std = 0.2, p.alpha = 0.06, p.sensors_per_axis = 100, p.spread_width = 0.05;
        break;
      case ExperimentKind::Fast2D:
        p.noise_std = 0.15, p.alpha = 0.12, p.sensors_per_axis = 16, p.spread_width = 0.1;
        break;
      case ExperimentKind::Biased1D:
        p.noise_std = 0.1, p.alpha = 0.2, p.lambda = 0.02, p.sensors_per_axis = 100, p.spread_width = 0.05;
        break;
      case ExperimentKind::Biased2D:
        p.noise_std = 0.15, p.alpha = 0.06, p.lambda = 0.005, p.sensors_per_axis = 16, p.spread_width = 0.1;
        break;
    }
    return p;
  }
};

struct Observation {
  std::vector<double> b;
  std::vector<double> clean;
  double noise_std = 0.0;
  double snr_db = 0.0;
};

template <int Dim>
struct Experiment {
  ExperimentParams params;
  ForwardModel<Dim> model;
  DiscreteMeasure<Dim> truth;
  std::vector<double> bias;  ///< ẑ on the sensor grid; empty for unbiased kinds
  Observation obs;
};

/// Spread ψ normalised to unit mass so that sensor readings carry the physical amplitude of the spikes.
template <int Dim>
Kernel<Dim> experiment_spread(double width) {
  return fast_spread<Dim>(width).scaled(1.0 / std::pow(width, Dim));
}

template <int Dim>
ForwardModel<Dim> experiment_model(const ExperimentParams& p) {
  std::array<int, Dim> counts;
  counts.fill(p.sensors_per_axis);
  SensorGrid<Dim> grid(Domain<Dim>::unit(), counts);
  return make_sensor_model<Dim>(grid, experiment_spread<Dim>(p.spread_width));
}

/// Four spikes in the interior 10–90% of Ω, pairwise separated by 4 sensor spacings,
/// with pairwise distinct weights in [2, 10].
template <int Dim>
DiscreteMeasure<Dim> ground_truth(const SensorGrid<Dim>& grid, Rng& rng) {
  const double sep = 4.0 * grid.min_spacing();
  std::vector<Spike<Dim>> spikes;
  while (spikes.size() < 4) {
    Point<Dim> x;
    for (int a = 0; a < Dim; ++a) {
      const double lo = grid.domain.lower[a], hi = grid.domain.upper[a];
      x[a] = rng.uniform(lo + 0.1 * (hi - lo), lo + 0.9 * (hi - lo));
    }
    bool ok = true;
    for (const auto& s : spikes) ok = ok && norm<Dim>(s.x - x) >= sep;
    if (ok) spikes.push_back({x, 0.0});
  }
  for (std::size_t j = 0; j < spikes.size(); ++j) {
    for (;;) {
      const double w = rng.uniform(2.0, 10.0);
      bool ok = true;
      for (std::size_t k = 0; k < j; ++k) ok = ok && std::abs(spikes[k].w - w) >= 0.5;
      if (ok) {
        spikes[j].w = w;
        break;
      }
    }
  }
  return DiscreteMeasure<Dim>(std::move(spikes));
}

/// ẑ = 0.5·χ_{S₁} − 0.3·χ_{S₂} sampled at the sensors: intervals in 1D, Euclidean balls in 2D.
template <int Dim>
std::vector<double> bias_field(const SensorGrid<Dim>& grid) {
  std::vector<double> z(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point<Dim> c = grid.center(i);
    if constexpr (Dim == 1) {
      if (c[0] >= 0.15 && c[0] <= 0.35) z[i] += 0.5;
      if (c[0] >= 0.6 && c[0] <= 0.85) z[i] -= 0.3;
    } else {
      if (norm<Dim>(c - Point<Dim>{0.3, 0.3}) <= 0.15) z[i] += 0.5;
      if (norm<Dim>(c - Point<Dim>{0.7, 0.65}) <= 0.2) z[i] -= 0.3;
    }
  }
  return z;
}

template <int Dim>
Experiment<Dim> generate_experiment(const ExperimentParams& params) {
  if (experiment_dim(params.kind) != Dim) throw std::invalid_argument("generate_experiment: dimension mismatch");
  Rng rng(params.seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  ForwardModel<Dim> model = experiment_model<Dim>(params);
  DiscreteMeasure<Dim> truth = ground_truth<Dim>(model.grid(), rng);
  Observation obs;
  obs.noise_std = params.noise_std;
  obs.clean = model.apply(truth);
  std::vector<double> bias;
  if (experiment_biased(params.kind)) {
    bias = bias_field<Dim>(model.grid());
    for (std::size_t i = 0; i < bias.size(); ++i) obs.clean[i] += bias[i];
  }
  obs.b = obs.clean;
  double sig = 0.0, noi = 0.0;
  for (std::size_t i = 0; i < obs.b.size(); ++i) {
    const double n = params.noise_std * rng.normal();
    obs.b[i] += n;
    sig += obs.clean[i] * obs.clean[i];
    noi += n * n;
  }
  obs.snr_db = noi > 0 ? 10.0 * std::log10(sig / noi) : std::numeric_limits<double>::infinity();
  return Experiment<Dim>{params, std::move(model), std::move(truth), std::move(bias), std::move(obs)};
}

}  // namespace ps
