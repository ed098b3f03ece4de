#pragma once

// Shared helpers for tests: seeded random models and boxes, and a scalar
// reference forward pass written directly from the raw parameter layout.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cdfest/mixture_cdf.hpp"
#include "cdfest/monotone_net.hpp"

namespace cdfest::testing {

inline std::vector<ColumnMeta> numeric_columns(std::size_t d) {
  std::vector<ColumnMeta> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j].name = "c" + std::to_string(j);
  return cols;
}

inline MixtureCdf random_model(std::size_t m, std::size_t d, std::uint64_t seed,
                               NetShape shape = {}) {
  return MixtureCdf::initialized(m, shape, numeric_columns(d), seed);
}

/// Perturb every raw parameter so tests do not only see the initializer's
/// structure (all logits equal, tight weight distribution).
inline void jitter(MixtureCdf& model, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : model.raw_logits()) v += n(rng);
  for (double& v : model.raw_parameters()) v += n(rng);
  model.refresh();
}

/// Random box: each side independently a sentinel (p = 0.15) or finite in
/// [-2.5, 2.5]; lower <= upper unless `allow_inverted`.
inline QueryBox random_box(std::size_t d, std::mt19937_64& rng, bool allow_inverted = false) {
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  std::bernoulli_distribution sentinel(0.15);
  QueryBox box(d);
  for (std::size_t j = 0; j < d; ++j) {
    double a = u(rng);
    double b = u(rng);
    if (!allow_inverted && a > b) std::swap(a, b);
    box[j].lower = sentinel(rng) ? Endpoint::neg_inf() : Endpoint::finite(a);
    box[j].upper = sentinel(rng) ? Endpoint::pos_inf() : Endpoint::finite(b);
  }
  return box;
}

/// Scalar reference evaluation of one net from its *raw* parameters.
struct ReferenceNet {
  NetShape shape;
  std::vector<double> raw;

  static double softplus(double v) { return std::log1p(std::exp(-std::fabs(v))) + std::max(v, 0.0); }

  double logit(double x) const {
    double dz = 0.0;
    return logit(x, dz);
  }

  /// Also returns dz/dx by forward-mode differentiation.
  double logit(double x, double& dz) const {
    const int r = shape.width;
    std::size_t off = 0;
    std::vector<double> h(1, x);
    std::vector<double> dh(1, 1.0);
    for (int layer = 0; layer < shape.depth; ++layer) {
      const std::size_t in = h.size();
      std::vector<double> w(raw.begin() + off, raw.begin() + off + in * r);
      off += in * r;
      std::vector<double> b(raw.begin() + off, raw.begin() + off + r);
      off += r;
      std::vector<double> g(raw.begin() + off, raw.begin() + off + r);
      off += r;
      std::vector<double> next(r), dnext(r);
      for (int o = 0; o < r; ++o) {
        double t = b[o];
        double dt = 0.0;
        for (std::size_t i = 0; i < in; ++i) {
          t += softplus(w[o * in + i]) * h[i];
          dt += softplus(w[o * in + i]) * dh[i];
        }
        const double gain = std::tanh(g[o]);
        const double s = std::tanh(t);
        next[o] = t + gain * s;
        dnext[o] = (1.0 + gain * (1.0 - s * s)) * dt;
      }
      h = std::move(next);
      dh = std::move(dnext);
    }
    double z = raw[off + r];
    dz = 0.0;
    for (int i = 0; i < r; ++i) {
      z += softplus(raw[off + i]) * h[i];
      dz += softplus(raw[off + i]) * dh[i];
    }
    return z;
  }

  double phi(double x) const { return 1.0 / (1.0 + std::exp(-logit(x))); }

  double density(double x) const {
    double dz = 0.0;
    const double p = 1.0 / (1.0 + std::exp(-logit(x, dz)));
    return p * (1.0 - p) * dz;
  }
};

inline ReferenceNet reference_net(const MixtureCdf& model, std::size_t i, std::size_t j) {
  const std::size_t P = model.net_parameter_count();
  const auto raw = model.raw_parameters().subspan((i * model.dims() + j) * P, P);
  return ReferenceNet{model.net_shape(), std::vector<double>(raw.begin(), raw.end())};
}

}  // namespace cdfest::testing
