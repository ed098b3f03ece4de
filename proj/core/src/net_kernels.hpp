#pragma once

// Lane-batched forward/backward kernels for MonotoneNet. A "lane" is one scalar
// input; all lanes of a call share one network's effective parameters.
//
// Storage is structure-of-arrays: value of (layer, unit, lane) lives at
// [(layer * width + unit) * capacity + lane].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cdfest/monotone_net.hpp"
#include "vmath.hpp"

namespace cdfest::detail {

struct Layout {
  int depth = 0;
  int width = 0;
  std::size_t layer_weight[NetShape::kMaxDepth] = {};
  std::size_t layer_bias[NetShape::kMaxDepth] = {};
  std::size_t layer_gain[NetShape::kMaxDepth] = {};
  std::size_t out_weight = 0;
  std::size_t out_bias = 0;
  std::size_t total = 0;

  explicit Layout(const NetShape& shape) : depth(shape.depth), width(shape.width) {
    std::size_t off = 0;
    const std::size_t r = static_cast<std::size_t>(width);
    for (int k = 0; k < depth; ++k) {
      layer_weight[k] = off;
      off += (k == 0) ? r : r * r;
      layer_bias[k] = off;
      off += r;
      layer_gain[k] = off;
      off += r;
    }
    out_weight = off;
    off += r;
    out_bias = off;
    off += 1;
    total = off;
  }
};

struct NetWorkspace {
  std::size_t capacity = 0;
  std::size_t width = 0;
  std::vector<double> t, s, h, dt, dh;  // per (layer, unit, lane)
  std::vector<double> z, dz, aux;       // per lane
  std::vector<double> bar_h, bar_dh, bar_t, bar_dt;  // per (unit, lane), current layer

  void reserve(const NetShape& shape, std::size_t lanes) {
    const std::size_t units = static_cast<std::size_t>(shape.depth * shape.width);
    if (capacity >= lanes && width == static_cast<std::size_t>(shape.width) && t.size() >= units * capacity) {
      return;
    }
    capacity = std::max(capacity, lanes);
    const std::size_t cells = units * capacity;
    width = static_cast<std::size_t>(shape.width);
    t.assign(cells, 0.0);
    s.assign(cells, 0.0);
    h.assign(cells, 0.0);
    dt.assign(cells, 0.0);
    dh.assign(cells, 0.0);
    z.assign(capacity, 0.0);
    dz.assign(capacity, 0.0);
    aux.assign(capacity, 0.0);
    const std::size_t per_layer = width * capacity;
    bar_h.assign(per_layer, 0.0);
    bar_dh.assign(per_layer, 0.0);
    bar_t.assign(per_layer, 0.0);
    bar_dt.assign(per_layer, 0.0);
  }

  std::size_t cell(int layer, int unit) const {
    return (static_cast<std::size_t>(layer) * width + static_cast<std::size_t>(unit)) * capacity;
  }
};

/// Forward pass for n lanes. Fills t, s, h and z; with `tangent` also dt, dh and
/// dz = dz/dx.
inline void forward(const Layout& L, const double* p, const double* x, std::size_t n,
                    NetWorkspace& ws, bool tangent) {
  const int r = L.width;
  for (int layer = 0; layer < L.depth; ++layer) {
    const double* W = p + L.layer_weight[layer];
    const double* B = p + L.layer_bias[layer];
    for (int o = 0; o < r; ++o) {
      double* t = ws.t.data() + ws.cell(layer, o);
      double* dt = ws.dt.data() + ws.cell(layer, o);
      if (layer == 0) {
        const double w = W[o];
        const double b = B[o];
        for (std::size_t k = 0; k < n; ++k) t[k] = w * x[k] + b;
        if (tangent) {
          for (std::size_t k = 0; k < n; ++k) dt[k] = w;
        }
      } else {
        const double b = B[o];
        for (std::size_t k = 0; k < n; ++k) t[k] = b;
        if (tangent) {
          for (std::size_t k = 0; k < n; ++k) dt[k] = 0.0;
        }
        for (int i = 0; i < r; ++i) {
          const double w = W[o * r + i];
          const double* hp = ws.h.data() + ws.cell(layer - 1, i);
          for (std::size_t k = 0; k < n; ++k) t[k] += w * hp[k];
          if (tangent) {
            const double* dhp = ws.dh.data() + ws.cell(layer - 1, i);
            for (std::size_t k = 0; k < n; ++k) dt[k] += w * dhp[k];
          }
        }
      }
      vmath::tanh(t, ws.s.data() + ws.cell(layer, o), n);
    }
    const double* G = p + L.layer_gain[layer];
    for (int o = 0; o < r; ++o) {
      const double g = G[o];
      const double* t = ws.t.data() + ws.cell(layer, o);
      const double* s = ws.s.data() + ws.cell(layer, o);
      double* h = ws.h.data() + ws.cell(layer, o);
      for (std::size_t k = 0; k < n; ++k) h[k] = t[k] + g * s[k];
      if (tangent) {
        const double* dt = ws.dt.data() + ws.cell(layer, o);
        double* dh = ws.dh.data() + ws.cell(layer, o);
        for (std::size_t k = 0; k < n; ++k) dh[k] = (1.0 + g * (1.0 - s[k] * s[k])) * dt[k];
      }
    }
  }
  const double* Wo = p + L.out_weight;
  const double bo = p[L.out_bias];
  double* z = ws.z.data();
  for (std::size_t k = 0; k < n; ++k) z[k] = bo;
  for (int i = 0; i < r; ++i) {
    const double* h = ws.h.data() + ws.cell(L.depth - 1, i);
    for (std::size_t k = 0; k < n; ++k) z[k] += Wo[i] * h[k];
  }
  if (tangent) {
    double* dz = ws.dz.data();
    for (std::size_t k = 0; k < n; ++k) dz[k] = 0.0;
    for (int i = 0; i < r; ++i) {
      const double* dh = ws.dh.data() + ws.cell(L.depth - 1, i);
      for (std::size_t k = 0; k < n; ++k) dz[k] += Wo[i] * dh[k];
    }
  }
}

/// Primal forward pass of n different networks at one input x. Parameter q of
/// lane k is P[q * stride + k]. Same arithmetic per lane as `forward`.
inline void forward_across(const Layout& L, const double* P, std::size_t stride, double x, std::size_t n,
                           NetWorkspace& ws) {
  const int r = L.width;
  for (int layer = 0; layer < L.depth; ++layer) {
    const std::size_t W = L.layer_weight[layer];
    const std::size_t B = L.layer_bias[layer];
    for (int o = 0; o < r; ++o) {
      double* t = ws.t.data() + ws.cell(layer, o);
      const double* b = P + (B + static_cast<std::size_t>(o)) * stride;
      if (layer == 0) {
        const double* w = P + (W + static_cast<std::size_t>(o)) * stride;
        for (std::size_t k = 0; k < n; ++k) t[k] = w[k] * x + b[k];
      } else {
        for (std::size_t k = 0; k < n; ++k) t[k] = b[k];
        for (int i = 0; i < r; ++i) {
          const double* w = P + (W + static_cast<std::size_t>(o * r + i)) * stride;
          const double* hp = ws.h.data() + ws.cell(layer - 1, i);
          for (std::size_t k = 0; k < n; ++k) t[k] += w[k] * hp[k];
        }
      }
      vmath::tanh(t, ws.s.data() + ws.cell(layer, o), n);
    }
    const std::size_t G = L.layer_gain[layer];
    for (int o = 0; o < r; ++o) {
      const double* g = P + (G + static_cast<std::size_t>(o)) * stride;
      const double* t = ws.t.data() + ws.cell(layer, o);
      const double* s = ws.s.data() + ws.cell(layer, o);
      double* h = ws.h.data() + ws.cell(layer, o);
      for (std::size_t k = 0; k < n; ++k) h[k] = t[k] + g[k] * s[k];
    }
  }
  const double* bo = P + L.out_bias * stride;
  double* z = ws.z.data();
  for (std::size_t k = 0; k < n; ++k) z[k] = bo[k];
  for (int i = 0; i < r; ++i) {
    const double* wo = P + (L.out_weight + static_cast<std::size_t>(i)) * stride;
    const double* h = ws.h.data() + ws.cell(L.depth - 1, i);
    for (std::size_t k = 0; k < n; ++k) z[k] += wo[k] * h[k];
  }
}

/// logistic(z) for the lanes of the last forward pass, into out.
inline void squash(NetWorkspace& ws, std::size_t n, double* out) {
  double* e = ws.aux.data();
  for (std::size_t k = 0; k < n; ++k) e[k] = -std::fabs(ws.z[k]);
  vmath::exp(e, e, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double q = 1.0 / (1.0 + e[k]);
    out[k] = ws.z[k] >= 0.0 ? q : e[k] * q;
  }
}

/// log phi'(x) = log logistic(z) + log logistic(-z) + log dz, for the lanes of
/// the last tangent forward pass. Clobbers `scratch` (n values).
inline void log_density_from_forward(NetWorkspace& ws, std::size_t n, double* out,
                                     double* scratch) {
  double* e = ws.aux.data();
  for (std::size_t k = 0; k < n; ++k) e[k] = -std::fabs(ws.z[k]);
  vmath::exp(e, e, n);
  vmath::log1p(e, e, n);
  vmath::log(ws.dz.data(), scratch, n);
  for (std::size_t k = 0; k < n; ++k) out[k] = -std::fabs(ws.z[k]) - 2.0 * e[k] + scratch[k];
}

/// Backward pass through hidden layers, given bar_h / bar_dh for the last hidden
/// layer. Accumulates into grad (effective layout). `with_tangent` selects whether
/// the tangent stream participates (log-density) or not (phi).
inline void backward_hidden(const Layout& L, const double* p, const double* x, std::size_t n,
                            NetWorkspace& ws, bool with_tangent, double* grad) {
  const int r = L.width;
  for (int layer = L.depth - 1; layer >= 0; --layer) {
    const double* G = p + L.layer_gain[layer];
    double* gG = grad + L.layer_gain[layer];
    double* gB = grad + L.layer_bias[layer];
    for (int o = 0; o < r; ++o) {
      const double g = G[o];
      const double* s = ws.s.data() + ws.cell(layer, o);
      double* bh = ws.bar_h.data() + static_cast<std::size_t>(o) * ws.capacity;
      double* bt = ws.bar_t.data() + static_cast<std::size_t>(o) * ws.capacity;
      double acc_g = 0.0;
      double acc_b = 0.0;
      if (with_tangent) {
        const double* dt = ws.dt.data() + ws.cell(layer, o);
        double* bdh = ws.bar_dh.data() + static_cast<std::size_t>(o) * ws.capacity;
        double* bdt = ws.bar_dt.data() + static_cast<std::size_t>(o) * ws.capacity;
        for (std::size_t k = 0; k < n; ++k) {
          const double q = 1.0 - s[k] * s[k];
          const double act = 1.0 + g * q;
          acc_g += bh[k] * s[k] + bdh[k] * q * dt[k];
          bt[k] = bh[k] * act - bdh[k] * g * 2.0 * s[k] * q * dt[k];
          bdt[k] = bdh[k] * act;
          acc_b += bt[k];
        }
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          const double q = 1.0 - s[k] * s[k];
          acc_g += bh[k] * s[k];
          bt[k] = bh[k] * (1.0 + g * q);
          acc_b += bt[k];
        }
      }
      gG[o] += acc_g;
      gB[o] += acc_b;
    }
    const double* W = p + L.layer_weight[layer];
    double* gW = grad + L.layer_weight[layer];
    if (layer == 0) {
      for (int o = 0; o < r; ++o) {
        const double* bt = ws.bar_t.data() + static_cast<std::size_t>(o) * ws.capacity;
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += bt[k] * x[k];
        if (with_tangent) {
          const double* bdt = ws.bar_dt.data() + static_cast<std::size_t>(o) * ws.capacity;
          for (std::size_t k = 0; k < n; ++k) acc += bdt[k];
        }
        gW[o] += acc;
      }
      break;
    }
    for (int o = 0; o < r; ++o) {
      const double* bt = ws.bar_t.data() + static_cast<std::size_t>(o) * ws.capacity;
      for (int i = 0; i < r; ++i) {
        const double* hp = ws.h.data() + ws.cell(layer - 1, i);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += bt[k] * hp[k];
        if (with_tangent) {
          const double* bdt = ws.bar_dt.data() + static_cast<std::size_t>(o) * ws.capacity;
          const double* dhp = ws.dh.data() + ws.cell(layer - 1, i);
          for (std::size_t k = 0; k < n; ++k) acc += bdt[k] * dhp[k];
        }
        gW[o * r + i] += acc;
      }
    }
    // Propagate to the previous layer's outputs.
    for (int i = 0; i < r; ++i) {
      double* bh = ws.bar_h.data() + static_cast<std::size_t>(i) * ws.capacity;
      for (std::size_t k = 0; k < n; ++k) bh[k] = 0.0;
      double* bdh = ws.bar_dh.data() + static_cast<std::size_t>(i) * ws.capacity;
      if (with_tangent) {
        for (std::size_t k = 0; k < n; ++k) bdh[k] = 0.0;
      }
      for (int o = 0; o < r; ++o) {
        const double w = W[o * r + i];
        const double* bt = ws.bar_t.data() + static_cast<std::size_t>(o) * ws.capacity;
        for (std::size_t k = 0; k < n; ++k) bh[k] += w * bt[k];
        if (with_tangent) {
          const double* bdt = ws.bar_dt.data() + static_cast<std::size_t>(o) * ws.capacity;
          for (std::size_t k = 0; k < n; ++k) bdh[k] += w * bdt[k];
        }
      }
    }
  }
}

/// Accumulates sum_k seed[k] * d phi(x_k) / d effective into grad. Requires the
/// primal forward state of the same lanes and phi values `phi`.
inline void backward_phi(const Layout& L, const double* p, const double* x, std::size_t n,
                         NetWorkspace& ws, const double* phi, const double* seed, double* grad) {
  const int r = L.width;
  double* bz = ws.aux.data();
  double acc_b = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    bz[k] = seed[k] * phi[k] * (1.0 - phi[k]);
    acc_b += bz[k];
  }
  grad[L.out_bias] += acc_b;
  const double* Wo = p + L.out_weight;
  for (int i = 0; i < r; ++i) {
    const double* h = ws.h.data() + ws.cell(L.depth - 1, i);
    double* bh = ws.bar_h.data() + static_cast<std::size_t>(i) * ws.capacity;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += bz[k] * h[k];
      bh[k] = bz[k] * Wo[i];
    }
    grad[L.out_weight + i] += acc;
  }
  backward_hidden(L, p, x, n, ws, false, grad);
}

/// Accumulates sum_k seed[k] * d log phi'(x_k) / d effective into grad. Requires
/// the tangent forward state of the same lanes.
inline void backward_log_density(const Layout& L, const double* p, const double* x,
                                 std::size_t n, NetWorkspace& ws, const double* seed,
                                 double* grad) {
  const int r = L.width;
  double* bz = ws.aux.data();
  // d/dz [log s(z) + log s(-z)] = 1 - 2 s(z) = -tanh(z / 2)
  for (std::size_t k = 0; k < n; ++k) bz[k] = 0.5 * ws.z[k];
  vmath::tanh(bz, bz, n);
  double acc_b = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    bz[k] = -seed[k] * bz[k];
    acc_b += bz[k];
  }
  grad[L.out_bias] += acc_b;
  const double* Wo = p + L.out_weight;
  for (int i = 0; i < r; ++i) {
    const double* h = ws.h.data() + ws.cell(L.depth - 1, i);
    const double* dh = ws.dh.data() + ws.cell(L.depth - 1, i);
    double* bh = ws.bar_h.data() + static_cast<std::size_t>(i) * ws.capacity;
    double* bdh = ws.bar_dh.data() + static_cast<std::size_t>(i) * ws.capacity;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double bdz = seed[k] / ws.dz[k];
      acc += bz[k] * h[k] + bdz * dh[k];
      bh[k] = bz[k] * Wo[i];
      bdh[k] = bdz * Wo[i];
    }
    grad[L.out_weight + i] += acc;
  }
  backward_hidden(L, p, x, n, ws, true, grad);
}

}  // namespace cdfest::detail
