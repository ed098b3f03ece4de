#include "cdfest/mixture_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cdfest/error.hpp"
#include "cdfest/instrumentation.hpp"
#include "net_kernels.hpp"
#include "random_util.hpp"

namespace cdfest {

namespace {

detail::NetWorkspace& pair_workspace(const NetShape& shape) {
  thread_local detail::NetWorkspace ws;
  ws.reserve(shape, 2);
  return ws;
}

detail::NetWorkspace& block_workspace(const NetShape& shape, std::size_t lanes) {
  thread_local detail::NetWorkspace ws;
  ws.reserve(shape, lanes);
  return ws;
}

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

MixtureCdf::MixtureCdf(std::size_t components, NetShape shape, std::vector<ColumnMeta> columns)
    : components_(components), shape_(shape), columns_(std::move(columns)) {
  shape_.validate();
  if (components_ == 0) throw InvalidInput("mixture needs at least one component");
  if (columns_.empty()) throw InvalidInput("mixture needs at least one column");
  net_params_ = shape_.parameter_count();
  logits_.assign(components_, 0.0);
  raw_.assign(components_ * columns_.size() * net_params_, 0.0);
  for (auto& c : columns_) c.rebuild_index();
  refresh();
}

MixtureCdf MixtureCdf::initialized(std::size_t components, NetShape shape,
                                   std::vector<ColumnMeta> columns, std::uint64_t seed) {
  MixtureCdf model(components, shape, std::move(columns));
  std::mt19937_64 rng(seed);
  // Initial nets are close to logistic(1.7 x + b): slope r^depth * w^(depth+1).
  const double target = std::pow(1.7 / std::pow(static_cast<double>(shape.width), shape.depth),
                                 1.0 / (shape.depth + 1));
  const double raw_w = raw_for_weight(target);
  const auto roles = parameter_roles(shape);
  const std::size_t P = model.net_params_;
  const std::size_t out_bias = P - 1;
  auto raw = model.raw_parameters();
  for (std::size_t net = 0; net < model.components_ * model.dims(); ++net) {
    for (std::size_t k = 0; k < P; ++k) {
      double& v = raw[net * P + k];
      if (k == out_bias) {
        v = 6.0 * detail::uniform01(rng) - 3.0;
      } else if (roles[k] == ParamRole::kWeight) {
        v = raw_w + 0.1 * detail::standard_normal(rng);
      } else {
        v = 0.1 * detail::standard_normal(rng);
      }
    }
  }
  model.refresh();
  return model;
}

std::size_t MixtureCdf::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  throw UnknownColumn(name);
}

void MixtureCdf::refresh() {
  const double lse = log_sum_exp(logits_);
  weights_.resize(components_);
  log_weights_.resize(components_);
  double total = 0.0;
  for (std::size_t i = 0; i < components_; ++i) {
    log_weights_[i] = logits_[i] - lse;
    weights_[i] = std::exp(log_weights_[i]);
    total += weights_[i];
  }
  // Remove the last few ulps of softmax rounding so the weights sum to 1.
  for (auto& w : weights_) w /= total;
  effective_.resize(raw_.size());
  const std::size_t nets = components_ * dims();
  for (std::size_t net = 0; net < nets; ++net) {
    to_effective(shape_, std::span<const double>(raw_).subspan(net * net_params_, net_params_),
                 std::span<double>(effective_).subspan(net * net_params_, net_params_));
  }
  const std::size_t d = dims();
  by_column_.resize(effective_.size());
  for (std::size_t i = 0; i < components_; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double* src = effective_.data() + (i * d + j) * net_params_;
      double* dst = by_column_.data() + j * net_params_ * components_ + i;
      for (std::size_t q = 0; q < net_params_; ++q) dst[q * components_] = src[q];
    }
  }
}

std::span<const double> MixtureCdf::effective_parameters(std::size_t component,
                                                         std::size_t column) const {
  return std::span<const double>(effective_).subspan((component * dims() + column) * net_params_,
                                                     net_params_);
}

MonotoneNet MixtureCdf::net(std::size_t component, std::size_t column) const {
  return MonotoneNet(shape_, effective_parameters(component, column));
}

double MixtureCdf::cdf(std::span<const Endpoint> point) const {
  if (point.size() != dims()) {
    throw InvalidInput("cdf: point has " + std::to_string(point.size()) + " coordinates, model has " +
                       std::to_string(dims()));
  }
  const detail::Layout L(shape_);
  auto& ws = pair_workspace(shape_);
  auto& counters = instrumentation::counters();
  const std::size_t d = dims();
  double total = 0.0;
  for (std::size_t i = 0; i < components_; ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const Endpoint& x = point[j];
      double f;
      if (x.is_neg_inf()) {
        f = 0.0;
      } else if (x.is_pos_inf()) {
        f = 1.0;
      } else {
        const double v = x.as_double();
        detail::forward(L, effective_.data() + (i * d + j) * net_params_, &v, 1, ws, false);
        detail::squash(ws, 1, &f);
        ++counters.net_passes;
      }
      prod *= f;
    }
    total += weights_[i] * prod;
  }
  counters.phi_calls += components_ * d;
  return total;
}

double MixtureCdf::box_probability_naive(const QueryBox& box) const {
  const std::size_t d = dims();
  if (box.dims() != d) throw InvalidInput("box dimension does not match model");
  if (d > kNaiveMaxDims) {
    throw CapacityError("naive inclusion-exclusion refused: d = " + std::to_string(d) + " > " +
                        std::to_string(kNaiveMaxDims));
  }
  std::vector<Endpoint> corner(d);
  const std::uint32_t corners = 1u << d;
  double total = 0.0;
  for (std::uint32_t bits = 0; bits < corners; ++bits) {
    const CornerSign s{bits, static_cast<std::uint32_t>(d)};
    for (std::size_t j = 0; j < d; ++j) corner[j] = s.upper(j) ? box[j].upper : box[j].lower;
    total += s.sign() * cdf(corner);
  }
  return std::clamp(total, 0.0, 1.0);
}

void MixtureCdf::interval_products(const QueryBox& box, std::span<const std::size_t> columns,
                                   std::span<double> prod) const {
  if (box.dims() != columns.size()) throw InvalidInput("interval_products: box and column list differ");
  if (prod.size() != components_) throw InvalidInput("interval_products: one product slot per component");
  const std::size_t m = components_;
  const detail::Layout L(shape_);
  auto& ws = block_workspace(shape_, m);
  thread_local std::vector<double> lo, hi;
  lo.resize(m);
  hi.resize(m);
  std::uint64_t passes = 0;
  auto endpoint = [&](const double* P, const Endpoint& e, double* out) {
    if (e.is_finite()) {
      detail::forward_across(L, P, m, e.as_double(), m, ws);
      detail::squash(ws, m, out);
      passes += m;
    } else {
      std::fill(out, out + m, e.is_neg_inf() ? 0.0 : 1.0);
    }
  };
  std::fill(prod.begin(), prod.end(), 1.0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] >= dims()) throw InvalidInput("interval_products: column out of range");
    const double* P = by_column_.data() + columns[c] * net_params_ * m;
    endpoint(P, box[c].lower, lo.data());
    endpoint(P, box[c].upper, hi.data());
    for (std::size_t i = 0; i < m; ++i) prod[i] *= std::max(hi[i] - lo[i], 0.0);
  }
  auto& counters = instrumentation::counters();
  counters.phi_calls += 2 * m * columns.size();
  counters.net_passes += passes;
}

double MixtureCdf::box_probability(const QueryBox& box) const {
  const std::size_t d = dims();
  if (box.dims() != d) throw InvalidInput("box dimension does not match model");
  thread_local std::vector<std::size_t> all;
  thread_local std::vector<double> prod;
  if (all.size() != d) {
    all.resize(d);
    for (std::size_t j = 0; j < d; ++j) all[j] = j;
  }
  prod.resize(components_);
  interval_products(box, all, prod);
  double total = 0.0;
  for (std::size_t i = 0; i < components_; ++i) total += weights_[i] * prod[i];
  return std::clamp(total, 0.0, 1.0);
}

double MixtureCdf::log_density(std::span<const double> point) const {
  const std::size_t d = dims();
  if (point.size() != d) throw InvalidInput("log_density: dimension mismatch");
  for (double x : point) {
    if (!std::isfinite(x)) throw InvalidInput("log_density requires finite coordinates");
  }
  const detail::Layout L(shape_);
  auto& ws = pair_workspace(shape_);
  std::vector<double> terms(components_);
  for (std::size_t i = 0; i < components_; ++i) {
    double s = log_weights_[i];
    for (std::size_t j = 0; j < d; ++j) {
      detail::forward(L, effective_.data() + (i * d + j) * net_params_, &point[j], 1, ws, true);
      double ld = 0.0;
      double scratch = 0.0;
      detail::log_density_from_forward(ws, 1, &ld, &scratch);
      s += ld;
    }
    terms[i] = s;
  }
  return log_sum_exp(terms);
}

std::vector<std::size_t> complement_columns(std::size_t dims,
                                            std::span<const std::size_t> key_columns) {
  std::vector<bool> is_key(dims, false);
  for (std::size_t c : key_columns) {
    if (c >= dims) throw InvalidInput("key column index out of range");
    if (is_key[c]) throw InvalidInput("key column listed twice");
    is_key[c] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t j = 0; j < dims; ++j) {
    if (!is_key[j]) rest.push_back(j);
  }
  return rest;
}

QueryBox project_box(const QueryBox& box, std::span<const std::size_t> columns) {
  QueryBox out(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= box.dims()) throw InvalidInput("projected column out of range");
    out[k] = box[columns[k]];
  }
  return out;
}

double conditional_expectation(const MixtureCdf& model, const KeyDomain& domain,
                               const KeyWeightFn& weight, const QueryBox& box) {
  std::vector<double> w(domain.tuples.size());
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = weight(domain.tuples[t]);
  return conditional_expectation(model, domain, w, box);
}

double conditional_expectation(const MixtureCdf& model, const KeyDomain& domain,
                               std::span<const double> weights, const QueryBox& box) {
  const std::size_t d = model.dims();
  const std::size_t k = domain.columns.size();
  const std::size_t m = model.components();
  if (domain.tuples.empty()) throw InvalidInput("conditional_expectation: empty key domain");
  if (k == 0) throw InvalidInput("conditional_expectation: no key columns");
  const auto rest = complement_columns(d, domain.columns);
  if (box.dims() != rest.size()) {
    throw InvalidInput("conditional_expectation: box must cover exactly the non-key columns");
  }
  if (domain.probabilities.size() != domain.tuples.size() || weights.size() != domain.tuples.size()) {
    throw InvalidInput("conditional_expectation: probabilities/weights size mismatch");
  }
  double mass = 0.0;
  for (double p : domain.probabilities) {
    if (!(p >= 0.0)) throw InvalidInput("conditional_expectation: negative key probability");
    mass += p;
  }
  if (mass > 1.0 + 1e-9) throw InvalidInput("conditional_expectation: key probabilities exceed 1");

  const std::size_t T = domain.tuples.size();
  const detail::Layout L(model.net_shape());

  // score[i][t] = log a_i + sum_{j in keys} log phi'_ij(x_j)
  std::vector<double> score(m * T);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < T; ++t) score[i * T + t] = model.log_weights()[i];
  }
  constexpr std::size_t kLanes = 128;
  auto& ws = block_workspace(model.net_shape(), kLanes);
  std::vector<double> xs(kLanes), ld(kLanes), scratch(kLanes);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t j = domain.columns[c];
    const ColumnMeta& meta = model.columns()[j];
    for (std::size_t i = 0; i < m; ++i) {
      const double* eff = model.effective_parameters(i, j).data();
      for (std::size_t t0 = 0; t0 < T; t0 += kLanes) {
        const std::size_t n = std::min(kLanes, T - t0);
        for (std::size_t q = 0; q < n; ++q) {
          const auto& tuple = domain.tuples[t0 + q];
          if (tuple.size() != k) throw InvalidInput("key tuple arity mismatch");
          xs[q] = meta.normalize(tuple[c] + 0.5 * meta.precision);
        }
        detail::forward(L, eff, xs.data(), n, ws, true);
        detail::log_density_from_forward(ws, n, ld.data(), scratch.data());
        for (std::size_t q = 0; q < n; ++q) score[i * T + t0 + q] += ld[q];
      }
    }
  }

  // G_i = sum_t posterior_i(t) / a_i * Pr(t) * W(t), posterior normalized over i.
  std::vector<double> G(m, 0.0);
  std::vector<double> column(m);
  for (std::size_t t = 0; t < T; ++t) {
    const double pw = domain.probabilities[t] * weights[t];
    if (pw == 0.0) continue;
    for (std::size_t i = 0; i < m; ++i) column[i] = score[i * T + t];
    const double lse = log_sum_exp(column);
    for (std::size_t i = 0; i < m; ++i) {
      // prod phi' / sum_i' a_i' prod phi' = exp(score - log a_i - lse)
      G[i] += std::exp(column[i] - model.log_weights()[i] - lse) * pw;
    }
  }

  std::vector<double> prod(m);
  model.interval_products(box, rest, prod);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) total += model.weights()[i] * prod[i] * G[i];
  return total;
}

}  // namespace cdfest
