#include "cdfest/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "cdfest/error.hpp"
#include "net_kernels.hpp"
#include "random_util.hpp"

namespace cdfest {

namespace {

constexpr std::size_t kLanes = 256;

double log_sum_exp(const double* v, std::size_t n, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i * stride] - mx);
  return mx + std::log(s);
}

// d loss / d raw from d loss / d effective.
void chain_to_raw(const MixtureCdf& model, std::span<const double> effective_grad,
                  std::span<double> raw_grad) {
  const auto roles = parameter_roles(model.net_shape());
  const std::size_t P = roles.size();
  const auto raw = model.raw_parameters();
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double g = effective_grad[k];
    switch (roles[k % P]) {
      case ParamRole::kWeight:
        raw_grad[k] = g / (1.0 + std::exp(-raw[k]));
        break;
      case ParamRole::kGain: {
        const double t = std::tanh(raw[k]);
        raw_grad[k] = g * (1.0 - t * t);
        break;
      }
      case ParamRole::kBias:
        raw_grad[k] = g;
        break;
    }
  }
}

detail::NetWorkspace& training_workspace(const NetShape& shape, std::size_t lanes) {
  thread_local detail::NetWorkspace ws;
  ws.reserve(shape, lanes);
  return ws;
}

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, std::size_t offset, double lr) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double g = grad[k];
      double& m = m_[offset + k];
      double& v = v_[offset + k];
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g * g;
      const double mhat = m / bias1_;
      const double vhat = v / bias2_;
      params[k] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
  }

  void advance() {
    pow1_ *= kBeta1;
    pow2_ *= kBeta2;
    bias1_ = 1.0 - pow1_;
    bias2_ = 1.0 - pow2_;
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m_, v_;
  double pow1_ = 1.0, pow2_ = 1.0, bias1_ = 0.0, bias2_ = 0.0;
};

void apply_step(MixtureCdf& model, Adam& adam, const GradientTape& tape, double lr) {
  adam.advance();
  adam.step(model.raw_logits(), tape.logits, 0, lr);
  adam.step(model.raw_parameters(), tape.params, tape.logits.size(), lr);
  model.refresh();
}

void check_model(const MixtureCdf& model, const TrainConfig& config) {
  if (model.components() != config.components || !(model.net_shape() == config.shape())) {
    throw InvalidInput("model architecture does not match the training config");
  }
}

}  // namespace

const char* to_string(TrainMode mode) { return mode == TrainMode::kData ? "data" : "query"; }

TrainMode train_mode_from_string(const std::string& text) {
  if (text == "data") return TrainMode::kData;
  if (text == "query") return TrainMode::kQuery;
  throw InvalidInput("training mode must be 'data' or 'query', got '" + text + "'");
}

std::size_t TrainConfig::effective_batch_size() const {
  if (batch_size != 0) return batch_size;
  return mode == TrainMode::kData ? 4096 : 256;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidInput("learning rate must be > 0");
  }
  if (!(discard_threshold > 1.0)) throw InvalidInput("Q-error discard threshold must be > 1");
  if (components < 1) throw InvalidInput("components must be >= 1");
  shape().validate();
}

std::map<std::string, std::string> TrainConfig::describe() const {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {{"training.mode", to_string(mode)},
          {"training.epochs", std::to_string(epochs)},
          {"training.learning_rate", num(learning_rate)},
          {"training.components", std::to_string(components)},
          {"training.depth", std::to_string(depth)},
          {"training.width", std::to_string(width)},
          {"training.batch_size", std::to_string(effective_batch_size())},
          {"training.seed", std::to_string(seed)},
          {"training.discard_threshold", num(discard_threshold)}};
}

void GradientTape::zero() {
  std::fill(logits.begin(), logits.end(), 0.0);
  std::fill(params.begin(), params.end(), 0.0);
}

bool GradientTape::finite() const {
  for (double v : logits) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : params) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double nll_loss(const MixtureCdf& model, std::span<const double> rows, GradientTape* grad) {
  const std::size_t d = model.dims();
  const std::size_t m = model.components();
  const std::size_t P = model.net_parameter_count();
  if (rows.empty()) throw InvalidInput("nll_loss: empty batch");
  if (rows.size() % d != 0) throw InvalidInput("nll_loss: row data is not a multiple of d");
  const std::size_t N = rows.size() / d;
  const detail::Layout L(model.net_shape());
  auto& ws = training_workspace(model.net_shape(), kLanes);

  std::vector<double> eff_grad;
  if (grad) {
    grad->zero();
    eff_grad.assign(model.raw_parameters().size(), 0.0);
  }
  std::vector<double> xcol(d * kLanes), S(m * kLanes), ld(kLanes), scratch(kLanes), seed(kLanes);
  const auto log_w = model.log_weights();
  const auto w = model.weights();
  const double inv_n = 1.0 / static_cast<double>(N);
  double total = 0.0;

  for (std::size_t n0 = 0; n0 < N; n0 += kLanes) {
    const std::size_t nb = std::min(kLanes, N - n0);
    for (std::size_t q = 0; q < nb; ++q) {
      for (std::size_t j = 0; j < d; ++j) xcol[j * kLanes + q] = rows[(n0 + q) * d + j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double* s = S.data() + i * kLanes;
      for (std::size_t q = 0; q < nb; ++q) s[q] = log_w[i];
      for (std::size_t j = 0; j < d; ++j) {
        detail::forward(L, model.effective_parameters(i, j).data(), xcol.data() + j * kLanes, nb, ws,
                        true);
        detail::log_density_from_forward(ws, nb, ld.data(), scratch.data());
        for (std::size_t q = 0; q < nb; ++q) s[q] += ld[q];
      }
    }
    // S becomes the responsibilities r_i(x) in place.
    for (std::size_t q = 0; q < nb; ++q) {
      const double lse = log_sum_exp(S.data() + q, m, kLanes);
      total += lse;
      for (std::size_t i = 0; i < m; ++i) S[i * kLanes + q] = std::exp(S[i * kLanes + q] - lse);
    }
    if (!grad) continue;
    for (std::size_t i = 0; i < m; ++i) {
      const double* r = S.data() + i * kLanes;
      double acc = 0.0;
      for (std::size_t q = 0; q < nb; ++q) acc += r[q] - w[i];
      grad->logits[i] -= acc * inv_n;
      for (std::size_t q = 0; q < nb; ++q) seed[q] = -r[q] * inv_n;
      for (std::size_t j = 0; j < d; ++j) {
        const double* eff = model.effective_parameters(i, j).data();
        const double* x = xcol.data() + j * kLanes;
        detail::forward(L, eff, x, nb, ws, true);
        detail::backward_log_density(L, eff, x, nb, ws, seed.data(),
                                     eff_grad.data() + (i * d + j) * P);
      }
    }
  }
  if (grad) chain_to_raw(model, eff_grad, grad->params);
  return -total * inv_n;
}

QueryLoss qerror_loss(const MixtureCdf& model, std::span<const QuerySample> batch,
                      std::uint64_t row_count, double discard_threshold, GradientTape* grad) {
  const std::size_t d = model.dims();
  const std::size_t m = model.components();
  const std::size_t P = model.net_parameter_count();
  const std::size_t B = batch.size();
  if (B == 0) throw InvalidInput("qerror_loss: empty batch");
  if (row_count == 0) throw InvalidInput("qerror_loss: row count must be >= 1");
  const double T = static_cast<double>(row_count);
  const detail::Layout L(model.net_shape());
  auto& ws = training_workspace(model.net_shape(), 2 * B);

  // Finite endpoints of each column become lanes; sentinels have fixed phi.
  std::vector<double> xs(d * 2 * B);
  std::vector<std::size_t> lanes(d, 0);
  std::vector<std::ptrdiff_t> lo_lane(d * B), hi_lane(d * B);
  for (std::size_t q = 0; q < B; ++q) {
    if (batch[q].box.dims() != d) throw InvalidInput("qerror_loss: box dimension mismatch");
  }
  for (std::size_t j = 0; j < d; ++j) {
    double* x = xs.data() + j * 2 * B;
    for (std::size_t q = 0; q < B; ++q) {
      const Interval& iv = batch[q].box[j];
      lo_lane[j * B + q] = iv.lower.is_finite() ? static_cast<std::ptrdiff_t>(lanes[j]) : -1;
      if (iv.lower.is_finite()) x[lanes[j]++] = iv.lower.as_double();
      hi_lane[j * B + q] = iv.upper.is_finite() ? static_cast<std::ptrdiff_t>(lanes[j]) : -1;
      if (iv.upper.is_finite()) x[lanes[j]++] = iv.upper.as_double();
    }
  }
  auto sentinel_phi = [](const Endpoint& e) { return e.is_pos_inf() ? 1.0 : 0.0; };

  std::vector<double> delta(m * d * B), ph(2 * B);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t nl = lanes[j];
      if (nl > 0) {
        detail::forward(L, model.effective_parameters(i, j).data(), xs.data() + j * 2 * B, nl, ws,
                        false);
        detail::squash(ws, nl, ph.data());
      }
      double* dl = delta.data() + (i * d + j) * B;
      for (std::size_t q = 0; q < B; ++q) {
        const Interval& iv = batch[q].box[j];
        const double lo = lo_lane[j * B + q] >= 0 ? ph[lo_lane[j * B + q]] : sentinel_phi(iv.lower);
        const double hi = hi_lane[j * B + q] >= 0 ? ph[hi_lane[j * B + q]] : sentinel_phi(iv.upper);
        dl[q] = std::max(hi - lo, 0.0);
      }
    }
  }

  const auto w = model.weights();
  std::vector<double> comp(m * B);  // prod_j delta_ij per query
  std::vector<double> p(B, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t q = 0; q < B; ++q) {
      double prod = 1.0;
      for (std::size_t j = 0; j < d; ++j) prod *= delta[(i * d + j) * B + q];
      comp[i * B + q] = prod;
      p[q] += w[i] * prod;
    }
  }

  QueryLoss out;
  std::vector<double> c(B, 0.0);  // d loss / d p, before the 1/kept scaling
  double sum = 0.0;
  double carry = 0.0;  // Neumaier compensation
  for (std::size_t q = 0; q < B; ++q) {
    const double pq = std::clamp(p[q], 0.0, 1.0);
    const double truth = std::max(batch[q].selectivity * T, 1.0);
    const double est_raw = pq * T;
    const double est = std::max(est_raw, 1.0);
    const double qe = std::max(est / truth, truth / est);
    if (!(qe <= discard_threshold)) {
      ++out.discarded;
      continue;
    }
    ++out.kept;
    const double term = std::log(qe + 1.0);
    const double next = sum + term;
    carry += std::fabs(sum) >= std::fabs(term) ? (sum - next) + term : (term - next) + sum;
    sum = next;
    if (est_raw <= 1.0) continue;  // floored: locally constant
    const double dq_dp = est >= truth ? T / truth : -truth * T / (est * est);
    c[q] = dq_dp / (qe + 1.0);
  }
  if (out.kept == 0) {
    throw InvalidInput("qerror_loss: every item exceeded the Q-error discard threshold");
  }
  const double inv_kept = 1.0 / static_cast<double>(out.kept);
  out.loss = (sum + carry) / static_cast<double>(out.kept);
  if (!grad) return out;

  grad->zero();
  for (double& v : c) v *= inv_kept;
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t q = 0; q < B; ++q) acc += c[q] * w[i] * (comp[i * B + q] - p[q]);
    grad->logits[i] = acc;
  }

  std::vector<double> eff_grad(model.raw_parameters().size(), 0.0);
  std::vector<double> prefix(d * B), suffix(d * B), seed(2 * B);
  for (std::size_t i = 0; i < m; ++i) {
    const double* di = delta.data() + i * d * B;
    for (std::size_t q = 0; q < B; ++q) {
      double run = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        prefix[j * B + q] = run;
        run *= di[j * B + q];
      }
      run = 1.0;
      for (std::size_t j = d; j-- > 0;) {
        suffix[j * B + q] = run;
        run *= di[j * B + q];
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t nl = lanes[j];
      if (nl == 0) continue;
      std::fill(seed.begin(), seed.begin() + static_cast<std::ptrdiff_t>(nl), 0.0);
      bool any = false;
      for (std::size_t q = 0; q < B; ++q) {
        if (c[q] == 0.0 || !(di[j * B + q] > 0.0)) continue;  // clamp inactive region
        const double g = c[q] * w[i] * prefix[j * B + q] * suffix[j * B + q];
        if (hi_lane[j * B + q] >= 0) seed[hi_lane[j * B + q]] += g;
        if (lo_lane[j * B + q] >= 0) seed[lo_lane[j * B + q]] -= g;
        any = true;
      }
      if (!any) continue;
      const double* eff = model.effective_parameters(i, j).data();
      const double* x = xs.data() + j * 2 * B;
      detail::forward(L, eff, x, nl, ws, false);
      detail::squash(ws, nl, ph.data());
      detail::backward_phi(L, eff, x, nl, ws, ph.data(), seed.data(), eff_grad.data() + (i * d + j) * P);
    }
  }
  chain_to_raw(model, eff_grad, grad->params);
  return out;
}

MixtureCdf initialize_model(std::vector<ColumnMeta> columns, const TrainConfig& config) {
  config.validate();
  return MixtureCdf::initialized(config.components, config.shape(), std::move(columns), config.seed);
}

double holdout_median_qerror(const MixtureCdf& model, const Holdout& holdout) {
  if (holdout.queries.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double T = static_cast<double>(holdout.row_count);
  std::vector<double> errors;
  errors.reserve(holdout.queries.size());
  for (const auto& s : holdout.queries) {
    errors.push_back(qerror(std::round(model.box_probability(s.box) * T), s.selectivity * T));
  }
  return nearest_rank(std::move(errors), 50.0);
}

namespace {

template <typename BatchLoss>
TrainResult run_epochs(MixtureCdf& model, std::size_t items, const TrainConfig& config,
                       const Holdout* holdout, const EpochCallback& on_epoch, BatchLoss&& batch_loss) {
  const std::size_t batch = config.effective_batch_size();
  std::vector<std::size_t> order(items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Offset the shuffle stream from the initializer stream that shares the seed.
  std::mt19937_64 rng(config.seed ^ 0x5deece66dull);
  Adam adam(model.raw_logits().size() + model.raw_parameters().size());
  GradientTape tape(model);
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    detail::shuffle(order, rng);
    double weighted = 0.0;
    double weight = 0.0;
    std::size_t b = 0;
    for (std::size_t start = 0; start < items; start += batch, ++b) {
      const std::size_t n = std::min(batch, items - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      double used = 0.0;
      double loss;
      try {
        loss = batch_loss(idx, tape, used);
      } catch (const InvalidInput& e) {
        throw TrainingError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(b) + ")",
                            epoch, b);
      }
      if (!std::isfinite(loss) || !tape.finite()) {
        throw TrainingError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(b),
                            epoch, b);
      }
      weighted += loss * used;
      weight += used;
      apply_step(model, adam, tape, config.learning_rate);
    }
    LossRecord rec{epoch, weighted / weight,
                   holdout ? holdout_median_qerror(model, *holdout)
                           : std::numeric_limits<double>::quiet_NaN()};
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace

TrainResult train_on_data(MixtureCdf& model, const PreparedTable& data, const TrainConfig& config,
                          const Holdout* holdout, const EpochCallback& on_epoch) {
  config.validate();
  check_model(model, config);
  if (data.dims() != model.dims()) throw InvalidInput("data and model column counts differ");
  if (data.row_count == 0) throw InvalidInput("cannot train on an empty table");
  const std::size_t d = data.dims();
  std::vector<double> rows;
  return run_epochs(model, data.row_count, config, holdout, on_epoch,
                    [&](std::span<const std::size_t> idx, GradientTape& tape, double& used) {
                      rows.resize(idx.size() * d);
                      for (std::size_t k = 0; k < idx.size(); ++k) {
                        const auto r = data.row(idx[k]);
                        std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(k * d));
                      }
                      used = static_cast<double>(idx.size());
                      return nll_loss(model, rows, &tape);
                    });
}

TrainResult train_on_queries(MixtureCdf& model, std::span<const QuerySample> queries,
                             std::uint64_t row_count, const TrainConfig& config,
                             const Holdout* holdout, const EpochCallback& on_epoch) {
  config.validate();
  check_model(model, config);
  if (queries.empty()) throw InvalidInput("cannot train on an empty workload");
  std::vector<QuerySample> batch;
  return run_epochs(model, queries.size(), config, holdout, on_epoch,
                    [&](std::span<const std::size_t> idx, GradientTape& tape, double& used) {
                      batch.clear();
                      for (std::size_t k : idx) batch.push_back(queries[k]);
                      const QueryLoss l =
                          qerror_loss(model, batch, row_count, config.discard_threshold, &tape);
                      used = static_cast<double>(l.kept);
                      return l.loss;
                    });
}

void write_loss_curve(const std::vector<LossRecord>& curve, std::ostream& out) {
  out << "epoch,loss,holdout_qerror_median\n";
  char buf[128];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.loss, r.holdout_qerror_median);
    out << buf;
  }
}

}  // namespace cdfest
