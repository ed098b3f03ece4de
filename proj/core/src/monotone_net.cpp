#include "cdfest/monotone_net.hpp"

#include <cmath>
#include <string>

#include "cdfest/error.hpp"
#include "cdfest/instrumentation.hpp"
#include "net_kernels.hpp"

namespace cdfest {

std::size_t NetShape::parameter_count() const { return detail::Layout(*this).total; }

void NetShape::validate() const {
  if (depth < 1 || depth > kMaxDepth) {
    throw InvalidInput("net depth must be in [1, " + std::to_string(kMaxDepth) + "]");
  }
  if (width < 1 || width > kMaxWidth) {
    throw InvalidInput("net width must be in [1, " + std::to_string(kMaxWidth) + "]");
  }
}

std::vector<ParamRole> parameter_roles(const NetShape& shape) {
  const detail::Layout L(shape);
  std::vector<ParamRole> roles(L.total, ParamRole::kBias);
  const std::size_t r = static_cast<std::size_t>(shape.width);
  for (int k = 0; k < shape.depth; ++k) {
    const std::size_t nw = (k == 0) ? r : r * r;
    for (std::size_t i = 0; i < nw; ++i) roles[L.layer_weight[k] + i] = ParamRole::kWeight;
    for (std::size_t i = 0; i < r; ++i) roles[L.layer_gain[k] + i] = ParamRole::kGain;
  }
  for (std::size_t i = 0; i < r; ++i) roles[L.out_weight + i] = ParamRole::kWeight;
  return roles;
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

void to_effective(const NetShape& shape, std::span<const double> raw, std::span<double> effective) {
  const auto roles = parameter_roles(shape);
  if (raw.size() != roles.size() || effective.size() != roles.size()) {
    throw InvalidInput("parameter span size does not match net shape");
  }
  for (std::size_t k = 0; k < roles.size(); ++k) {
    switch (roles[k]) {
      case ParamRole::kWeight:
        effective[k] = softplus(raw[k]);
        break;
      case ParamRole::kGain:
        effective[k] = std::tanh(raw[k]);
        break;
      case ParamRole::kBias:
        effective[k] = raw[k];
        break;
    }
  }
}

double raw_for_weight(double weight) {
  if (!(weight > 0.0)) throw InvalidInput("weight must be positive");
  // softplus^-1(w) = log(expm1(w))
  return weight > 30.0 ? weight + std::log1p(-std::exp(-weight)) : std::log(std::expm1(weight));
}

namespace {

detail::NetWorkspace& single_lane_workspace(const NetShape& shape) {
  thread_local detail::NetWorkspace ws;
  ws.reserve(shape, 2);
  return ws;
}

}  // namespace

MonotoneNet::MonotoneNet(NetShape shape, std::span<const double> effective)
    : shape_(shape), effective_(effective) {
  if (effective_.size() != shape_.parameter_count()) {
    throw InvalidInput("effective parameter span does not match net shape");
  }
}

double MonotoneNet::logit(double x) const {
  if (!std::isfinite(x)) throw InvalidInput("MonotoneNet::logit requires finite x");
  auto& ws = single_lane_workspace(shape_);
  const detail::Layout L(shape_);
  detail::forward(L, effective_.data(), &x, 1, ws, false);
  return ws.z[0];
}

double MonotoneNet::phi(Endpoint x) const {
  auto& c = instrumentation::counters();
  ++c.phi_calls;
  if (x.is_neg_inf()) return 0.0;
  if (x.is_pos_inf()) return 1.0;
  ++c.net_passes;
  auto& ws = single_lane_workspace(shape_);
  const detail::Layout L(shape_);
  const double v = x.as_double();
  detail::forward(L, effective_.data(), &v, 1, ws, false);
  double out = 0.0;
  detail::squash(ws, 1, &out);
  return out;
}

double MonotoneNet::phi(double x) const {
  if (std::isnan(x)) throw InvalidInput("phi: NaN input");
  return phi(Endpoint::from_double(x));
}

double MonotoneNet::log_density(double x) const {
  if (!std::isfinite(x)) throw InvalidInput("density is undefined at the +-inf limits");
  auto& ws = single_lane_workspace(shape_);
  const detail::Layout L(shape_);
  detail::forward(L, effective_.data(), &x, 1, ws, true);
  double out = 0.0;
  double scratch = 0.0;
  detail::log_density_from_forward(ws, 1, &out, &scratch);
  return out;
}

double MonotoneNet::density(double x) const { return std::exp(log_density(x)); }

}  // namespace cdfest
