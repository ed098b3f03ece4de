#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cdfest/mixture_cdf.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/qerror.hpp"

namespace cdfest {

enum class TrainMode { kData, kQuery };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& text);

struct TrainConfig {
  TrainMode mode = TrainMode::kData;
  std::size_t epochs = 1000;
  double learning_rate = 0.01;
  std::size_t components = 1000;
  int depth = 2;
  int width = 3;
  /// 0 selects the mode default (4096 rows / 256 queries).
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  double discard_threshold = 1e8;

  std::size_t effective_batch_size() const;
  NetShape shape() const { return NetShape{depth, width}; }
  /// Throws InvalidInput.
  void validate() const;
  std::map<std::string, std::string> describe() const;
};

/// Partial derivatives of a loss, in the layout of the raw parameter arrays.
struct GradientTape {
  std::vector<double> logits;
  std::vector<double> params;

  explicit GradientTape(const MixtureCdf& model)
      : logits(model.raw_logits().size(), 0.0), params(model.raw_parameters().size(), 0.0) {}
  void zero();
  bool finite() const;
};

/// A training / evaluation query: compiled box and true selectivity in (0, 1].
struct QuerySample {
  QueryBox box;
  double selectivity = 1.0;
};

/// -(1/N) sum_n log p(x_n) over row-major normalized rows (`rows.size()` must be
/// a multiple of d). With `grad`, overwrites it with the gradient w.r.t. the raw
/// parameters. Throws InvalidInput for an empty batch.
double nll_loss(const MixtureCdf& model, std::span<const double> rows, GradientTape* grad);

struct QueryLoss {
  double loss = 0.0;        // mean over kept items of log(qerror + 1)
  std::size_t kept = 0;
  std::size_t discarded = 0;
};

/// Supervised loss through the merged box probability. Estimates are floored at
/// one row of a `row_count`-row table (zero gradient while floored); items with
/// qerror above `discard_threshold` are dropped. Throws InvalidInput when the batch
/// is empty or every item is dropped.
QueryLoss qerror_loss(const MixtureCdf& model, std::span<const QuerySample> batch,
                      std::uint64_t row_count, double discard_threshold, GradientTape* grad);

struct LossRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double holdout_qerror_median = 0.0;
};

/// Held-out queries for monitoring (median Q-error after each epoch).
struct Holdout {
  std::vector<QuerySample> queries;
  std::uint64_t row_count = 1;
};

struct TrainResult {
  std::vector<LossRecord> curve;
};

using EpochCallback = std::function<void(const LossRecord&)>;

/// Model drawn from the default initializer for `config`.
MixtureCdf initialize_model(std::vector<ColumnMeta> columns, const TrainConfig& config);

/// Minibatch Adam on the negative log-likelihood. Deterministic given
/// config.seed. Throws TrainingError (with epoch and batch index) when the loss
/// or a gradient becomes non-finite.
TrainResult train_on_data(MixtureCdf& model, const PreparedTable& data, const TrainConfig& config,
                          const Holdout* holdout = nullptr, const EpochCallback& on_epoch = {});

/// Minibatch Adam on log(qerror + 1) over labeled queries.
TrainResult train_on_queries(MixtureCdf& model, std::span<const QuerySample> queries,
                             std::uint64_t row_count, const TrainConfig& config,
                             const Holdout* holdout = nullptr, const EpochCallback& on_epoch = {});

/// Median (nearest-rank) Q-error of the model on `holdout`.
double holdout_median_qerror(const MixtureCdf& model, const Holdout& holdout);

/// epoch,loss,holdout_qerror_median
void write_loss_curve(const std::vector<LossRecord>& curve, std::ostream& out);

}  // namespace cdfest
