#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "crdext/estimators.hpp"
#include "crdext/featurize.hpp"
#include "crdext/punq_network.hpp"

namespace crdext {

inline constexpr double kUniquenessEps = 1e-4;

struct TrainingMeta {
  std::uint32_t epochs = 0;       // epochs actually run
  std::uint32_t best_epoch = 0;   // 1-based; weights are from this epoch
  double best_val_qerror = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t train_size = 0;
  std::uint64_t val_size = 0;
  bool operator==(const TrainingMeta&) const = default;
};

struct PunqModel {
  FeatLayout layout;
  PunqParams<float> params;
  TrainingMeta meta;

  std::size_t hidden() const { return params.hidden(); }

  /// Zero weights: every prediction is 0.5.
  static PunqModel zeros(FeatLayout layout, std::size_t hidden);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static PunqModel initialized(FeatLayout layout, std::size_t hidden, std::uint64_t seed);
};

/// Predicted uniqueness rate, strictly inside (0, 1) up to float rounding.
double predict(const PunqModel& model, const ConjunctiveQuery& q);
double predict(const PunqModel& model, const FeatureSet& set);

/// max(y / yhat, yhat / y). Throws Error(Domain) unless both are > 0.
double q_error(double y, double yhat);

struct LabeledSample {
  ConjunctiveQuery query;
  double uniqueness = 0.0;  // in (0, 1]
};

struct TrainParams {
  std::size_t batch = 128;
  std::size_t hidden = 512;
  double lr = 0.001;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_mean_qerror = 0.0;
  double val_median_qerror = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  bool operator==(const TrainingLog&) const = default;
};

struct TrainResult {
  PunqModel model;
  TrainingLog log;
};

/// Adam on the mean q-error of clamp(yhat, eps, 1), early stopping on the
/// validation mean q-error with best-weight restore.
/// Throws Error(EmptyDataset), Error(Domain) for labels outside (0, 1],
/// Error(NonFiniteLoss).
TrainResult train(const std::vector<LabeledSample>& data, const FeatLayout& layout, const TrainParams& hp);

/// Nearest-rank median of the q-errors of clamped predictions.
struct QErrorSummary {
  double mean = 0.0;
  double median = 0.0;
};
QErrorSummary evaluate_qerror(const PunqModel& model, const std::vector<LabeledSample>& data);

/// Binary model file; see docs/model_format.md.
inline constexpr std::uint32_t kModelFormatVersion = 1;
void save(const PunqModel& model, const std::filesystem::path& path);
/// Throws Error(Io), Error(VersionMismatch) or Error(DimMismatch).
PunqModel load_model(const std::filesystem::path& path);
std::string serialize(const PunqModel& model);
PunqModel deserialize(const std::string& bytes);

/// Throws Error(DimMismatch) when the layout does not describe schema.
void check_compatible(const PunqModel& model, const Schema& schema);

/// UniquenessPredictor backed by a trained model.
class PunqPredictor : public UniquenessPredictor {
 public:
  explicit PunqPredictor(std::shared_ptr<const PunqModel> model) : model_(std::move(model)) {}
  std::string name() const override { return "punq"; }
  EstimatorCaps capabilities() const override {
    return {model_->layout.variant == FeatVariant::Revised, true};
  }
  double predict(const ConjunctiveQuery& q) const override { return crdext::predict(*model_, q); }
  const PunqModel& model() const { return *model_; }

 private:
  std::shared_ptr<const PunqModel> model_;
};

}  // namespace crdext
