#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcd {

// Error categories map onto CLI exit codes (usage=1, data=2, numeric=3).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { Labelled, Unlabelled };

const char* to_string(Split s);

/// Per-sample metadata. `label` is the class visible to training and is
/// present exactly for labelled samples. `truth` is evaluation-only ground
/// truth; for labelled samples it may be omitted (the label is the truth).
struct SampleMeta {
  std::string sample_id;
  std::string source_id;
  std::optional<int> label;
  Split split = Split::Unlabelled;
  std::optional<int> truth;

  /// Ground-truth class as seen by evaluation.
  std::optional<int> ground_truth() const { return label ? label : truth; }

  bool operator==(const SampleMeta&) const = default;
};

/// Dense row-major matrix of doubles, one row per sample.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, double fill = 0.0)
      : rows_(rows), dim_(dim), values_(rows * dim, fill) {}
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  /// Rows `idx` in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> idx) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct Dataset {
  std::vector<SampleMeta> meta;
  EmbeddingMatrix features;

  std::size_t size() const { return meta.size(); }
  bool operator==(const Dataset&) const = default;
};

/// Per-sample view handed to training code. It has no ground-truth slot, so
/// hidden labels of unlabelled samples cannot leak into the objective.
struct TrainingSample {
  std::string source_id;
  std::optional<int> label;
  Split split = Split::Unlabelled;
};

struct TrainingSet {
  std::vector<TrainingSample> samples;
  EmbeddingMatrix features;

  std::size_t size() const { return samples.size(); }
};

TrainingSet mask_truth(const Dataset& d);

struct Violation {
  std::size_t index;  // first offending sample
  std::string rule;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Checks every Dataset invariant; never throws.
std::vector<Violation> validate_dataset(const Dataset& d);

struct Assignment {
  std::vector<int> cluster_of;
  int n_clusters = 0;

  std::size_t size() const { return cluster_of.size(); }
  bool operator==(const Assignment&) const = default;
};

enum class LossReduction { Sum, Mean };

const char* to_string(LossReduction r);
LossReduction parse_loss_reduction(const std::string& s);

struct TrainConfig {
  double tau = 0.1;
  double lambda = 0.5;
  std::size_t n_pos_unsup = 5;
  std::size_t n_neg = 50;
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  LossReduction loss_reduction = LossReduction::Mean;
  std::uint64_t seed = 0;
  std::size_t hidden_dim = 256;
  std::size_t n_blocks = 2;

  /// Throws UsageError on the first out-of-range field.
  void validate() const;
};

struct SubsetMetrics {
  std::size_t n_samples = 0;
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double silhouette = 0.0;
  bool silhouette_defined = false;
};

struct MetricReport {
  SubsetMetrics all;
  SubsetMetrics new_classes;
  SubsetMetrics old_classes;
};

}  // namespace gcd
