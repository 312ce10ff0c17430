#include "gcd/core.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

namespace gcd {

const char* to_string(Split s) {
  return s == Split::Labelled ? "labelled" : "unlabelled";
}

const char* to_string(LossReduction r) {
  return r == LossReduction::Sum ? "sum" : "mean";
}

LossReduction parse_loss_reduction(const std::string& s) {
  if (s == "sum") return LossReduction::Sum;
  if (s == "mean") return LossReduction::Mean;
  throw UsageError("loss reduction must be 'sum' or 'mean', got '" + s + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<double> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    throw DataError("embedding payload has " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(rows_ * dim_));
  }
}

bool EmbeddingMatrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> idx) const {
  EmbeddingMatrix out(idx.size(), dim_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto src = row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

TrainingSet mask_truth(const Dataset& d) {
  TrainingSet t;
  t.samples.reserve(d.size());
  for (const auto& m : d.meta) {
    TrainingSample s;
    s.source_id = m.source_id;
    s.split = m.split;
    if (m.split == Split::Labelled) s.label = m.label;
    t.samples.push_back(std::move(s));
  }
  t.features = d.features;
  return t;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  const auto& meta = d.meta;

  if (d.features.rows() != meta.size()) {
    out.push_back({0, "row_count",
                   "metadata has " + std::to_string(meta.size()) +
                       " rows but features have " + std::to_string(d.features.rows())});
  }

  std::unordered_map<std::string, std::size_t> seen_ids;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto& m = meta[i];
    if (m.sample_id.empty()) {
      out.push_back({i, "sample_id_empty", "sample_id is empty"});
    } else if (auto [it, fresh] = seen_ids.emplace(m.sample_id, i); !fresh) {
      out.push_back({i, "sample_id_unique",
                     "duplicates sample " + std::to_string(it->second) + " ('" +
                         m.sample_id + "')"});
    }
    if (m.source_id.empty()) {
      out.push_back({i, "source_id_empty", "source_id is empty"});
    }
    if (m.split == Split::Labelled && !m.label) {
      out.push_back({i, "labelled_has_label", "labelled sample has no label"});
    }
    if (m.split == Split::Unlabelled && m.label) {
      out.push_back({i, "unlabelled_hides_label",
                     "unlabelled sample exposes a training label"});
    }
    if (m.label && m.truth && *m.label != *m.truth) {
      out.push_back({i, "label_matches_truth",
                     "label " + std::to_string(*m.label) + " disagrees with truth " +
                         std::to_string(*m.truth)});
    }
    if ((m.label && *m.label < 0) || (m.truth && *m.truth < 0)) {
      out.push_back({i, "class_nonnegative", "class index is negative"});
    }
  }

  if (d.features.rows() == meta.size()) {
    for (std::size_t i = 0; i < meta.size(); ++i) {
      for (double v : d.features.row(i)) {
        if (!std::isfinite(v)) {
          out.push_back({i, "features_finite", "feature row has a non-finite entry"});
          break;
        }
      }
    }
  }

  // One ground truth per source: first member is the reference.
  std::map<std::string, std::size_t> first_of_source;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (meta[i].source_id.empty()) continue;
    auto [it, fresh] = first_of_source.emplace(meta[i].source_id, i);
    if (fresh) continue;
    std::size_t ref = it->second;
    auto a = meta[ref].ground_truth();
    auto b = meta[i].ground_truth();
    if (a != b) {
      auto show = [](std::optional<int> v) { return v ? std::to_string(*v) : std::string("none"); };
      out.push_back({i, "source_single_class",
                     "samples " + std::to_string(ref) + " and " + std::to_string(i) +
                         " share source '" + meta[i].source_id + "' but have truth " +
                         show(a) + " and " + show(b)});
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw UsageError("tau must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
  if (n_pos_unsup < 1) throw UsageError("n_pos_unsup must be >= 1");
  if (n_neg < 1) throw UsageError("n_neg must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be finite and >= 0");
  }
  if (hidden_dim < 1 || n_blocks < 1) throw UsageError("encoder dims must be >= 1");
}

}  // namespace gcd
