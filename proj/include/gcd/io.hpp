#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcd/core.hpp"
#include "gcd/encoder.hpp"
#include "gcd/metrics.hpp"
#include "gcd/trainer.hpp"

namespace gcd::io {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr const char* kArtifactName = "gcd-discover";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Embedding file: "GCDE", u32 version, u64 n, u64 dim, then n*dim f64 values,
// row-major. All integers and floats little-endian.
void write_embeddings(const fs::path& path, const EmbeddingMatrix& e);
EmbeddingMatrix read_embeddings(const fs::path& path);

// Metadata file: CSV with header sample_id,source_id,label,split,truth.
// label/truth are integers or empty; split is "labelled" or "unlabelled".
void write_metadata(const fs::path& path, const std::vector<SampleMeta>& meta);
std::vector<SampleMeta> read_metadata(const fs::path& path);

void save_dataset(const fs::path& embeddings, const fs::path& metadata, const Dataset& d);

/// Reads both files and validates the result; any violation aborts with a
/// DataError listing every violation.
Dataset load_dataset(const fs::path& embeddings, const fs::path& metadata);

// Checkpoint: "GCDE-CKPT", u32 version, u64 input_dim, u64 hidden_dim,
// u64 n_blocks, then the parameters as f64 in EncoderLayout order.
void write_checkpoint(const fs::path& path, const EncoderParams& p);
EncoderParams read_checkpoint(const fs::path& path);

struct ClusteringInfo {
  std::string method = "kmeans";  // "kmeans" | "threshold"
  std::size_t k = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
};

nlohmann::json to_json(const ClusteringInfo& c);
ClusteringInfo clustering_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Assignment file: JSON object with the clustering echo and one cluster id
// per sample.
void write_assignment(const fs::path& path, const Assignment& a, const ClusteringInfo& info);
std::pair<Assignment, ClusteringInfo> read_assignment(const fs::path& path);

/// One line per epoch: epoch, L_scl, L_u, L_cl (tab separated, %.17g).
std::string format_log_header();
std::string format_log_line(const EpochLoss& e);

struct ReportInputs {
  const SubsetReport* report = nullptr;
  std::optional<nlohmann::json> train_config;
  ClusteringInfo clustering;
  std::optional<double> wall_clock_seconds;
};

nlohmann::json report_json(const ReportInputs& in);

/// Pretty-printed JSON with a trailing newline; deterministic for equal input.
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

}  // namespace gcd::io
