#include "gcd/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gcd::io {

namespace {

constexpr std::array<char, 4> kEmbeddingMagic{'G', 'C', 'D', 'E'};
constexpr std::array<char, 9> kCheckpointMagic{'G', 'C', 'D', 'E', '-', 'C', 'K', 'P', 'T'};
constexpr const char* kMetadataHeader = "sample_id,source_id,label,split,truth";

// Little-endian byte writer/reader independent of host order.
class ByteWriter {
 public:
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void save(const fs::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path.string() + ": cannot open for writing");
    f.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!f) throw DataError(path.string() + ": write failed");
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const fs::path& path) : path_(path.string()) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path_ + ": cannot open for reading");
    buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& path() const { return path_; }

  void expect_magic(std::span<const char> magic) {
    need(magic.size(), "magic");
    if (std::memcmp(buf_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw DataError(path_ + ": bad magic, expected '" +
                      std::string(magic.begin(), magic.end()) + "'");
    }
    pos_ += magic.size();
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) throw DataError(path_ + ": truncated while reading " + what);
  }

  std::string path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

std::vector<double> read_payload(ByteReader& r, std::uint64_t count) {
  if (r.remaining() != count * 8) {
    throw DataError(r.path() + ": payload is " + std::to_string(r.remaining()) +
                    " bytes, expected " + std::to_string(count * 8));
  }
  std::vector<double> v(count);
  for (auto& x : v) x = r.f64("payload");
  return v;
}

std::optional<int> parse_optional_int(const std::string& field, const std::string& where) {
  if (field.empty()) return std::nullopt;
  int v = 0;
  const auto* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw DataError(where + ": '" + field + "' is not an integer");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

void check_field(const std::string& v, const char* name, std::size_t row) {
  if (v.find_first_of(",\r\n") != std::string::npos) {
    throw DataError("metadata row " + std::to_string(row) + ": " + name +
                    " contains a comma or line break");
  }
}

}  // namespace

void write_embeddings(const fs::path& path, const EmbeddingMatrix& e) {
  ByteWriter w;
  w.raw(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  w.u32(kEmbeddingVersion);
  w.u64(e.rows());
  w.u64(e.dim());
  for (double v : e.values()) w.f64(v);
  w.save(path);
}

EmbeddingMatrix read_embeddings(const fs::path& path) {
  ByteReader r(path);
  r.expect_magic(kEmbeddingMagic);
  const auto version = r.u32("version");
  if (version != kEmbeddingVersion) {
    throw DataError(path.string() + ": unsupported embedding version " + std::to_string(version));
  }
  const auto n = r.u64("row count");
  const auto dim = r.u64("dimension");
  if (dim != 0 && n > r.remaining() / 8 / dim + 1) {
    throw DataError(path.string() + ": header claims more rows than the file holds");
  }
  EmbeddingMatrix e(n, dim, read_payload(r, n * dim));
  if (!e.all_finite()) throw DataError(path.string() + ": non-finite embedding value");
  return e;
}

void write_metadata(const fs::path& path, const std::vector<SampleMeta>& meta) {
  std::ostringstream os;
  os << kMetadataHeader << '\n';
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto& m = meta[i];
    check_field(m.sample_id, "sample_id", i);
    check_field(m.source_id, "source_id", i);
    os << m.sample_id << ',' << m.source_id << ',';
    if (m.label) os << *m.label;
    os << ',' << to_string(m.split) << ',';
    if (m.truth) os << *m.truth;
    os << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError(path.string() + ": cannot open for writing");
  f << os.str();
  if (!f) throw DataError(path.string() + ": write failed");
}

std::vector<SampleMeta> read_metadata(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path.string() + ": cannot open for reading");
  std::string line;
  std::size_t line_no = 0;
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(f, line)) throw DataError(path.string() + ": missing header row");
  ++line_no;
  strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kMetadataHeader) {
    throw DataError(path.string() + ":1: header must be '" + kMetadataHeader + "'");
  }
  std::vector<SampleMeta> meta;
  while (std::getline(f, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    auto fields = split_csv(line);
    if (fields.size() != 5) {
      throw DataError(where + ": expected 5 fields, found " + std::to_string(fields.size()));
    }
    SampleMeta m;
    m.sample_id = fields[0];
    m.source_id = fields[1];
    m.label = parse_optional_int(fields[2], where + " label");
    if (fields[3] == "labelled") {
      m.split = Split::Labelled;
    } else if (fields[3] == "unlabelled") {
      m.split = Split::Unlabelled;
    } else {
      throw DataError(where + ": split must be 'labelled' or 'unlabelled', got '" + fields[3] + "'");
    }
    m.truth = parse_optional_int(fields[4], where + " truth");
    meta.push_back(std::move(m));
  }
  return meta;
}

void save_dataset(const fs::path& embeddings, const fs::path& metadata, const Dataset& d) {
  write_embeddings(embeddings, d.features);
  write_metadata(metadata, d.meta);
}

Dataset load_dataset(const fs::path& embeddings, const fs::path& metadata) {
  Dataset d;
  d.features = read_embeddings(embeddings);
  d.meta = read_metadata(metadata);
  if (d.meta.size() != d.features.rows()) {
    throw DataError(metadata.string() + ": metadata has " + std::to_string(d.meta.size()) +
                    " rows but " + embeddings.string() + " has " +
                    std::to_string(d.features.rows()));
  }
  const auto violations = validate_dataset(d);
  if (!violations.empty()) {
    std::string msg = "dataset invalid (" + std::to_string(violations.size()) + " violations):";
    for (const auto& v : violations) {
      msg += " [sample " + std::to_string(v.index) + " " + v.rule + ": " + v.detail + "]";
    }
    throw DataError(msg);
  }
  return d;
}

void write_checkpoint(const fs::path& path, const EncoderParams& p) {
  ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  w.u64(p.input_dim());
  w.u64(p.hidden_dim());
  w.u64(p.n_blocks());
  for (double v : p.values()) w.f64(v);
  w.save(path);
}

EncoderParams read_checkpoint(const fs::path& path) {
  ByteReader r(path);
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto d = r.u64("input_dim");
  const auto h = r.u64("hidden_dim");
  const auto b = r.u64("n_blocks");
  if (d == 0 || h == 0 || b == 0) throw DataError(path.string() + ": zero encoder dimension");
  const std::uint64_t block = 2 * h * d + h + d;
  if (block > r.remaining() || b > r.remaining() / 8 / block) {
    throw DataError(path.string() + ": header claims more parameters than the file holds");
  }
  EncoderParams p(d, h, b);
  const auto values = read_payload(r, p.size());
  std::copy(values.begin(), values.end(), p.values().begin());
  if (!p.all_finite()) throw DataError(path.string() + ": non-finite parameter");
  return p;
}

nlohmann::json to_json(const ClusteringInfo& c) {
  nlohmann::json j;
  j["method"] = c.method;
  j["seed"] = c.seed;
  if (c.method == "kmeans") {
    j["k"] = c.k;
    j["restarts"] = c.restarts;
    j["max_iter"] = c.max_iter;
  } else {
    j["delta"] = c.delta;
  }
  return j;
}

ClusteringInfo clustering_from_json(const nlohmann::json& j) {
  ClusteringInfo c;
  c.method = j.at("method").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (c.method == "kmeans") {
    c.k = j.at("k").get<std::size_t>();
    c.restarts = j.at("restarts").get<std::size_t>();
    c.max_iter = j.at("max_iter").get<std::size_t>();
  } else if (c.method == "threshold") {
    c.delta = j.at("delta").get<double>();
  } else {
    throw DataError("unknown clustering method '" + c.method + "'");
  }
  return c;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["tau"] = cfg.tau;
  j["lambda"] = cfg.lambda;
  j["n_pos_unsup"] = cfg.n_pos_unsup;
  j["n_neg"] = cfg.n_neg;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["loss_reduction"] = to_string(cfg.loss_reduction);
  j["seed"] = cfg.seed;
  j["hidden_dim"] = cfg.hidden_dim;
  j["n_blocks"] = cfg.n_blocks;
  j["optimizer"] = {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}};
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.tau = j.at("tau").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.n_pos_unsup = j.at("n_pos_unsup").get<std::size_t>();
    c.n_neg = j.at("n_neg").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.loss_reduction = parse_loss_reduction(j.at("loss_reduction").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.n_blocks = j.at("n_blocks").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
}

void write_assignment(const fs::path& path, const Assignment& a, const ClusteringInfo& info) {
  nlohmann::json j;
  j["format"] = "gcd-assignment";
  j["version"] = 1;
  j["clustering"] = to_json(info);
  j["n_clusters"] = a.n_clusters;
  j["cluster_of"] = a.cluster_of;
  write_json(path, j);
}

std::pair<Assignment, ClusteringInfo> read_assignment(const fs::path& path) {
  const auto j = read_json(path);
  try {
    if (j.at("format") != "gcd-assignment" || j.at("version") != 1) {
      throw DataError(path.string() + ": not a version 1 gcd-assignment file");
    }
    Assignment a;
    a.n_clusters = j.at("n_clusters").get<int>();
    a.cluster_of = j.at("cluster_of").get<std::vector<int>>();
    for (std::size_t i = 0; i < a.cluster_of.size(); ++i) {
      if (a.cluster_of[i] < 0 || a.cluster_of[i] >= a.n_clusters) {
        throw DataError(path.string() + ": cluster id out of range at sample " + std::to_string(i));
      }
    }
    return {std::move(a), clustering_from_json(j.at("clustering"))};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json subset_json(const SubsetMetrics& m, const SubsetCounts& c) {
  nlohmann::json j;
  j["n_samples"] = m.n_samples;
  j["n_correct"] = c.correct;
  j["acc"] = m.acc;
  j["nmi"] = m.nmi;
  j["ari"] = m.ari;
  j["silhouette"] = m.silhouette_defined ? nlohmann::json(m.silhouette) : nlohmann::json();
  return j;
}

}  // namespace

std::string format_log_header() { return "# epoch\tl_scl\tl_u\tl_cl\n"; }

std::string format_log_line(const EpochLoss& e) {
  return std::to_string(e.epoch) + "\t" + fmt_g17(e.supervised) + "\t" + fmt_g17(e.unsupervised) +
         "\t" + fmt_g17(e.combined) + "\n";
}

nlohmann::json report_json(const ReportInputs& in) {
  if (in.report == nullptr) throw DataError("report_json: no metrics");
  const auto& r = *in.report;
  nlohmann::json j;
  j["artifact"] = {{"name", kArtifactName}, {"version", kArtifactVersion}};
  j["seed"] = in.train_config ? in.train_config->at("seed").get<std::uint64_t>() : in.clustering.seed;
  j["train_config"] = in.train_config ? *in.train_config : nlohmann::json();
  j["clustering"] = to_json(in.clustering);
  j["protocol"] = {{"matching", "hungarian on All, restricted to Old/New"},
                   {"nmi_normalization", "arithmetic"},
                   {"silhouette_distance", "euclidean"},
                   {"old", "labelled split"},
                   {"new", "unlabelled split"}};
  j["metrics"] = {{"all", subset_json(r.metrics.all, r.all)},
                  {"new", subset_json(r.metrics.new_classes, r.new_classes)},
                  {"old", subset_json(r.metrics.old_classes, r.old_classes)}};
  j["wall_clock_seconds"] =
      in.wall_clock_seconds ? nlohmann::json(*in.wall_clock_seconds) : nlohmann::json();
  return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError(path.string() + ": cannot open for writing");
  f << j.dump(2) << '\n';
  if (!f) throw DataError(path.string() + ": write failed");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path.string() + ": cannot open for reading");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace gcd::io
