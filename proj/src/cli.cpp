#include "gcd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "gcd/clustering.hpp"
#include "gcd/datagen.hpp"
#include "gcd/io.hpp"
#include "gcd/metrics.hpp"
#include "gcd/trainer.hpp"

namespace gcd {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct TrainFlags {
  TrainConfig cfg;
  std::string loss_reduction = "mean";
  std::string init_checkpoint;

  void add(CLI::App* app) {
    app->add_option("--tau", cfg.tau, "Softmax temperature")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda", cfg.lambda, "Weight of the unsupervised loss")
        ->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app->add_option("--seed", cfg.seed)->capture_default_str();
    app->add_option("--n-pos", cfg.n_pos_unsup, "Same-source positives per anchor")
        ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 31));
    app->add_option("--n-neg", cfg.n_neg, "Hard negatives per anchor")->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 31));
    app->add_option("--loss-reduction", loss_reduction)->capture_default_str()
        ->check(CLI::IsMember({"mean", "sum"}));
    app->add_option("--hidden-dim", cfg.hidden_dim)->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    app->add_option("--blocks", cfg.n_blocks)->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 10));
    app->add_option("--init-checkpoint", init_checkpoint, "Start from these encoder weights")
        ->check(CLI::ExistingFile);
  }

  TrainConfig resolve() {
    cfg.loss_reduction = parse_loss_reduction(loss_reduction);
    cfg.validate();
    return cfg;
  }

  EncoderParams initial_params(std::size_t input_dim) const {
    if (!init_checkpoint.empty()) {
      auto p = io::read_checkpoint(init_checkpoint);
      if (p.input_dim() != input_dim) {
        throw DataError(init_checkpoint + ": checkpoint input_dim " +
                        std::to_string(p.input_dim()) + " does not match features");
      }
      return p;
    }
    return encoder_init(input_dim, cfg.hidden_dim, cfg.n_blocks, cfg.seed);
  }
};

struct ClusterFlags {
  io::ClusteringInfo info;
  std::optional<std::size_t> k;

  void add(CLI::App* app, bool with_seed) {
    app->add_option("--method", info.method)->capture_default_str()
        ->check(CLI::IsMember({"kmeans", "threshold"}));
    app->add_option("--k", k, "Number of clusters for kmeans");
    app->add_option("--delta", info.delta, "Cosine threshold");
    app->add_option("--restarts", info.restarts)->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    app->add_option("--max-iter", info.max_iter)->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
    if (with_seed) app->add_option("--seed", info.seed)->capture_default_str();
  }
};

Assignment run_clustering(const EmbeddingMatrix& z, const io::ClusteringInfo& info) {
  if (info.method == "threshold") return threshold_cluster(z, info.delta);
  KMeansOptions opt;
  opt.k = info.k;
  opt.seed = info.seed;
  opt.max_iter = info.max_iter;
  opt.n_restarts = info.restarts;
  return kmeans(z, opt).assignment;
}

void emit_log(const std::vector<EpochLoss>& history, std::ostream& os) {
  os << io::format_log_header();
  for (const auto& e : history) os << io::format_log_line(e);
}

std::size_t count_truth_classes(const Dataset& d) {
  std::set<int> classes;
  for (const auto& m : d.meta) {
    if (auto t = m.ground_truth()) classes.insert(*t);
  }
  return classes.size();
}

void write_error(std::ostream& err, const char* category, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  err << nlohmann::json{{"error", category}, {"message", flat}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized category discovery over precomputed embeddings", "gcd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kArtifactVersion));

  // gen
  SynthConfig synth;
  std::string gen_emb, gen_meta;
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset");
  gen->add_option("--embeddings", gen_emb, "Output embedding file")->required();
  gen->add_option("--metadata", gen_meta, "Output metadata file")->required();
  gen->add_option("--n-old", synth.n_old_classes)->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  gen->add_option("--n-new", synth.n_new_classes)->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  gen->add_option("--sources-per-class", synth.sources_per_class)->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  gen->add_option("--clips-per-source", synth.clips_per_source)->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  gen->add_option("--dim", synth.dim)->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  gen->add_option("--class-spread", synth.class_spread)->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--source-sigma", synth.source_sigma)->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--clip-sigma", synth.clip_sigma)->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen->add_flag("--overlap", synth.overlap, "Place old classes 0 and 1 close together");
  gen->add_option("--overlap-fraction", synth.overlap_fraction)->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", synth.seed)->capture_default_str();

  // train
  TrainFlags train_flags;
  std::string tr_emb, tr_meta, tr_ckpt, tr_out_emb, tr_cfg, tr_log;
  auto* train_cmd = app.add_subcommand("train", "Train the encoder and write final embeddings");
  train_cmd->add_option("--embeddings", tr_emb)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--metadata", tr_meta)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-checkpoint", tr_ckpt)->required();
  train_cmd->add_option("--out-embeddings", tr_out_emb)->required();
  train_cmd->add_option("--out-config", tr_cfg, "Training config echo (JSON) for eval");
  train_cmd->add_option("--log", tr_log, "Per-epoch loss log (default: stdout)");
  train_flags.add(train_cmd);

  // cluster
  ClusterFlags cl_flags;
  std::string cl_emb, cl_out;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster an embedding file");
  cluster_cmd->add_option("--embeddings", cl_emb)->required()->check(CLI::ExistingFile);
  cluster_cmd->add_option("--out", cl_out, "Output assignment file")->required();
  cl_flags.add(cluster_cmd, true);

  // eval
  std::string ev_assign, ev_meta, ev_emb, ev_cfg, ev_out;
  bool ev_timing = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score an assignment on Old/New/All");
  eval_cmd->add_option("--assignment", ev_assign)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--metadata", ev_meta)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--embeddings", ev_emb, "Embeddings that were clustered (silhouette)")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--train-config", ev_cfg, "Config echo written by train")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ev_out, "Output report file")->required();
  eval_cmd->add_flag("--record-timing", ev_timing, "Store wall-clock seconds in the report");

  // pipeline
  TrainFlags pl_train;
  ClusterFlags pl_cluster;
  std::string pl_emb, pl_meta, pl_out, pl_dir, pl_log;
  bool pl_timing = false;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Train, cluster and evaluate");
  pipeline_cmd->add_option("--embeddings", pl_emb)->required()->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--metadata", pl_meta)->required()->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--out", pl_out, "Output report file")->required();
  pipeline_cmd->add_option("--out-dir", pl_dir, "Also write checkpoint, embeddings, assignment");
  pipeline_cmd->add_option("--log", pl_log, "Per-epoch loss log file");
  pipeline_cmd->add_flag("--record-timing", pl_timing, "Store wall-clock seconds in the report");
  pl_train.add(pipeline_cmd);
  pl_cluster.add(pipeline_cmd, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kArtifactVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    const auto started = Clock::now();

    if (gen->parsed()) {
      io::save_dataset(gen_emb, gen_meta, generate(synth));
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      const auto cfg = train_flags.resolve();
      const auto d = io::load_dataset(tr_emb, tr_meta);
      const auto view = mask_truth(d);
      const auto result = train(view, cfg, train_flags.initial_params(view.features.dim()));
      io::write_checkpoint(tr_ckpt, result.state.params);
      io::write_embeddings(tr_out_emb, result.embeddings);
      if (!tr_cfg.empty()) io::write_json(tr_cfg, io::to_json(cfg));
      if (tr_log.empty()) {
        emit_log(result.state.history, out);
      } else {
        std::ofstream log(tr_log, std::ios::trunc);
        if (!log) throw DataError(tr_log + ": cannot open for writing");
        emit_log(result.state.history, log);
      }
      return kExitOk;
    }

    if (cluster_cmd->parsed()) {
      auto info = cl_flags.info;
      if (info.method == "kmeans") {
        if (!cl_flags.k) throw UsageError("cluster --method kmeans requires --k");
        info.k = *cl_flags.k;
      }
      const auto z = io::read_embeddings(cl_emb);
      io::write_assignment(cl_out, run_clustering(z, info), info);
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto [assignment, info] = io::read_assignment(ev_assign);
      Dataset d;
      d.meta = io::read_metadata(ev_meta);
      d.features = io::read_embeddings(ev_emb);
      if (d.features.rows() != d.meta.size()) {
        throw DataError("metadata has " + std::to_string(d.meta.size()) + " rows but " + ev_emb +
                        " has " + std::to_string(d.features.rows()));
      }
      if (const auto v = validate_dataset(d); !v.empty()) {
        throw DataError("dataset invalid at sample " + std::to_string(v.front().index) + ": " +
                        v.front().rule + ": " + v.front().detail);
      }
      const auto report = subset_report(assignment, d, d.features);
      io::ReportInputs in{&report, std::nullopt, info, std::nullopt};
      if (!ev_cfg.empty()) in.train_config = io::read_json(ev_cfg);
      if (ev_timing) {
        in.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
      }
      io::write_json(ev_out, io::report_json(in));
      return kExitOk;
    }

    if (pipeline_cmd->parsed()) {
      const auto cfg = pl_train.resolve();
      const auto d = io::load_dataset(pl_emb, pl_meta);
      auto info = pl_cluster.info;
      info.seed = cfg.seed;
      if (info.method == "kmeans") info.k = pl_cluster.k ? *pl_cluster.k : count_truth_classes(d);

      const auto view = mask_truth(d);
      const auto result = train(view, cfg, pl_train.initial_params(view.features.dim()));
      const auto assignment = run_clustering(result.embeddings, info);
      const auto report = subset_report(assignment, d, result.embeddings);

      if (!pl_dir.empty()) {
        const fs::path dir(pl_dir);
        fs::create_directories(dir);
        io::write_checkpoint(dir / "encoder.ckpt", result.state.params);
        io::write_embeddings(dir / "final_embeddings.gcde", result.embeddings);
        io::write_json(dir / "train_config.json", io::to_json(cfg));
        io::write_assignment(dir / "assignment.json", assignment, info);
      }
      if (!pl_log.empty()) {
        std::ofstream log(pl_log, std::ios::trunc);
        if (!log) throw DataError(pl_log + ": cannot open for writing");
        emit_log(result.state.history, log);
      }
      io::ReportInputs in{&report, io::to_json(cfg), info, std::nullopt};
      if (pl_timing) {
        in.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
      }
      io::write_json(pl_out, io::report_json(in));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    write_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const NumericError& e) {
    write_error(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    write_error(err, "data", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace gcd
