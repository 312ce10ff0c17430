#include "doctest.h"

#include <fstream>
#include <sstream>

#include "gcd/cli.hpp"
#include "gcd/io.hpp"
#include "support.hpp"

using namespace gcd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Small dataset: 3 old + 2 new classes, 2 sources x 4 clips, dim 8.
void gen_small(const test::TempDir& dir) {
  const auto r = cli({"gen", "--embeddings", (dir / "e.gcde").string(), "--metadata",
                      (dir / "m.csv").string(), "--n-old", "3", "--n-new", "2",
                      "--sources-per-class", "2", "--clips-per-source", "4", "--dim", "8",
                      "--seed", "5"});
  REQUIRE(r.code == 0);
}

std::vector<std::string> small_train_flags() {
  return {"--epochs", "5", "--hidden-dim", "8", "--seed", "3", "--tau", "0.5"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("pipeline is byte-identical across runs") {
    test::TempDir dir("cli_det");
    gen_small(dir);
    for (const char* name : {"r1.json", "r2.json"}) {
      const auto r = cli(concat({"pipeline", "--embeddings", (dir / "e.gcde").string(),
                                 "--metadata", (dir / "m.csv").string(), "--out",
                                 (dir / name).string()},
                                small_train_flags()));
      REQUIRE(r.code == 0);
    }
    const auto a = slurp(dir / "r1.json");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "r2.json"));
    const auto j = io::read_json(dir / "r1.json");
    for (const char* subset : {"all", "new", "old"}) {
      for (const char* key : {"n_samples", "acc", "nmi", "ari", "silhouette"}) {
        CHECK(j["metrics"][subset].contains(key));
      }
    }
    CHECK(j["train_config"]["tau"] == 0.5);
    CHECK(j["wall_clock_seconds"].is_null());
  }

  TEST_CASE("threshold above one gives singletons") {
    test::TempDir dir("cli_thr");
    gen_small(dir);
    const auto r = cli({"cluster", "--embeddings", (dir / "e.gcde").string(), "--out",
                        (dir / "a.json").string(), "--method", "threshold", "--delta", "1.5"});
    REQUIRE(r.code == 0);
    const auto [a, info] = io::read_assignment(dir / "a.json");
    CHECK(a.n_clusters == 40);
    CHECK(info.method == "threshold");
  }

  TEST_CASE("pipeline equals train + cluster + eval") {
    test::TempDir dir("cli_compose");
    gen_small(dir);
    const auto flags = concat(small_train_flags(), {"--lambda", "1"});
    auto p = cli(concat({"pipeline", "--embeddings", (dir / "e.gcde").string(), "--metadata",
                         (dir / "m.csv").string(), "--out", (dir / "pipe.json").string(),
                         "--k", "5"},
                        flags));
    REQUIRE(p.code == 0);

    auto t = cli(concat({"train", "--embeddings", (dir / "e.gcde").string(), "--metadata",
                         (dir / "m.csv").string(), "--out-checkpoint", (dir / "c.ckpt").string(),
                         "--out-embeddings", (dir / "z.gcde").string(), "--out-config",
                         (dir / "cfg.json").string()},
                        flags));
    REQUIRE(t.code == 0);
    CHECK(t.out.rfind("# epoch", 0) == 0);
    auto c = cli({"cluster", "--embeddings", (dir / "z.gcde").string(), "--out",
                  (dir / "a.json").string(), "--k", "5", "--seed", "3"});
    REQUIRE(c.code == 0);
    auto e = cli({"eval", "--assignment", (dir / "a.json").string(), "--metadata",
                  (dir / "m.csv").string(), "--embeddings", (dir / "z.gcde").string(),
                  "--train-config", (dir / "cfg.json").string(), "--out",
                  (dir / "comp.json").string()});
    REQUIRE(e.code == 0);
    CHECK(slurp(dir / "pipe.json") == slurp(dir / "comp.json"));
  }

  TEST_CASE("usage errors exit 1 with one JSON line") {
    auto r = cli({"pipeline", "--bogus"});
    CHECK(r.code == 1);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(nlohmann::json::parse(r.err)["error"] == "usage");

    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);

    test::TempDir dir("cli_usage");
    gen_small(dir);
    const std::vector<std::string> base{"pipeline", "--embeddings", (dir / "e.gcde").string(),
                                        "--metadata", (dir / "m.csv").string(), "--out",
                                        (dir / "r.json").string()};
    CHECK(cli(concat(base, {"--lambda", "1.5"})).code == 1);
    CHECK(cli(concat(base, {"--tau", "0"})).code == 1);
    CHECK(cli(concat(base, {"--loss-reduction", "median"})).code == 1);
    CHECK(cli({"cluster", "--embeddings", (dir / "e.gcde").string(), "--out",
               (dir / "a.json").string()})
              .code == 1);  // kmeans without --k
    CHECK(cli({"train", "--embeddings", (dir / "nope.gcde").string(), "--metadata",
               (dir / "m.csv").string(), "--out-checkpoint", "x", "--out-embeddings", "y"})
              .code == 1);
  }

  TEST_CASE("data errors exit 2") {
    test::TempDir dir("cli_data");
    gen_small(dir);
    {
      std::ofstream f(dir / "bad.csv");
      f << "sample_id,source_id,label,split,truth\na,s,0,labelled,0\n";
    }
    const auto r = cli({"pipeline", "--embeddings", (dir / "e.gcde").string(), "--metadata",
                        (dir / "bad.csv").string(), "--out", (dir / "r.json").string()});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"] == "data");
  }

  TEST_CASE("pipeline out-dir artifacts read back") {
    test::TempDir dir("cli_outdir");
    gen_small(dir);
    const auto r = cli(concat({"pipeline", "--embeddings", (dir / "e.gcde").string(),
                               "--metadata", (dir / "m.csv").string(), "--out",
                               (dir / "r.json").string(), "--out-dir", (dir / "run").string(),
                               "--log", (dir / "log.tsv").string(), "--record-timing"},
                              small_train_flags()));
    REQUIRE(r.code == 0);
    CHECK(io::read_checkpoint(dir / "run" / "encoder.ckpt").input_dim() == 8);
    CHECK(io::read_embeddings(dir / "run" / "final_embeddings.gcde").rows() == 40);
    CHECK(io::read_assignment(dir / "run" / "assignment.json").first.n_clusters == 5);
    const auto log = slurp(dir / "log.tsv");
    CHECK(std::count(log.begin(), log.end(), '\n') == 6);
    CHECK(io::read_json(dir / "r.json")["wall_clock_seconds"].is_number());
  }
}
