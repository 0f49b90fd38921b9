#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "au2vec/binio.hpp"
#include "au2vec/ingest.hpp"
#include "au2vec/version.hpp"
#include "cli.hpp"
#include "generators.hpp"

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = au2vec::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const gen::TempDir& d, const std::string& name) { return (d / name).string(); }

/// Runs every stage on a small synthetic corpus inside `d`.
void run_stages(const gen::TempDir& d) {
  const std::string w = "1";
  REQUIRE(cli({"synth", "--seed", "3", "--n-videos", "24", "--frames", "60", "--n-states", "5", "--out", p(d, "c.aufc"),
               "--labels", p(d, "labels.tsv"), "--truth", p(d, "truth.tsv")})
              .code == 0);
  REQUIRE(cli({"cluster", "--corpus", p(d, "c.aufc"), "--k", "6", "--seed", "1", "--out", p(d, "cb.aukm"), "--workers", w})
              .code == 0);
  REQUIRE(cli({"elbow", "--corpus", p(d, "c.aufc"), "--ks", "2,4,6,8", "--seed", "1", "--report", p(d, "elbow.tsv"),
               "--workers", w})
              .code == 0);
  REQUIRE(cli({"tokenize", "--corpus", p(d, "c.aufc"), "--codebook", p(d, "cb.aukm"), "--min-count", "5", "--out",
               p(d, "t.autk"), "--vocab", p(d, "v.auvb"), "--workers", w})
              .code == 0);
  REQUIRE(cli({"cooccur", "--tokens", p(d, "t.autk"), "--vocab", p(d, "v.auvb"), "--out", p(d, "x.auco"), "--workers", w})
              .code == 0);
  REQUIRE(cli({"train-embeddings", "--cooc", p(d, "x.auco"), "--vocab", p(d, "v.auvb"), "--dim", "8", "--epochs", "10",
               "--seed", "2", "--out", p(d, "m.augv"), "--export", p(d, "vec.txt"), "--workers", w})
              .code == 0);
  REQUIRE(cli({"features", "--kind", "static", "--corpus", p(d, "c.aufc"), "--out", p(d, "fs.tsv")}).code == 0);
  REQUIRE(cli({"features", "--kind", "dynamic", "--corpus", p(d, "c.aufc"), "--out", p(d, "fd.tsv")}).code == 0);
  REQUIRE(cli({"features", "--kind", "pooled", "--tokens", p(d, "t.autk"), "--model", p(d, "m.augv"), "--vocab",
               p(d, "v.auvb"), "--out", p(d, "fp.tsv")})
              .code == 0);
  REQUIRE(cli({"evaluate", "--features", p(d, "fp.tsv"), "--labels", p(d, "labels.tsv"), "--folds", "4", "--seed", "5",
               "--random-baseline", "--out", p(d, "r.tsv"), "--workers", w})
              .code == 0);
  REQUIRE(cli({"evaluate", "--features", p(d, "fs.tsv"), "--labels", p(d, "labels.tsv"), "--folds", "4", "--seed", "5",
               "--json", "--out", p(d, "r.json"), "--workers", w})
              .code == 0);
}

const std::vector<std::string> kStageOutputs{"c.aufc", "labels.tsv", "truth.tsv", "cb.aukm", "elbow.tsv", "t.autk",
                                             "v.auvb", "x.auco",     "m.augv",    "vec.txt", "fs.tsv",    "fd.tsv",
                                             "fp.tsv", "r.tsv",      "r.json"};

}  // namespace

TEST_CASE("usage and version") {
  const auto none = cli({});
  CHECK(none.code == 1);
  CHECK(none.err.find("Usage") != std::string::npos);
  CHECK(cli({"frobnicate"}).code == 1);
  const auto v = cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(au2vec::kVersion) != std::string::npos);
  CHECK(cli({"cluster", "--corpus", "x", "--k", "3", "--out", "y"}).code == 1);  // no --seed
  CHECK(cli({"synth", "--out", "y"}).code == 1);
}

TEST_CASE("every stage is byte-reproducible with one worker") {
  gen::TempDir a("cli_a"), b("cli_b");
  run_stages(a);
  run_stages(b);
  for (const auto& name : kStageOutputs) {
    INFO(name);
    CHECK(au2vec::read_file(a / name) == au2vec::read_file(b / name));
  }
  const auto nn = cli({"neighbors", "--model", p(a, "m.augv"), "--vocab", p(a, "v.auvb"), "--token", "<UNK>", "--n", "3"});
  CHECK(nn.code == 0);
  CHECK(std::count(nn.out.begin(), nn.out.end(), '\n') == 3);
  const auto nv = cli({"neighbors", "--vectors", p(a, "vec.txt"), "--token", "<START>", "--n", "2"});
  CHECK(nv.code == 0);
  CHECK(cli({"neighbors", "--vectors", p(a, "vec.txt"), "--token", "c999", "--n", "2"}).code == 2);
}

TEST_CASE("corrupted magic bytes exit 2 and name the file") {
  gen::TempDir d("cli_bad");
  run_stages(d);
  const std::vector<std::pair<std::string, std::vector<std::string>>> readers{
      {"c.aufc", {"cluster", "--corpus", p(d, "c.aufc"), "--k", "3", "--seed", "1", "--out", p(d, "o")}},
      {"cb.aukm", {"tokenize", "--corpus", p(d, "c.aufc"), "--codebook", p(d, "cb.aukm"), "--out", p(d, "o"), "--vocab", p(d, "o2")}},
      {"t.autk", {"cooccur", "--tokens", p(d, "t.autk"), "--vocab", p(d, "v.auvb"), "--out", p(d, "o")}},
      {"v.auvb", {"cooccur", "--tokens", p(d, "t.autk"), "--vocab", p(d, "v.auvb"), "--out", p(d, "o")}},
      {"x.auco", {"train-embeddings", "--cooc", p(d, "x.auco"), "--vocab", p(d, "v.auvb"), "--seed", "1", "--out", p(d, "o")}},
      {"m.augv", {"neighbors", "--model", p(d, "m.augv"), "--vocab", p(d, "v.auvb"), "--token", "<UNK>"}},
  };
  for (const auto& [file, args] : readers) {
    INFO(file);
    const auto good = au2vec::read_file(d / file);
    auto bad = good;
    bad[0] ^= 0x20;
    au2vec::write_file(d / file, bad);
    const auto r = cli(args);
    CHECK(r.code == 2);
    CHECK(r.err.find(file) != std::string::npos);
    au2vec::write_file(d / file, good);
  }
  CHECK(cli({"cluster", "--corpus", p(d, "missing.aufc"), "--k", "3", "--seed", "1", "--out", p(d, "o")}).code == 2);
}

TEST_CASE("numeric failures exit 3") {
  gen::TempDir d("cli_num");
  run_stages(d);
  CHECK(cli({"train-embeddings", "--cooc", p(d, "x.auco"), "--vocab", p(d, "v.auvb"), "--seed", "1", "--lr", "1e300",
             "--dim", "4", "--out", p(d, "o")})
            .code == 3);
}

TEST_CASE("ingest reads OpenFace CSVs") {
  gen::TempDir d("cli_ingest");
  std::filesystem::create_directories(d / "csv");
  gen::Rng rng(1);
  for (const char* id : {"x", "y"}) {
    auto s = gen::sequence(rng, id, 50, 25.0);
    for (auto& f : s.frames) f.confidence = 0.95;
    au2vec::write_file(d / "csv" / (std::string(id) + ".csv"), gen::openface_csv(s.frames));
  }
  const auto r = cli({"ingest", "--input", p(d, "csv"), "--out", p(d, "c.aufc"), "--workers", "1"});
  REQUIRE(r.code == 0);
  const auto c = au2vec::read_corpus(d / "c.aufc");
  REQUIRE(c.sequences.size() == 2);
  CHECK(c.sequences[0].frames.size() == 10);
  CHECK(cli({"ingest", "--input", p(d, "csv"), "--out", p(d, "c.aufc"), "--target-fps", "50"}).code == 1);
}

TEST_CASE("pipeline writes a verifiable manifest") {
  gen::TempDir d("cli_pipe");
  REQUIRE(cli({"synth", "--seed", "3", "--n-videos", "20", "--frames", "50", "--n-states", "4", "--out", p(d, "c.aufc"),
               "--labels", p(d, "l.tsv")})
              .code == 0);
  const auto r = cli({"pipeline", "--input", p(d, "c.aufc"), "--labels", p(d, "l.tsv"), "--seed", "1", "--elbow-ks",
                      "2,4,8", "--min-count", "3", "--dim", "6", "--epochs", "5", "--folds", "4", "--out-dir",
                      p(d, "out"), "--workers", "1"});
  REQUIRE(r.code == 0);
  for (const char* f : {"corpus.aufc", "elbow.tsv", "codebook.aukm", "vocab.auvb", "tokens.autk", "cooc.auco",
                        "model.augv", "vectors.txt", "features_static.tsv", "features_dynamic.tsv",
                        "features_pooled.tsv", "report_static.tsv", "report_dynamic.tsv", "report_pooled.tsv",
                        "manifest.json"}) {
    CHECK_MESSAGE(std::filesystem::exists(d / "out" / f), f);
  }
  CHECK(cli({"verify-manifest", "--manifest", p(d, "out/manifest.json")}).code == 0);
  auto bytes = au2vec::read_file(d / "out" / "cooc.auco");
  bytes.back() ^= 1;
  au2vec::write_file(d / "out" / "cooc.auco", bytes);
  const auto v = cli({"verify-manifest", "--manifest", p(d, "out/manifest.json")});
  CHECK(v.code == 2);
  CHECK(v.err.find("cooc.auco") != std::string::npos);
}

TEST_CASE("installed binary reports exit codes") {
  gen::TempDir d("cli_bin");
  const std::string bin = AU2VEC_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--version") == 0);
  CHECK(status("") == 1);
  au2vec::write_file(d / "bad.aufc", "XXXX0000");
  CHECK(status("cluster --corpus " + p(d, "bad.aufc") + " --k 2 --seed 1 --out " + p(d, "o")) == 2);
}
