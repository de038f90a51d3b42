#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "styloforge/config.hpp"
#include "styloforge/corpus.hpp"
#include "styloforge/error.hpp"
#include "styloforge/synthetic.hpp"
#include "test_support.hpp"

using namespace styloforge;
using nlohmann::json;
using testsupport::TempDir;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(STYLOFORGE_CLI_PATH) + " " + args + " 2>&1";
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string write_small_corpus(const TempDir& dir, int n_authors = 80, int n_langs = 4,
                               bool confound = false) {
  SyntheticConfig syn;
  syn.n_authors = n_authors;
  syn.n_langs = n_langs;
  syn.words_per_doc = 40;
  syn.topic_confound = confound;
  Corpus corpus = make_synthetic_corpus(syn);
  std::string path = dir.file("corpus.jsonl");
  save_corpus(corpus, path);
  return path;
}

std::string write_config(const TempDir& dir, const json& overrides,
                         const std::string& name = "config.json") {
  json cfg = {{"split", {{"ratios", {70, 15, 15}}, {"seed", 5}}},
              {"tokenizer", {{"merges", 100}, {"function_k", 25}}},
              {"batch", {{"authors", 8}}},
              {"model", {{"dim", 16}, {"out_dim", 8}}},
              {"optim", {{"lr_peak", 1e-3}}},
              {"trainer", {{"epochs", 2}}}};
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
      cfg[it.key()][jt.key()] = jt.value();
  }
  std::string path = dir.file(name);
  std::ofstream out(path);
  out << cfg.dump(2);
  return path;
}

}  // namespace

TEST_CASE("split writes the manifest with exact sizes and exits 0") {
  TempDir dir("cli_split");
  Corpus corpus = testsupport::simple_corpus({{"en", 100}});
  save_corpus(corpus, dir.file("c.jsonl"));
  CliResult r = run_cli("split --corpus " + dir.file("c.jsonl") +
                        " --ratios 85,5,10 --seed 7 --out " + dir.file("split.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("config_hash:") != std::string::npos);
  SplitManifest m = load_split_manifest(dir.file("split.json"));
  CHECK(m.train_ids.size() == 85);
  CHECK(m.validation_ids.size() == 5);
  CHECK(m.test_ids.size() == 10);
  CHECK(m.seed == 7);
}

TEST_CASE("ingest validates and reports per-language counts") {
  TempDir dir("cli_ingest");
  std::string corpus = write_small_corpus(dir, 40, 2);
  CliResult r = run_cli("ingest --corpus " + corpus);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("records: 40") != std::string::npos);
  CHECK(r.output.find("languages: 2") != std::string::npos);
}

TEST_CASE("ingest of a broken corpus exits 1 with the line number") {
  TempDir dir("cli_ingest_bad");
  {
    std::ofstream out(dir.file("bad.jsonl"));
    out << R"({"author_id":"a1","lang":"en","domain":"d","doc0":"x","doc1":"y"})" << '\n';
    out << "not json\n";
  }
  CliResult r = run_cli("ingest --corpus " + dir.file("bad.jsonl"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("unknown verbs and unknown config keys exit 2") {
  TempDir dir("cli_errors");
  SUBCASE("unknown verb") {
    CliResult r = run_cli("frobnicate");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unknown config key is named in the message") {
    std::string cfg = dir.file("bad.json");
    {
      std::ofstream out(cfg);
      out << R"({"trainer": {"epochz": 3}})";
    }
    CliResult r = run_cli("ingest --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("trainer.epochz") != std::string::npos);
  }
  SUBCASE("out-of-range value is named") {
    std::string cfg = dir.file("bad2.json");
    {
      std::ofstream out(cfg);
      out << R"({"pcm": {"rate": 1.5}})";
    }
    CliResult r = run_cli("ingest --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("pcm.rate") != std::string::npos);
  }
}

TEST_CASE("--help lists every config key with defaults") {
  CliResult top = run_cli("--help");
  CHECK(top.exit_code == 0);
  for (const char* verb : {"ingest", "split", "build-vocab", "train", "eval", "verify", "probe",
                           "sweep-mask", "ablate-pcm", "ablate-lab", "baseline-random"})
    CHECK(top.output.find(verb) != std::string::npos);

  CliResult help = run_cli("train --help");
  CHECK(help.exit_code == 0);
  for (const char* key : {"corpus.path", "split.ratios", "tokenizer.merges", "pcm.rate",
                          "batch.authors", "model.dim", "loss.tau", "optim.lr_peak",
                          "trainer.epochs", "eval.k", "sweep.rates", "STYLOFORGE_SEED"})
    CHECK(help.output.find(key) != std::string::npos);
}

TEST_CASE("build-vocab writes vocab and frequency files from the train split only") {
  TempDir dir("cli_vocab");
  std::string corpus = write_small_corpus(dir, 40, 2);
  CliResult split = run_cli("split --corpus " + corpus + " --ratios 70,15,15 --seed 3 --out " +
                            dir.file("split.json"));
  REQUIRE(split.exit_code == 0);
  CliResult r = run_cli("build-vocab --corpus " + corpus + " --split " + dir.file("split.json") +
                        " --out-dir " + dir.str());
  CHECK(r.exit_code == 0);
  Vocab v = load_vocab(dir.file("vocab.json"));
  CHECK(v.size() > 259);
  FrequencyTable freq = load_frequency_table(dir.file("freq.json"));
  CHECK(freq.totals.size() == 2);
}

TEST_CASE("train twice with the same config produces identical checkpoints") {
  TempDir dir("cli_train");
  std::string corpus = write_small_corpus(dir, 60, 2);
  std::string cfg = write_config(dir, {{"corpus", {{"path", corpus}}}});

  CliResult r1 = run_cli("train --config " + cfg + " --run-dir " + dir.file("run1"));
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.output.find("config_hash:") != std::string::npos);
  CliResult r2 = run_cli("train --config " + cfg + " --run-dir " + dir.file("run2"));
  REQUIRE(r2.exit_code == 0);

  CHECK(testsupport::read_file(dir.file("run1") + "/best.marc") ==
        testsupport::read_file(dir.file("run2") + "/best.marc"));
  CHECK(testsupport::read_file(dir.file("run1") + "/runlog.jsonl") ==
        testsupport::read_file(dir.file("run2") + "/runlog.jsonl"));

  // run directory layout
  for (const char* artifact : {"config.json", "split.json", "vocab.json", "freq.json",
                               "runlog.jsonl", "best.marc", "best.marc.json", "best.mopt"})
    CHECK(std::filesystem::exists(dir.file("run1") + "/" + artifact));

  // the config hash stamps every artifact that carries one
  json config_file = json::parse(testsupport::read_file(dir.file("run1") + "/config.json"));
  const std::string hash = config_file.at("config_hash");
  CHECK(testsupport::read_file(dir.file("run1") + "/best.marc.json").find(hash) !=
        std::string::npos);
  CHECK(testsupport::read_file(dir.file("run1") + "/runlog.jsonl").find(hash) !=
        std::string::npos);
  CHECK(testsupport::read_file(dir.file("run1") + "/split.json").find(hash) !=
        std::string::npos);
}

TEST_CASE("eval, verify, probe and baseline-random work against a finished run") {
  TempDir dir("cli_eval");
  std::string corpus = write_small_corpus(dir, 60, 2);
  std::string cfg = write_config(dir, {{"corpus", {{"path", corpus}}}});
  REQUIRE(run_cli("train --config " + cfg + " --run-dir " + dir.file("run")).exit_code == 0);

  SUBCASE("eval writes report json + csv") {
    CliResult r = run_cli("eval --run-dir " + dir.file("run") + " --which test");
    CHECK(r.exit_code == 0);
    json report = json::parse(testsupport::read_file(dir.file("run") + "/eval.json"));
    CHECK(report.at("n_queries").get<int>() == 8);  // floor(30 * 0.15) per language
    CHECK(report.at("r_at_k").get<double>() >= 0.0);
    std::string csv = testsupport::read_file(dir.file("run") + "/eval.csv");
    CHECK(csv.rfind("group,n,r_at_8,mrr\n", 0) == 0);
  }
  SUBCASE("verify reports AUROC") {
    CliResult r = run_cli("verify --run-dir " + dir.file("run") + " --which test");
    CHECK(r.exit_code == 0);
    json report = json::parse(testsupport::read_file(dir.file("run") + "/verify.json"));
    double auroc_value = report.at("auroc").get<double>();
    CHECK(auroc_value >= 0.0);
    CHECK(auroc_value <= 1.0);
  }
  SUBCASE("probe reports accuracy for a domain label") {
    CliResult r = run_cli("probe --run-dir " + dir.file("run") +
                          " --label-key domain --positive dom0");
    CHECK(r.exit_code == 0);
    json report = json::parse(testsupport::read_file(dir.file("run") + "/probe.json"));
    CHECK(report.at("accuracy").get<double>() >= 0.0);
  }
  SUBCASE("baseline-random writes reference metrics") {
    CliResult r = run_cli("baseline-random --config " + cfg + " --run-dir " + dir.file("run"));
    CHECK(r.exit_code == 0);
    json report = json::parse(testsupport::read_file(dir.file("run") + "/baseline.json"));
    CHECK(report.at("tag").get<std::string>() == "random_order");
  }
}

TEST_CASE("ablate-lab reports the negative-composition contrast") {
  TempDir dir("cli_ablate");
  std::string corpus = write_small_corpus(dir, 80, 4);
  std::string cfg = write_config(dir, {{"corpus", {{"path", corpus}}}});
  CliResult r = run_cli("ablate-lab --config " + cfg + " --run-dir " + dir.file("ab"));
  REQUIRE(r.exit_code == 0);
  json report = json::parse(testsupport::read_file(dir.file("ab") + "/ablate_lab.json"));
  CHECK(report.at("lab").at("same_lang_negative_fraction").get<double>() == 1.0);
  // 4 equal languages: random batching exposes ~75% cross-lingual negatives
  double random_fraction = report.at("random").at("same_lang_negative_fraction").get<double>();
  CHECK(random_fraction == doctest::Approx(0.25).epsilon(0.5));
  CHECK(report.at("lab").contains("step_loss_variance"));
}

TEST_CASE("ablate-pcm runs paired configs differing only in the masking rate") {
  TempDir dir("cli_ablate_pcm");
  std::string corpus = write_small_corpus(dir, 60, 1, /*confound=*/true);
  std::string cfg = write_config(dir, {{"corpus", {{"path", corpus}}}});
  CliResult r = run_cli("ablate-pcm --config " + cfg + " --run-dir " + dir.file("ab"));
  REQUIRE(r.exit_code == 0);
  json report = json::parse(testsupport::read_file(dir.file("ab") + "/ablate_pcm.json"));
  CHECK(report.contains("pcm_rate_0"));
  CHECK(report.contains("delta"));
  // both arms leave artifacts behind
  CHECK(std::filesystem::exists(dir.file("ab") + "/arm_on/best.marc"));
  CHECK(std::filesystem::exists(dir.file("ab") + "/arm_off/best.marc"));
}

TEST_CASE("sweep-mask emits a well-formed rate/R@8 CSV") {
  TempDir dir("cli_sweep");
  std::string corpus = write_small_corpus(dir, 60, 2);
  std::string cfg = write_config(dir, {{"corpus", {{"path", corpus}}},
                                       {"sweep", {{"rates", {0.0, 0.2}}}}});
  CliResult r = run_cli("sweep-mask --config " + cfg + " --run-dir " + dir.file("sweep"));
  REQUIRE(r.exit_code == 0);
  std::string csv = testsupport::read_file(dir.file("sweep") + "/sweep.csv");
  REQUIRE(csv.rfind("rate,r_at_8,mrr\n", 0) == 0);
  // one data row per rate, each parsing as numbers
  int rows = 0;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    double rate = 0, r8 = 0, mrr = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &rate, &r8, &mrr) == 3);
    CHECK(r8 >= 0.0);
    CHECK(r8 <= 1.0);
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("STYLOFORGE_SEED overrides every seed") {
  TempDir dir("cli_seed_env");
  Corpus corpus = testsupport::simple_corpus({{"en", 50}});
  save_corpus(corpus, dir.file("c.jsonl"));

  CliResult direct = run_cli("split --corpus " + dir.file("c.jsonl") +
                             " --ratios 70,15,15 --seed 11 --out " + dir.file("a.json"));
  REQUIRE(direct.exit_code == 0);
  const std::string env_cmd = "STYLOFORGE_SEED=11 " + std::string(STYLOFORGE_CLI_PATH) +
                              " split --corpus " + dir.file("c.jsonl") +
                              " --ratios 70,15,15 --seed 999 --out " + dir.file("b.json") +
                              " 2>&1";
  REQUIRE(std::system(env_cmd.c_str()) == 0);
  SplitManifest a = load_split_manifest(dir.file("a.json"));
  SplitManifest b = load_split_manifest(dir.file("b.json"));
  CHECK(a.train_ids == b.train_ids);  // env seed (11) wins over --seed 999
}

TEST_CASE("load_config_from_string round-trips the resolved config") {
  Config cfg;
  cfg.pcm.rate = 0.3;
  cfg.trainer.epochs = 9;
  finalize_config(cfg);
  Config reloaded = load_config_from_string(config_to_json(cfg));
  CHECK(reloaded.pcm.rate == 0.3);
  CHECK(reloaded.trainer.epochs == 9);
  CHECK(config_hash(reloaded) == config_hash(cfg));
}
