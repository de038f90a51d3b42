// styloforge command-line interface: corpus ingestion, splitting, vocabulary
// building, training, evaluation, verification, probing, and the masking /
// batching experiment harnesses.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "styloforge/config.hpp"
#include "styloforge/corpus.hpp"
#include "styloforge/error.hpp"
#include "styloforge/eval.hpp"
#include "styloforge/lab.hpp"
#include "styloforge/model.hpp"
#include "styloforge/tokenizer.hpp"
#include "styloforge/trainer.hpp"
#include "styloforge/util.hpp"

namespace sf = styloforge;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string corpus_path;
  std::string run_dir;
};

std::string config_key_footer() {
  std::ostringstream out;
  out << "Config keys (JSON file, namespaced sections):\n";
  for (const std::string& line : sf::config_help_lines()) out << "  " << line << '\n';
  out << "Environment: STYLOFORGE_SEED overrides every seed.";
  return out.str();
}

sf::Config resolve_config(const CommonArgs& args) {
  sf::Config cfg;
  if (!args.config_path.empty()) {
    cfg = sf::load_config(args.config_path);
  } else {
    sf::finalize_config(cfg);
  }
  if (!args.corpus_path.empty()) cfg.corpus.path = args.corpus_path;
  if (!args.run_dir.empty()) cfg.trainer.run_dir = args.run_dir;
  return cfg;
}

sf::Corpus load_configured_corpus(const sf::Config& cfg) {
  if (cfg.corpus.path.empty())
    sf::raise(sf::ErrorCode::ConfigError, "key corpus.path: no corpus file given");
  return sf::load_corpus(cfg.corpus.path, cfg.corpus.max_records);
}

void echo_hash(const sf::Config& cfg) {
  std::cout << "config_hash: " << sf::config_hash(cfg) << '\n';
}

// ---------------------------------------------------------------------------
// subcommand bodies

int cmd_ingest(const CommonArgs& args) {
  sf::Config cfg = resolve_config(args);
  sf::Corpus corpus = load_configured_corpus(cfg);
  echo_hash(cfg);
  std::cout << "records: " << corpus.size() << '\n';
  std::cout << "languages: " << corpus.index_by_lang.size() << '\n';
  for (const auto& [lang, members] : corpus.index_by_lang)
    std::cout << "  " << lang << ": " << members.size() << '\n';
  return 0;
}

int cmd_split(const CommonArgs& args, const std::string& ratios_text, uint64_t seed,
              bool seed_given, const std::string& out_path) {
  sf::Config cfg = resolve_config(args);
  if (!ratios_text.empty()) {
    sf::SplitRatios ratios{};
    char comma1 = 0, comma2 = 0;
    std::istringstream in(ratios_text);
    if (!(in >> ratios[0] >> comma1 >> ratios[1] >> comma2 >> ratios[2]) || comma1 != ',' ||
        comma2 != ',')
      sf::raise(sf::ErrorCode::ConfigError, "key split.ratios: expected t,v,e percentages");
    cfg.split.ratios = ratios;
  }
  if (seed_given) cfg.split.seed = seed;
  sf::finalize_config(cfg);

  sf::Corpus corpus = load_configured_corpus(cfg);
  sf::SplitCorpus split = sf::split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  sf::SplitManifest manifest = sf::manifest_from_split(split);
  manifest.config_hash = sf::config_hash(cfg);
  sf::save_split_manifest(manifest, out_path);
  echo_hash(cfg);
  std::cout << "train/validation/test: " << manifest.train_ids.size() << '/'
            << manifest.validation_ids.size() << '/' << manifest.test_ids.size() << '\n';
  std::cout << "manifest: " << out_path << '\n';
  return 0;
}

int cmd_build_vocab(const CommonArgs& args, const std::string& manifest_path,
                    const std::string& out_dir) {
  sf::Config cfg = resolve_config(args);
  sf::Corpus corpus = load_configured_corpus(cfg);
  sf::Corpus train;
  if (!manifest_path.empty()) {
    sf::SplitManifest manifest = sf::load_split_manifest(manifest_path);
    train = sf::apply_split_manifest(corpus, manifest).train;
  } else {
    train = corpus;
  }
  sf::Vocab vocab = sf::train_bpe(train, cfg.tokenizer.merges);
  sf::FrequencyTable freq = sf::build_frequency_table(train, vocab);
  std::filesystem::create_directories(out_dir);
  sf::save_vocab(vocab, out_dir + "/vocab.json");
  sf::save_frequency_table(freq, out_dir + "/freq.json");
  echo_hash(cfg);
  std::cout << "vocab size: " << vocab.size() << " (" << vocab.merges.size() << " merges)\n";
  std::cout << "wrote " << out_dir << "/vocab.json and " << out_dir << "/freq.json\n";
  return 0;
}

sf::TrainResult run_training(const sf::Config& cfg, sf::SplitCorpus& split_out) {
  sf::Corpus corpus = load_configured_corpus(cfg);
  split_out = sf::split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  return sf::train_run(cfg, split_out);
}

int cmd_train(const CommonArgs& args) {
  sf::Config cfg = resolve_config(args);
  if (cfg.trainer.run_dir.empty())
    sf::raise(sf::ErrorCode::ConfigError, "key trainer.run_dir: required for train");
  sf::SplitCorpus split;
  sf::TrainResult result = run_training(cfg, split);
  echo_hash(cfg);
  std::cout << "best epoch " << result.log.best_epoch << " (step " << result.log.best_step
            << "), val_loss " << result.log.best_val_loss << '\n';
  std::cout << "artifacts in " << cfg.trainer.run_dir << '\n';
  return 0;
}

// loads a finished run directory (config + split + checkpoint + vocab)
struct LoadedRun {
  sf::Config cfg;
  sf::SplitCorpus split;
  sf::Vocab vocab;
  sf::ModelParams params;
  std::string hash;
};

LoadedRun load_run(const std::string& run_dir) {
  LoadedRun run;
  std::ifstream cfg_in(run_dir + "/config.json", std::ios::binary);
  if (!cfg_in) sf::raise(sf::ErrorCode::IoError, "missing " + run_dir + "/config.json");
  json wrapper;
  cfg_in >> wrapper;
  run.cfg = sf::load_config_from_string(wrapper.at("config").dump());
  run.hash = wrapper.at("config_hash").get<std::string>();

  sf::Corpus corpus = sf::load_corpus(run.cfg.corpus.path, run.cfg.corpus.max_records);
  run.split = sf::apply_split_manifest(corpus, sf::load_split_manifest(run_dir + "/split.json"));
  run.vocab = sf::load_vocab(run_dir + "/vocab.json");
  run.params = sf::load_checkpoint(run_dir + "/best.marc");
  return run;
}

const sf::Corpus& pick_subset(const sf::SplitCorpus& split, const std::string& which) {
  if (which == "train") return split.train;
  if (which == "validation") return split.validation;
  if (which == "test") return split.test;
  sf::raise(sf::ErrorCode::ConfigError, "key which: expected train|validation|test");
}

int cmd_eval(const std::string& run_dir, const std::string& which) {
  LoadedRun run = load_run(run_dir);
  const sf::Corpus& subset = pick_subset(run.split, which);
  auto pairs = sf::eval::make_eval_pairs(subset, run.vocab, run.cfg.tokenizer.max_seq_len);
  sf::eval::EvalReport report = sf::eval::attribution_metrics(
      run.params, pairs, run.cfg.eval.k, sf::eval::pool_mode_from_string(run.cfg.eval.pool));
  sf::eval::save_eval_report(report, run_dir + "/eval.json", run.hash);
  sf::eval::save_eval_csv(report, run_dir + "/eval.csv");
  std::cout << "config_hash: " << run.hash << '\n';
  std::cout << "R@" << report.k << ": " << report.r_at_k << "  MRR: " << report.mrr << "  ("
            << report.n_queries << " queries, " << which << " subset)\n";
  return 0;
}

// same-author pairs are positives; negatives pair each query with the
// candidate of a seeded shifted permutation (never itself)
int cmd_verify(const std::string& run_dir, const std::string& which) {
  LoadedRun run = load_run(run_dir);
  const sf::Corpus& subset = pick_subset(run.split, which);
  if (subset.size() < 2)
    sf::raise(sf::ErrorCode::TooFewPairs, "verification needs >= 2 authors");

  std::vector<std::pair<std::string, std::string>> doc_pairs;
  std::vector<int> labels;
  for (const auto& rec : subset.records) {
    doc_pairs.emplace_back(rec.doc0, rec.doc1);
    labels.push_back(1);
  }
  std::mt19937_64 rng(run.cfg.eval.seed);
  std::uniform_int_distribution<size_t> shift_draw(1, subset.size() - 1);
  const size_t shift = shift_draw(rng);
  for (size_t i = 0; i < subset.size(); ++i) {
    const auto& a = subset.records[i];
    const auto& b = subset.records[(i + shift) % subset.size()];
    doc_pairs.emplace_back(a.doc0, b.doc1);
    labels.push_back(0);
  }

  auto scores = sf::eval::verification_scores(run.params, run.vocab, doc_pairs,
                                              run.cfg.tokenizer.max_seq_len);
  const double result = sf::eval::auroc(scores, labels);
  json out = {{"config_hash", run.hash},
              {"auroc", result},
              {"n_positive", subset.size()},
              {"n_negative", subset.size()},
              {"subset", which},
              {"seed", run.cfg.eval.seed}};
  std::ofstream f(run_dir + "/verify.json", std::ios::binary);
  f << out.dump(2) << '\n';
  std::cout << "config_hash: " << run.hash << '\n';
  std::cout << "AUROC: " << result << "  (" << subset.size() << " positive / " << subset.size()
            << " negative pairs)\n";
  return 0;
}

int cmd_probe(const std::string& run_dir, const std::string& label_key,
              const std::string& positive) {
  LoadedRun run = load_run(run_dir);
  if (label_key != "lang" && label_key != "domain")
    sf::raise(sf::ErrorCode::ConfigError, "key label_key: expected lang|domain");

  auto embed_subset = [&](const sf::Corpus& subset, sf::Mat& embs, std::vector<int>& labels) {
    embs.resize(2 * subset.size(), run.params.out_dim());
    labels.clear();
    for (size_t i = 0; i < subset.size(); ++i) {
      const auto& rec = subset.records[i];
      const std::string& value = label_key == "lang" ? rec.lang : rec.domain;
      for (int side = 0; side < 2; ++side) {
        const std::string& doc = side == 0 ? rec.doc0 : rec.doc1;
        sf::TokenSeq seq = sf::encode(run.vocab, doc, run.cfg.tokenizer.max_seq_len);
        embs.row(2 * i + side) = sf::encode_document(run.params, seq).transpose();
        labels.push_back(value == positive ? 1 : 0);
      }
    }
  };

  sf::Mat train_embs, test_embs;
  std::vector<int> train_labels, test_labels;
  embed_subset(run.split.train, train_embs, train_labels);
  embed_subset(run.split.test, test_embs, test_labels);

  const double accuracy = sf::eval::linear_probe(train_embs, train_labels, test_embs, test_labels);
  json out = {{"config_hash", run.hash},
              {"accuracy", accuracy},
              {"label_key", label_key},
              {"positive", positive},
              {"n_train", train_labels.size()},
              {"n_test", test_labels.size()}};
  std::ofstream f(run_dir + "/probe.json", std::ios::binary);
  f << out.dump(2) << '\n';
  std::cout << "config_hash: " << run.hash << '\n';
  std::cout << "probe accuracy: " << accuracy << '\n';
  return 0;
}

double evaluate_test_r_at_k(const sf::Config& cfg, const sf::SplitCorpus& split,
                            const sf::TrainResult& result, double* mrr_out = nullptr) {
  auto pairs = sf::eval::make_eval_pairs(split.test, result.vocab, cfg.tokenizer.max_seq_len);
  sf::eval::EvalReport report = sf::eval::attribution_metrics(
      result.best_params, pairs, cfg.eval.k, sf::eval::pool_mode_from_string(cfg.eval.pool));
  if (mrr_out) *mrr_out = report.mrr;
  return report.r_at_k;
}

int cmd_sweep_mask(const CommonArgs& args) {
  sf::Config cfg = resolve_config(args);
  if (cfg.trainer.run_dir.empty())
    sf::raise(sf::ErrorCode::ConfigError, "key trainer.run_dir: required for sweep-mask");
  const std::string sweep_dir = cfg.trainer.run_dir;
  std::filesystem::create_directories(sweep_dir);
  echo_hash(cfg);

  json results = json::array();
  std::ostringstream csv;
  csv << "rate,r_at_" << cfg.eval.k << ",mrr\n";
  for (double rate : cfg.sweep.rates) {
    sf::Config point = cfg;
    point.pcm.rate = rate;
    std::ostringstream dir;
    dir << sweep_dir << "/rate_" << rate;
    point.trainer.run_dir = dir.str();
    sf::SplitCorpus split;
    sf::TrainResult result = run_training(point, split);
    double mrr = 0.0;
    const double r_at_k = evaluate_test_r_at_k(point, split, result, &mrr);
    csv << rate << ',' << r_at_k << ',' << mrr << '\n';
    results.push_back({{"rate", rate}, {"r_at_k", r_at_k}, {"mrr", mrr}});
    std::cout << "rate " << rate << ": R@" << cfg.eval.k << " = " << r_at_k << '\n';
  }
  {
    std::ofstream f(sweep_dir + "/sweep.csv", std::ios::binary);
    f << csv.str();
  }
  {
    std::ofstream f(sweep_dir + "/sweep.json", std::ios::binary);
    f << json{{"config_hash", sf::config_hash(cfg)}, {"points", results}}.dump(2) << '\n';
  }
  std::cout << "wrote " << sweep_dir << "/sweep.csv\n";
  return 0;
}

// paired runs differing in exactly one flag
int run_ablation(const CommonArgs& args, const std::string& flag) {
  sf::Config base = resolve_config(args);
  if (base.trainer.run_dir.empty())
    sf::raise(sf::ErrorCode::ConfigError, "key trainer.run_dir: required for ablation");
  const std::string out_dir = base.trainer.run_dir;
  std::filesystem::create_directories(out_dir);
  echo_hash(base);

  sf::Config on = base, off = base;
  std::string on_name, off_name, out_name;
  if (flag == "pcm") {
    off.pcm.rate = 0.0;
    std::ostringstream tag;
    tag << "pcm_rate_" << base.pcm.rate;
    on_name = tag.str();
    off_name = "pcm_rate_0";
    out_name = "ablate_pcm.json";
  } else {
    on.batch.mode = "lab";
    off.batch.mode = "random";
    on_name = "lab";
    off_name = "random";
    out_name = "ablate_lab.json";
  }
  on.trainer.run_dir = out_dir + "/arm_on";
  off.trainer.run_dir = out_dir + "/arm_off";

  auto run_arm = [&](sf::Config& arm) {
    sf::SplitCorpus split;
    sf::TrainResult result = run_training(arm, split);
    double mrr = 0.0;
    const double r_at_k = evaluate_test_r_at_k(arm, split, result, &mrr);
    json stats = {{"r_at_k", r_at_k}, {"mrr", mrr}};
    if (flag == "lab") {
      // negative-composition diagnostics + step-loss variance for this arm
      sf::lab::BatchPlan plan = sf::lab::plan_epoch(
          split.train, arm.batch.authors, sf::lab::batch_mode_from_string(arm.batch.mode),
          sf::derive_seed(arm.trainer.seed, 0x1000), arm.batch.shuffle_batches);
      stats["same_lang_negative_fraction"] =
          sf::lab::negative_composition(plan, split.train).same_lang_negative_fraction;
      double mean = 0.0;
      for (const auto& s : result.log.steps) mean += s.loss;
      mean /= static_cast<double>(result.log.steps.size());
      double var = 0.0;
      for (const auto& s : result.log.steps) var += (s.loss - mean) * (s.loss - mean);
      var /= static_cast<double>(result.log.steps.size());
      stats["step_loss_variance"] = var;
    }
    return stats;
  };

  json on_stats = run_arm(on);
  json off_stats = run_arm(off);
  json delta = {{"r_at_k", on_stats["r_at_k"].get<double>() - off_stats["r_at_k"].get<double>()},
                {"mrr", on_stats["mrr"].get<double>() - off_stats["mrr"].get<double>()}};
  json out = {{"config_hash", sf::config_hash(base)},
              {on_name, on_stats},
              {off_name, off_stats},
              {"delta", delta}};
  std::ofstream f(out_dir + "/" + out_name, std::ios::binary);
  f << out.dump(2) << '\n';
  std::cout << on_name << ": R@" << base.eval.k << " = " << on_stats["r_at_k"].get<double>()
            << "  " << off_name << ": " << off_stats["r_at_k"].get<double>() << '\n';
  std::cout << "wrote " << out_dir << "/" << out_name << '\n';
  return 0;
}

int cmd_baseline_random(const CommonArgs& args, int n_pairs) {
  sf::Config cfg = resolve_config(args);
  if (n_pairs == 0) {
    sf::Corpus corpus = load_configured_corpus(cfg);
    sf::SplitCorpus split = sf::split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
    n_pairs = static_cast<int>(split.test.size());
  }
  sf::eval::EvalReport report = sf::eval::random_order_baseline(n_pairs, cfg.eval.k, cfg.eval.seed);
  echo_hash(cfg);
  std::cout << "random ordering over " << n_pairs << " pairs: R@" << cfg.eval.k << " = "
            << report.r_at_k << "  MRR = " << report.mrr << '\n';
  if (!cfg.trainer.run_dir.empty()) {
    std::filesystem::create_directories(cfg.trainer.run_dir);
    sf::eval::save_eval_report(report, cfg.trainer.run_dir + "/baseline.json", sf::config_hash(cfg));
    std::cout << "wrote " << cfg.trainer.run_dir << "/baseline.json\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"styloforge — multilingual authorship-representation toolkit"};
  app.require_subcommand(1);
  app.footer(config_key_footer());

  CommonArgs args;
  std::string ratios_text, manifest_path, out_path = "split.json", out_dir = ".";
  std::string which = "test", label_key = "domain", positive;
  uint64_t seed = 0;
  int n_pairs = 0;

  auto add_common = [&](CLI::App* cmd, bool with_run_dir = true) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--corpus", args.corpus_path, "corpus JSONL path (overrides corpus.path)");
    if (with_run_dir)
      cmd->add_option("--run-dir", args.run_dir, "run directory (overrides trainer.run_dir)");
    cmd->footer(config_key_footer());
  };

  CLI::App* ingest = app.add_subcommand("ingest", "load and validate a corpus file");
  add_common(ingest, false);

  CLI::App* split = app.add_subcommand("split", "write a stratified split manifest");
  add_common(split, false);
  split->add_option("--ratios", ratios_text, "train,validation,test percentages (e.g. 85,5,10)");
  CLI::Option* seed_opt = split->add_option("--seed", seed, "split seed");
  split->add_option("--out", out_path, "manifest output path");

  CLI::App* build_vocab = app.add_subcommand("build-vocab", "train BPE + frequency tables");
  add_common(build_vocab, false);
  build_vocab->add_option("--split", manifest_path, "split manifest (restricts to train split)");
  build_vocab->add_option("--out-dir", out_dir, "output directory");

  CLI::App* train = app.add_subcommand("train", "full training run");
  add_common(train);

  CLI::App* eval_cmd = app.add_subcommand("eval", "attribution metrics from a finished run");
  eval_cmd->add_option("--run-dir", args.run_dir, "run directory")->required();
  eval_cmd->add_option("--which", which, "subset: train|validation|test");
  eval_cmd->footer(config_key_footer());

  CLI::App* verify = app.add_subcommand("verify", "verification AUROC from a finished run");
  verify->add_option("--run-dir", args.run_dir, "run directory")->required();
  verify->add_option("--which", which, "subset: train|validation|test");
  verify->footer(config_key_footer());

  CLI::App* probe = app.add_subcommand("probe", "linear-probe accuracy from a finished run");
  probe->add_option("--run-dir", args.run_dir, "run directory")->required();
  probe->add_option("--label-key", label_key, "binary label source: lang|domain");
  probe->add_option("--positive", positive, "value counted as the positive class")->required();
  probe->footer(config_key_footer());

  CLI::App* sweep = app.add_subcommand("sweep-mask", "train across masking rates, emit CSV");
  add_common(sweep);

  CLI::App* ablate_pcm = app.add_subcommand("ablate-pcm", "paired runs: configured rate vs 0");
  add_common(ablate_pcm);

  CLI::App* ablate_lab = app.add_subcommand("ablate-lab", "paired runs: lab vs random batching");
  add_common(ablate_lab);

  CLI::App* baseline = app.add_subcommand("baseline-random", "random-ordering reference metrics");
  add_common(baseline);
  baseline->add_option("--n", n_pairs, "number of pairs (default: test split size)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(args);
    if (split->parsed()) return cmd_split(args, ratios_text, seed, seed_opt->count() > 0, out_path);
    if (build_vocab->parsed()) return cmd_build_vocab(args, manifest_path, out_dir);
    if (train->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_eval(args.run_dir, which);
    if (verify->parsed()) return cmd_verify(args.run_dir, which);
    if (probe->parsed()) return cmd_probe(args.run_dir, label_key, positive);
    if (sweep->parsed()) return cmd_sweep_mask(args);
    if (ablate_pcm->parsed()) return run_ablation(args, "pcm");
    if (ablate_lab->parsed()) return run_ablation(args, "lab");
    if (baseline->parsed()) return cmd_baseline_random(args, n_pairs);
  } catch (const sf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == sf::ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
