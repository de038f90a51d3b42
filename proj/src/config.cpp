#include "styloforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

#include "styloforge/error.hpp"
#include "styloforge/util.hpp"

namespace styloforge {

using nlohmann::json;

namespace {

// One row per key: section, key, JSON pointer for reading, default text, doc.
struct KeyDoc {
  const char* key;
  const char* fallback;
  const char* doc;
};

const KeyDoc kKeyDocs[] = {
    {"corpus.path", "\"\"", "JSONL corpus file (one author per line)"},
    {"corpus.max_records", "0", "keep only the first N records; 0 = all"},
    {"split.ratios", "[85,5,10]", "train/validation/test percentages, sum 100"},
    {"split.seed", "7", "seed for the per-language stratified shuffle"},
    {"tokenizer.merges", "256", "number of BPE merges"},
    {"tokenizer.max_seq_len", "512", "encoded sequence truncation length"},
    {"tokenizer.function_policy", "\"rank\"", "function-token policy: rank | threshold"},
    {"tokenizer.function_k", "250", "rank cutoff K (rank policy)"},
    {"tokenizer.function_theta", "0.001", "relative-frequency threshold (threshold policy)"},
    {"tokenizer.function_scope", "\"per_lang\"", "frequency scope: per_lang | global"},
    {"pcm.rate", "0.2", "content-token masking probability"},
    {"batch.authors", "64", "authors per contrastive batch (N)"},
    {"batch.mode", "\"lab\"", "batching mode: lab | random"},
    {"batch.shuffle_batches", "false", "globally reshuffle batch order after planning"},
    {"model.dim", "64", "token embedding width d"},
    {"model.out_dim", "32", "style embedding width o"},
    {"model.init_seed", "1", "parameter initialization seed"},
    {"loss.tau", "0.1", "contrastive softmax temperature"},
    {"loss.include_positive_in_denominator", "false",
     "add the positive pair to the denominator sum"},
    {"optim.lr_peak", "1e-4", "peak learning rate"},
    {"optim.beta1", "0.9", "Adam first-moment decay"},
    {"optim.beta2", "0.999", "Adam second-moment decay"},
    {"optim.eps", "1e-8", "Adam epsilon"},
    {"optim.weight_decay", "0.01", "decoupled weight decay (not applied to bias)"},
    {"optim.warmup_frac", "0.03", "fraction of total steps spent on linear warmup"},
    {"optim.decay_frac", "0.10", "fraction of total steps spent on linear decay"},
    {"trainer.epochs", "5", "training epochs"},
    {"trainer.seed", "42", "master training seed (epoch plans, masking)"},
    {"trainer.patience", "0", "early stop after this many non-improving epochs; 0 = off"},
    {"trainer.run_dir", "\"\"", "run directory for artifacts"},
    {"eval.k", "8", "recall cutoff k"},
    {"eval.pool", "\"per_group\"", "candidate pool: per_group (by language) | global"},
    {"eval.seed", "99", "seed for verification pairing / random baseline"},
    {"sweep.rates", "[0,0.1,0.2,0.3,0.5]", "masking rates visited by sweep-mask"},
};

template <typename T>
void take(const json& section, const char* sect_name, const char* key, T& out) {
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError,
          std::string("bad value for key ") + sect_name + "." + key);
  }
}

void reject_unknown(const json& section, const char* sect_name,
                    const std::set<std::string>& known) {
  for (auto it = section.begin(); it != section.end(); ++it)
    if (!known.count(it.key()))
      raise(ErrorCode::ConfigError,
            std::string("unknown config key ") + sect_name + "." + it.key());
}

void validate(const Config& cfg) {
  auto fail = [](const char* key, const char* why) {
    raise(ErrorCode::ConfigError, std::string("key ") + key + ": " + why);
  };
  if (cfg.corpus.max_records < 0) fail("corpus.max_records", "must be >= 0");
  if (!(cfg.pcm.rate >= 0.0 && cfg.pcm.rate <= 1.0)) fail("pcm.rate", "must lie in [0,1]");
  if (cfg.batch.authors < 2) fail("batch.authors", "must be >= 2");
  if (cfg.batch.mode != "lab" && cfg.batch.mode != "random") fail("batch.mode", "lab | random");
  if (cfg.tokenizer.merges < 0) fail("tokenizer.merges", "must be >= 0");
  if (cfg.tokenizer.max_seq_len < 1) fail("tokenizer.max_seq_len", "must be >= 1");
  if (cfg.tokenizer.function_policy != "rank" && cfg.tokenizer.function_policy != "threshold")
    fail("tokenizer.function_policy", "rank | threshold");
  if (cfg.tokenizer.function_scope != "per_lang" && cfg.tokenizer.function_scope != "global")
    fail("tokenizer.function_scope", "per_lang | global");
  if (cfg.tokenizer.function_k < 1) fail("tokenizer.function_k", "must be >= 1");
  if (!(cfg.tokenizer.function_theta > 0.0 && cfg.tokenizer.function_theta < 1.0))
    fail("tokenizer.function_theta", "must lie in (0,1)");
  if (cfg.model.dim < 2) fail("model.dim", "must be >= 2");
  if (cfg.model.out_dim < 2) fail("model.out_dim", "must be >= 2");
  if (!(cfg.loss.tau > 0.0)) fail("loss.tau", "must be > 0");
  if (cfg.optim.lr_peak < 0.0) fail("optim.lr_peak", "must be >= 0");
  if (!(cfg.optim.beta1 > 0.0 && cfg.optim.beta1 < 1.0)) fail("optim.beta1", "must lie in (0,1)");
  if (!(cfg.optim.beta2 > 0.0 && cfg.optim.beta2 < 1.0)) fail("optim.beta2", "must lie in (0,1)");
  if (!(cfg.optim.eps > 0.0)) fail("optim.eps", "must be > 0");
  if (cfg.optim.weight_decay < 0.0) fail("optim.weight_decay", "must be >= 0");
  if (cfg.optim.warmup_frac < 0.0 || cfg.optim.decay_frac < 0.0 ||
      cfg.optim.warmup_frac + cfg.optim.decay_frac > 1.0)
    fail("optim.warmup_frac", "warmup_frac + decay_frac must lie in [0,1]");
  if (cfg.trainer.epochs < 1) fail("trainer.epochs", "must be >= 1");
  if (cfg.trainer.patience < 0) fail("trainer.patience", "must be >= 0");
  if (cfg.eval.k < 1) fail("eval.k", "must be >= 1");
  if (cfg.eval.pool != "per_group" && cfg.eval.pool != "global")
    fail("eval.pool", "per_group | global");
  if (cfg.sweep.rates.empty()) fail("sweep.rates", "must not be empty");
  for (double r : cfg.sweep.rates)
    if (!(r >= 0.0 && r <= 1.0)) fail("sweep.rates", "every rate must lie in [0,1]");
}

}  // namespace

void finalize_config(Config& cfg) {
  if (const char* env = std::getenv("STYLOFORGE_SEED")) {
    char* end = nullptr;
    uint64_t seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      raise(ErrorCode::ConfigError, "STYLOFORGE_SEED is not an integer");
    cfg.split.seed = seed;
    cfg.model.init_seed = seed;
    cfg.trainer.seed = seed;
    cfg.eval.seed = seed;
  }
  validate(cfg);
}

namespace {

Config config_from_json(const json& root) {
  if (!root.is_object()) raise(ErrorCode::ConfigError, "config root must be a JSON object");

  Config cfg;
  static const std::set<std::string> sections = {"corpus", "split",   "tokenizer", "pcm",
                                                 "batch",  "model",   "loss",      "optim",
                                                 "trainer", "eval",   "sweep"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!sections.count(it.key()))
      raise(ErrorCode::ConfigError, "unknown config key " + it.key());
    if (!it.value().is_object())
      raise(ErrorCode::ConfigError, "config section " + it.key() + " must be an object");
  }

  if (root.contains("corpus")) {
    const json& s = root["corpus"];
    reject_unknown(s, "corpus", {"path", "max_records"});
    take(s, "corpus", "path", cfg.corpus.path);
    take(s, "corpus", "max_records", cfg.corpus.max_records);
  }
  if (root.contains("split")) {
    const json& s = root["split"];
    reject_unknown(s, "split", {"ratios", "seed"});
    take(s, "split", "ratios", cfg.split.ratios);
    take(s, "split", "seed", cfg.split.seed);
  }
  if (root.contains("tokenizer")) {
    const json& s = root["tokenizer"];
    reject_unknown(s, "tokenizer",
                   {"merges", "max_seq_len", "function_policy", "function_k", "function_theta",
                    "function_scope"});
    take(s, "tokenizer", "merges", cfg.tokenizer.merges);
    take(s, "tokenizer", "max_seq_len", cfg.tokenizer.max_seq_len);
    take(s, "tokenizer", "function_policy", cfg.tokenizer.function_policy);
    take(s, "tokenizer", "function_k", cfg.tokenizer.function_k);
    take(s, "tokenizer", "function_theta", cfg.tokenizer.function_theta);
    take(s, "tokenizer", "function_scope", cfg.tokenizer.function_scope);
  }
  if (root.contains("pcm")) {
    const json& s = root["pcm"];
    reject_unknown(s, "pcm", {"rate"});
    take(s, "pcm", "rate", cfg.pcm.rate);
  }
  if (root.contains("batch")) {
    const json& s = root["batch"];
    reject_unknown(s, "batch", {"authors", "mode", "shuffle_batches"});
    take(s, "batch", "authors", cfg.batch.authors);
    take(s, "batch", "mode", cfg.batch.mode);
    take(s, "batch", "shuffle_batches", cfg.batch.shuffle_batches);
  }
  if (root.contains("model")) {
    const json& s = root["model"];
    reject_unknown(s, "model", {"dim", "out_dim", "init_seed"});
    take(s, "model", "dim", cfg.model.dim);
    take(s, "model", "out_dim", cfg.model.out_dim);
    take(s, "model", "init_seed", cfg.model.init_seed);
  }
  if (root.contains("loss")) {
    const json& s = root["loss"];
    reject_unknown(s, "loss", {"tau", "include_positive_in_denominator"});
    take(s, "loss", "tau", cfg.loss.tau);
    take(s, "loss", "include_positive_in_denominator",
         cfg.loss.include_positive_in_denominator);
  }
  if (root.contains("optim")) {
    const json& s = root["optim"];
    reject_unknown(s, "optim",
                   {"lr_peak", "beta1", "beta2", "eps", "weight_decay", "warmup_frac",
                    "decay_frac"});
    take(s, "optim", "lr_peak", cfg.optim.lr_peak);
    take(s, "optim", "beta1", cfg.optim.beta1);
    take(s, "optim", "beta2", cfg.optim.beta2);
    take(s, "optim", "eps", cfg.optim.eps);
    take(s, "optim", "weight_decay", cfg.optim.weight_decay);
    take(s, "optim", "warmup_frac", cfg.optim.warmup_frac);
    take(s, "optim", "decay_frac", cfg.optim.decay_frac);
  }
  if (root.contains("trainer")) {
    const json& s = root["trainer"];
    reject_unknown(s, "trainer", {"epochs", "seed", "patience", "run_dir"});
    take(s, "trainer", "epochs", cfg.trainer.epochs);
    take(s, "trainer", "seed", cfg.trainer.seed);
    take(s, "trainer", "patience", cfg.trainer.patience);
    take(s, "trainer", "run_dir", cfg.trainer.run_dir);
  }
  if (root.contains("eval")) {
    const json& s = root["eval"];
    reject_unknown(s, "eval", {"k", "pool", "seed"});
    take(s, "eval", "k", cfg.eval.k);
    take(s, "eval", "pool", cfg.eval.pool);
    take(s, "eval", "seed", cfg.eval.seed);
  }
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    reject_unknown(s, "sweep", {"rates"});
    take(s, "sweep", "rates", cfg.sweep.rates);
  }

  finalize_config(cfg);
  return cfg;
}

}  // namespace

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ConfigError, "cannot open config file " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError, "config file is not valid JSON: " + path);
  }
  return config_from_json(root);
}

Config load_config_from_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError, "config text is not valid JSON");
  }
  return config_from_json(root);
}

std::string config_to_json(const Config& cfg) {
  json root;
  root["corpus"] = {{"path", cfg.corpus.path}, {"max_records", cfg.corpus.max_records}};
  root["split"] = {{"ratios", cfg.split.ratios}, {"seed", cfg.split.seed}};
  root["tokenizer"] = {{"merges", cfg.tokenizer.merges},
                       {"max_seq_len", cfg.tokenizer.max_seq_len},
                       {"function_policy", cfg.tokenizer.function_policy},
                       {"function_k", cfg.tokenizer.function_k},
                       {"function_theta", cfg.tokenizer.function_theta},
                       {"function_scope", cfg.tokenizer.function_scope}};
  root["pcm"] = {{"rate", cfg.pcm.rate}};
  root["batch"] = {{"authors", cfg.batch.authors},
                   {"mode", cfg.batch.mode},
                   {"shuffle_batches", cfg.batch.shuffle_batches}};
  root["model"] = {{"dim", cfg.model.dim},
                   {"out_dim", cfg.model.out_dim},
                   {"init_seed", cfg.model.init_seed}};
  root["loss"] = {{"tau", cfg.loss.tau},
                  {"include_positive_in_denominator", cfg.loss.include_positive_in_denominator}};
  root["optim"] = {{"lr_peak", cfg.optim.lr_peak},
                   {"beta1", cfg.optim.beta1},
                   {"beta2", cfg.optim.beta2},
                   {"eps", cfg.optim.eps},
                   {"weight_decay", cfg.optim.weight_decay},
                   {"warmup_frac", cfg.optim.warmup_frac},
                   {"decay_frac", cfg.optim.decay_frac}};
  root["trainer"] = {{"epochs", cfg.trainer.epochs},
                     {"seed", cfg.trainer.seed},
                     {"patience", cfg.trainer.patience},
                     {"run_dir", cfg.trainer.run_dir}};
  root["eval"] = {{"k", cfg.eval.k}, {"pool", cfg.eval.pool}, {"seed", cfg.eval.seed}};
  root["sweep"] = {{"rates", cfg.sweep.rates}};
  return root.dump(2);
}

std::string config_hash(const Config& cfg) {
  // the hash identifies the experiment; where artifacts land does not
  // change what was run
  Config keyed = cfg;
  keyed.trainer.run_dir.clear();
  return to_hex(fnv1a64(config_to_json(keyed)));
}

std::vector<std::string> config_help_lines() {
  std::vector<std::string> lines;
  for (const KeyDoc& kd : kKeyDocs)
    lines.push_back(std::string(kd.key) + " = " + kd.fallback + "  — " + kd.doc);
  return lines;
}

}  // namespace styloforge
