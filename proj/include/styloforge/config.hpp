#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace styloforge {

/// Resolved run configuration. Defaults are the desk-scale values; see the
/// CLI help for the full key table.
struct Config {
  struct {
    std::string path;
    long max_records = 0;  // 0 = no limit
  } corpus;

  struct {
    std::array<double, 3> ratios{85.0, 5.0, 10.0};
    uint64_t seed = 7;
  } split;

  struct {
    int merges = 256;
    int max_seq_len = 512;
    std::string function_policy = "rank";  // rank | threshold
    int function_k = 250;
    double function_theta = 0.001;
    std::string function_scope = "per_lang";  // per_lang | global
  } tokenizer;

  struct {
    double rate = 0.2;
  } pcm;

  struct {
    int authors = 64;
    std::string mode = "lab";  // lab | random
    bool shuffle_batches = false;
  } batch;

  struct {
    int dim = 64;
    int out_dim = 32;
    uint64_t init_seed = 1;
  } model;

  struct {
    double tau = 0.1;
    bool include_positive_in_denominator = false;
  } loss;

  struct {
    double lr_peak = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double warmup_frac = 0.03;
    double decay_frac = 0.10;
  } optim;

  struct {
    int epochs = 5;
    uint64_t seed = 42;
    int patience = 0;  // 0 = train all epochs; otherwise stop after this many non-improving epochs
    std::string run_dir;
  } trainer;

  struct {
    int k = 8;
    std::string pool = "per_group";  // per_group | global
    uint64_t seed = 99;
  } eval;

  struct {
    std::vector<double> rates{0.0, 0.1, 0.2, 0.3, 0.5};
  } sweep;
};

/// Parses a JSON config file of namespaced sections; unknown keys are
/// rejected with ErrorCode::ConfigError naming the offending key. The
/// STYLOFORGE_SEED environment variable, when set, overrides every seed.
Config load_config(const std::string& path);

/// Same parsing applied to an in-memory JSON document.
Config load_config_from_string(const std::string& text);

/// Applies validation + the environment seed override to an in-memory
/// config (the path-less route the tests use).
void finalize_config(Config& cfg);

/// Canonical JSON rendering of the resolved config (sorted keys).
std::string config_to_json(const Config& cfg);

/// FNV-1a hash of the canonical rendering, as 16 hex digits.
std::string config_hash(const Config& cfg);

/// "key = default — description" lines for every config key, for --help.
std::vector<std::string> config_help_lines();

}  // namespace styloforge
