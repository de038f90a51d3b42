#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "styloforge/error.hpp"
#include "styloforge/eval.hpp"
#include "styloforge/pcm.hpp"
#include "styloforge/synthetic.hpp"
#include "styloforge/trainer.hpp"
#include "test_support.hpp"

using namespace styloforge;
using testsupport::TempDir;

namespace {

Config desk_config(const std::string& run_dir = "") {
  Config cfg;
  cfg.split.ratios = {70, 15, 15};
  cfg.split.seed = 5;
  cfg.tokenizer.merges = 120;
  cfg.tokenizer.function_k = 30;
  cfg.batch.authors = 8;
  cfg.model.dim = 16;
  cfg.model.out_dim = 8;
  cfg.trainer.epochs = 2;
  cfg.trainer.run_dir = run_dir;
  finalize_config(cfg);
  return cfg;
}

SyntheticConfig small_synthetic() {
  SyntheticConfig s;
  s.n_authors = 48;
  s.n_langs = 2;
  s.words_per_doc = 60;
  return s;
}

}  // namespace

TEST_CASE("validation_loss: identical embeddings give ln(2(N-1)) per batch") {
  Corpus val = testsupport::simple_corpus({{"x", 4}});
  Vocab vocab = train_bpe(val, 0);
  FunctionSets sets;
  sets["x"] = {};

  // projection = 0 and bias = e1 collapse every document to the same z
  ModelParams params = init_params(vocab.size(), 4, 3, 1);
  params.projection.setZero();
  params.bias.setZero();
  params.bias(0) = 1.0;

  const double loss = validation_loss(params, val, 0.1, vocab, sets, /*pcm_rate=*/0.0,
                                      /*seed=*/9, /*batch_authors=*/2);
  CHECK(std::abs(loss - std::log(2.0)) <= 1e-9);  // two batches of N=2, ln 2 each
}

TEST_CASE("validation_loss is bit-identical across calls with the same seed") {
  Corpus val = testsupport::simple_corpus({{"x", 7}, {"y", 5}});
  Vocab vocab = train_bpe(val, 10);
  FrequencyTable freq = build_frequency_table(val, vocab);
  FunctionPolicy policy;
  policy.k = 5;
  FunctionSets sets = derive_function_tokens(freq, policy);
  ModelParams params = init_params(vocab.size(), 8, 4, 2);

  const double a = validation_loss(params, val, 0.1, vocab, sets, 0.2, 42, 4);
  const double b = validation_loss(params, val, 0.1, vocab, sets, 0.2, 42, 4);
  CHECK(a == b);
  const double c = validation_loss(params, val, 0.1, vocab, sets, 0.2, 43, 4);
  CHECK(a != c);
}

TEST_CASE("validation_loss: perfectly separated embeddings give -(10 - ln 2) per batch") {
  // two authors with disjoint single-byte vocabularies
  Corpus val = make_corpus({{"a0", "x", "d", "aaaa", "aa"}, {"a1", "x", "d", "bbb", "bbbb"}});
  Vocab vocab = train_bpe(val, 0);
  FunctionSets sets;
  sets["x"] = {};

  const int id_a = encode(vocab, "a").ids[0];
  const int id_b = encode(vocab, "b").ids[0];
  ModelParams params = init_params(vocab.size(), 2, 2, 1);
  params.embedding.setZero();
  params.embedding(id_a, 0) = 1.0;
  params.embedding(id_b, 1) = 1.0;
  params.projection = Mat::Identity(2, 2);
  params.bias.setZero();

  const double loss = validation_loss(params, val, 0.1, vocab, sets, 0.0, 3, 2);
  CHECK(std::abs(loss - (-(10.0 - std::log(2.0)))) <= 1e-9);
}

TEST_CASE("validation_loss rejects an empty validation corpus") {
  Corpus empty;
  Vocab vocab;
  FunctionSets sets;
  ModelParams params = init_params(4, 2, 2, 1);
  try {
    validation_loss(params, empty, 0.1, vocab, sets, 0.2, 1);
    FAIL("expected EmptyValidation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyValidation);
  }
}

TEST_CASE("train_run with lr_peak = 0 leaves parameters at their initialization") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  Config cfg = desk_config();
  cfg.optim.lr_peak = 0.0;
  SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  TrainResult result = train_run(cfg, split);

  ModelParams init = init_params(result.vocab.size(), cfg.model.dim, cfg.model.out_dim,
                                 cfg.model.init_seed);
  init.embedding.row(result.vocab.mask_id).setZero();  // the trainer pins the mask row
  CHECK(result.best_params.embedding == init.embedding);
  CHECK(result.best_params.projection == init.projection);
  CHECK(result.best_params.bias == init.bias);

  // the run log is still complete
  CHECK(result.log.steps.size() == static_cast<size_t>(result.total_steps));
  CHECK(result.log.epochs.size() == static_cast<size_t>(cfg.trainer.epochs));
  for (const auto& s : result.log.steps) CHECK(s.lr == 0.0);
}

TEST_CASE("train_run is deterministic: identical config gives byte-identical artifacts") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  TempDir dir_a("run_a"), dir_b("run_b");

  auto run_into = [&corpus](const std::string& run_dir) {
    Config cfg = desk_config(run_dir);
    SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
    return train_run(cfg, split);
  };
  TrainResult a = run_into(dir_a.str());
  TrainResult b = run_into(dir_b.str());

  CHECK(a.log.best_val_loss == b.log.best_val_loss);
  CHECK(testsupport::read_file(dir_a.file("best.marc")) ==
        testsupport::read_file(dir_b.file("best.marc")));
  CHECK(testsupport::read_file(dir_a.file("runlog.jsonl")) ==
        testsupport::read_file(dir_b.file("runlog.jsonl")));
  CHECK(testsupport::read_file(dir_a.file("vocab.json")) ==
        testsupport::read_file(dir_b.file("vocab.json")));
}

TEST_CASE("best-checkpoint rule: persisted val_loss is the minimum epoch loss") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  TempDir dir("best_rule");
  Config cfg = desk_config(dir.str());
  cfg.trainer.epochs = 4;
  SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  TrainResult result = train_run(cfg, split);

  double min_val = std::numeric_limits<double>::infinity();
  for (const auto& e : result.log.epochs) min_val = std::min(min_val, e.val_loss);
  CHECK(result.log.best_val_loss == min_val);

  CheckpointMeta meta;
  load_checkpoint(dir.file("best.marc"), &meta);
  CHECK(meta.val_loss == doctest::Approx(min_val).epsilon(1e-12));
  CHECK(meta.config_hash == result.config_hash);
}

TEST_CASE("retrieval evaluation never invokes masking") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  Config cfg = desk_config();
  SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  TrainResult result = train_run(cfg, split);

  const uint64_t before = pcm::mask_call_count();
  auto pairs = eval::make_eval_pairs(split.test, result.vocab, cfg.tokenizer.max_seq_len);
  eval::attribution_metrics(result.best_params, pairs, 8, eval::PoolMode::Global);
  eval::verification_scores(result.best_params, result.vocab,
                            {{split.test.records[0].doc0, split.test.records[0].doc1}});
  CHECK(pcm::mask_call_count() == before);
}

TEST_CASE("no leakage: vocab and frequency artifacts ignore validation/test data") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  SplitCorpus full = split_corpus(corpus, {70, 15, 15}, 5);

  SplitCorpus trimmed = full;
  trimmed.validation = full.validation;
  trimmed.test.records.clear();
  trimmed.test.index_by_lang.clear();

  TempDir dir_a("leak_a"), dir_b("leak_b");
  Config cfg_a = desk_config(dir_a.str());
  Config cfg_b = desk_config(dir_b.str());
  train_run(cfg_a, full);
  train_run(cfg_b, trimmed);

  CHECK(testsupport::read_file(dir_a.file("vocab.json")) ==
        testsupport::read_file(dir_b.file("vocab.json")));
  CHECK(testsupport::read_file(dir_a.file("freq.json")) ==
        testsupport::read_file(dir_b.file("freq.json")));
}

TEST_CASE("synthetic separable corpus: validation loss decreases over early epochs") {
  SyntheticConfig syn;  // full 200-author, 4-language corpus
  Corpus corpus = make_synthetic_corpus(syn);
  int successes = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Config cfg;
    cfg.split.ratios = {75, 5, 20};
    cfg.split.seed = 7;
    cfg.tokenizer.merges = 420;
    cfg.tokenizer.function_k = 30;
    cfg.batch.authors = 16;
    cfg.model.dim = 64;
    cfg.model.out_dim = 32;
    cfg.trainer.epochs = 3;
    cfg.trainer.seed = seed;
    cfg.model.init_seed = seed;
    cfg.optim.lr_peak = 1e-3;
    finalize_config(cfg);
    SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
    TrainResult result = train_run(cfg, split);
    REQUIRE(result.log.epochs.size() == 3);
    const auto& e = result.log.epochs;
    if (e[1].val_loss < e[0].val_loss && e[2].val_loss < e[1].val_loss) ++successes;
  }
  CHECK(successes >= 4);
}

TEST_CASE("patience stops training after non-improving epochs") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  Config cfg = desk_config();
  cfg.trainer.epochs = 12;
  cfg.trainer.patience = 2;
  cfg.optim.lr_peak = 0.0;  // loss can never improve after epoch 0
  SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  TrainResult result = train_run(cfg, split);
  CHECK(result.log.epochs.size() == 3);  // epoch 0 improves on infinity, then 2 stalls
}

TEST_CASE("runlog invariant: steps strictly increasing") {
  Corpus corpus = make_synthetic_corpus(small_synthetic());
  Config cfg = desk_config();
  SplitCorpus split = split_corpus(corpus, cfg.split.ratios, cfg.split.seed);
  TrainResult result = train_run(cfg, split);
  for (size_t i = 1; i < result.log.steps.size(); ++i)
    CHECK(result.log.steps[i].step == result.log.steps[i - 1].step + 1);
}
