#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "styloforge/config.hpp"
#include "styloforge/corpus.hpp"
#include "styloforge/model.hpp"
#include "styloforge/tokenizer.hpp"

namespace styloforge {

struct StepRecord {
  long long step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double val_loss = 0.0;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  long long best_step = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

struct TrainResult {
  ModelParams best_params;
  RunLog log;
  Vocab vocab;
  FunctionSets function_sets;
  long long total_steps = 0;
  std::string config_hash;
};

/// Mean contrastive loss over a fixed seeded language-aware plan of the
/// validation corpus, with PCM applied from a seed-fixed stream so the
/// model-selection signal is comparable across epochs.
double validation_loss(const ModelParams& params, const Corpus& val_corpus, double tau,
                       const Vocab& vocab, const FunctionSets& function_sets, double pcm_rate,
                       uint64_t seed, int batch_authors = 64,
                       int max_seq_len = kDefaultMaxSeqLen,
                       bool include_positive_in_denominator = false);

/// Full training loop: vocabulary and function sets from the train split
/// only, per-epoch batch plans, PCM masking, AdamW with the WSD schedule,
/// best-validation-loss checkpointing. When cfg.trainer.run_dir is set the
/// run directory receives config.json, split.json, vocab.json, freq.json,
/// runlog.jsonl, best.marc (+ sidecar) and best.mopt.
TrainResult train_run(const Config& cfg, const SplitCorpus& split);

}  // namespace styloforge
