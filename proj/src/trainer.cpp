#include "styloforge/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "styloforge/error.hpp"
#include "styloforge/lab.hpp"
#include "styloforge/objective.hpp"
#include "styloforge/optim.hpp"
#include "styloforge/pcm.hpp"
#include "styloforge/util.hpp"

namespace styloforge {

using nlohmann::json;

namespace {

// salts for the independent random streams hanging off the master seed
constexpr uint64_t kValSalt = 1;
constexpr uint64_t kValPlanSalt = 2;
constexpr uint64_t kValMaskSalt = 3;
inline uint64_t epoch_plan_salt(int epoch) { return 0x1000 + 2 * static_cast<uint64_t>(epoch); }
inline uint64_t epoch_mask_salt(int epoch) { return 0x1001 + 2 * static_cast<uint64_t>(epoch); }

struct EncodedRecord {
  TokenSeq side0;
  TokenSeq side1;
};

std::vector<EncodedRecord> encode_corpus(const Corpus& corpus, const Vocab& vocab,
                                         const FunctionSets& sets, int max_seq_len) {
  std::vector<EncodedRecord> out;
  out.reserve(corpus.size());
  for (const AuthorRecord& rec : corpus.records) {
    EncodedRecord enc;
    enc.side0 = encode(vocab, rec.doc0, max_seq_len);
    enc.side1 = encode(vocab, rec.doc1, max_seq_len);
    annotate_function_tokens(enc.side0, rec.lang, sets);
    annotate_function_tokens(enc.side1, rec.lang, sets);
    out.push_back(std::move(enc));
  }
  return out;
}

double batch_mean_loss(const ModelParams& params, const std::vector<DocPair>& pairs, double tau,
                       bool include_positive) {
  Mat z(2 * pairs.size(), params.out_dim());
  for (size_t i = 0; i < pairs.size(); ++i) {
    z.row(2 * i) = encode_document(params, pairs[i].side0).transpose();
    z.row(2 * i + 1) = encode_document(params, pairs[i].side1).transpose();
  }
  BatchEmbeddings be{std::move(z), tau};
  return supcon_loss_and_grad(be, include_positive).loss;
}

}  // namespace

double validation_loss(const ModelParams& params, const Corpus& val_corpus, double tau,
                       const Vocab& vocab, const FunctionSets& function_sets, double pcm_rate,
                       uint64_t seed, int batch_authors, int max_seq_len,
                       bool include_positive_in_denominator) {
  if (val_corpus.empty()) raise(ErrorCode::EmptyValidation, "validation corpus is empty");

  lab::BatchPlan plan = lab::plan_epoch(val_corpus, batch_authors, lab::BatchMode::Lab,
                                        derive_seed(seed, kValPlanSalt));
  if (plan.batches.empty())
    raise(ErrorCode::EmptyValidation, "validation corpus yields no batch of >= 2 authors");

  std::vector<EncodedRecord> encoded =
      encode_corpus(val_corpus, vocab, function_sets, max_seq_len);
  pcm::MaskConfig mask_cfg(pcm_rate, derive_seed(seed, kValMaskSalt));

  double total = 0.0;
  for (const auto& batch : plan.batches) {
    std::vector<DocPair> pairs;
    pairs.reserve(batch.size());
    for (int author : batch)
      pairs.push_back({pcm::mask_sequence(encoded[author].side0, mask_cfg, vocab.mask_id),
                       pcm::mask_sequence(encoded[author].side1, mask_cfg, vocab.mask_id)});
    total += batch_mean_loss(params, pairs, tau, include_positive_in_denominator);
  }
  return total / static_cast<double>(plan.batches.size());
}

TrainResult train_run(const Config& cfg, const SplitCorpus& split) {
  if (split.train.empty()) raise(ErrorCode::EmptyCorpus, "training split is empty");

  const std::string hash = config_hash(cfg);

  Vocab vocab = train_bpe(split.train, cfg.tokenizer.merges);
  FrequencyTable freq = build_frequency_table(split.train, vocab);
  FunctionPolicy policy;
  policy.kind = cfg.tokenizer.function_policy == "rank" ? FunctionPolicy::Kind::Rank
                                                        : FunctionPolicy::Kind::Threshold;
  policy.scope = cfg.tokenizer.function_scope == "per_lang" ? FunctionPolicy::Scope::PerLang
                                                            : FunctionPolicy::Scope::Global;
  policy.k = cfg.tokenizer.function_k;
  policy.theta = cfg.tokenizer.function_theta;
  FunctionSets sets = derive_function_tokens(freq, policy);

  ModelParams params =
      init_params(vocab.size(), cfg.model.dim, cfg.model.out_dim, cfg.model.init_seed);
  // the mask token is pinned at zero and frozen: masked positions dilute the
  // pooled mean without steering it, and evaluation inputs never contain it
  params.embedding.row(vocab.mask_id).setZero();
  AdamHyper hyper{cfg.optim.lr_peak, cfg.optim.beta1, cfg.optim.beta2, cfg.optim.eps,
                  cfg.optim.weight_decay};
  OptState opt = init_opt_state(params, hyper);

  std::vector<EncodedRecord> encoded =
      encode_corpus(split.train, vocab, sets, cfg.tokenizer.max_seq_len);

  const lab::BatchMode mode = lab::batch_mode_from_string(cfg.batch.mode);
  lab::BatchPlan first_plan = lab::plan_epoch(split.train, cfg.batch.authors, mode,
                                              derive_seed(cfg.trainer.seed, epoch_plan_salt(0)),
                                              cfg.batch.shuffle_batches);
  if (first_plan.batches.empty())
    raise(ErrorCode::EmptyCorpus, "training split yields no batch of >= 2 authors");

  const long long batches_per_epoch = static_cast<long long>(first_plan.batches.size());
  // T is pinned from epoch 1's plan; later epochs may drift by a batch and
  // simply clamp against the schedule end.
  const long long total_steps = batches_per_epoch * cfg.trainer.epochs;
  WsdSchedule sched;
  sched.total_steps = total_steps;
  sched.warmup_steps = std::llround(cfg.optim.warmup_frac * static_cast<double>(total_steps));
  sched.decay_steps = std::llround(cfg.optim.decay_frac * static_cast<double>(total_steps));
  if (sched.warmup_steps + sched.decay_steps > total_steps)
    sched.decay_steps = total_steps - sched.warmup_steps;
  sched.lr_peak = cfg.optim.lr_peak;

  // run directory artifacts
  const std::string& run_dir = cfg.trainer.run_dir;
  std::ofstream runlog_file;
  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    std::ofstream cfg_out(run_dir + "/config.json", std::ios::binary);
    cfg_out << json{{"config_hash", hash}, {"config", json::parse(config_to_json(cfg))}}.dump(2)
            << '\n';
    SplitManifest manifest = manifest_from_split(split);
    manifest.config_hash = hash;
    save_split_manifest(manifest, run_dir + "/split.json");
    save_vocab(vocab, run_dir + "/vocab.json");
    save_frequency_table(freq, run_dir + "/freq.json");
    runlog_file.open(run_dir + "/runlog.jsonl", std::ios::binary);
    if (!runlog_file) raise(ErrorCode::IoError, "cannot write runlog in " + run_dir);
  }
  auto log_event = [&](const json& event) {
    if (runlog_file.is_open()) runlog_file << event.dump() << '\n';
  };
  log_event({{"type", "run_start"},
             {"config_hash", hash},
             {"batches_per_epoch", batches_per_epoch},
             {"total_steps", total_steps}});

  TrainResult result;
  result.vocab = vocab;
  result.function_sets = sets;
  result.total_steps = total_steps;
  result.config_hash = hash;
  result.best_params = params;  // falls back to init if validation never improves

  const uint64_t val_seed = derive_seed(cfg.trainer.seed, kValSalt);
  long long step = 0;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.trainer.epochs; ++epoch) {
    lab::BatchPlan plan =
        epoch == 0 ? first_plan
                   : lab::plan_epoch(split.train, cfg.batch.authors, mode,
                                     derive_seed(cfg.trainer.seed, epoch_plan_salt(epoch)),
                                     cfg.batch.shuffle_batches);
    pcm::MaskConfig mask_cfg(cfg.pcm.rate,
                             derive_seed(cfg.trainer.seed, epoch_mask_salt(epoch)));

    for (const auto& batch : plan.batches) {
      std::vector<DocPair> pairs;
      pairs.reserve(batch.size());
      for (int author : batch)
        pairs.push_back({pcm::mask_sequence(encoded[author].side0, mask_cfg, vocab.mask_id),
                         pcm::mask_sequence(encoded[author].side1, mask_cfg, vocab.mask_id)});

      auto [loss, grads] =
          param_gradients(params, pairs, cfg.loss.tau, cfg.loss.include_positive_in_denominator);
      grads.d_embedding.row(vocab.mask_id).setZero();
      if (!std::isfinite(loss)) {
        json dump = {{"type", "abort"}, {"step", step + 1}, {"loss", loss}, {"authors", json::array()}};
        for (int author : batch) dump["authors"].push_back(split.train.records[author].author_id);
        log_event(dump);
        if (!run_dir.empty()) {
          std::ofstream bad(run_dir + "/bad_batch.json", std::ios::binary);
          bad << dump.dump(2) << '\n';
        }
        raise(ErrorCode::NonFiniteLoss, "non-finite loss at step " + std::to_string(step + 1));
      }

      ++step;
      const double lr = wsd_lr(sched, std::min(step, total_steps));
      adamw_step(opt, params, grads, lr);
      result.log.steps.push_back({step, lr, loss});
      log_event({{"type", "step"}, {"step", step}, {"lr", lr}, {"loss", loss}});
    }

    const double val =
        validation_loss(params, split.validation, cfg.loss.tau, vocab, sets, cfg.pcm.rate,
                        val_seed, cfg.batch.authors, cfg.tokenizer.max_seq_len,
                        cfg.loss.include_positive_in_denominator);
    result.log.epochs.push_back({epoch, val});
    log_event({{"type", "epoch"}, {"epoch", epoch}, {"val_loss", val}});

    if (val < result.log.best_val_loss) {
      result.log.best_val_loss = val;
      result.log.best_epoch = epoch;
      result.log.best_step = step;
      result.best_params = params;
      epochs_since_best = 0;
      log_event({{"type", "best"}, {"epoch", epoch}, {"step", step}, {"val_loss", val}});
      if (!run_dir.empty()) {
        save_checkpoint(params, run_dir + "/best.marc", {step, val, hash});
        save_opt_state(opt, run_dir + "/best.mopt");
      }
    } else {
      ++epochs_since_best;
      if (cfg.trainer.patience > 0 && epochs_since_best >= cfg.trainer.patience) {
        log_event({{"type", "early_stop"}, {"epoch", epoch}});
        break;
      }
    }
  }
  return result;
}

}  // namespace styloforge
