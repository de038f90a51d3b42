#include "styloforge/lab.hpp"

#include <algorithm>
#include <random>

#include "styloforge/error.hpp"
#include "styloforge/util.hpp"

namespace styloforge {
namespace lab {

BatchMode batch_mode_from_string(const std::string& s) {
  if (s == "lab") return BatchMode::Lab;
  if (s == "random") return BatchMode::Random;
  raise(ErrorCode::ConfigError, "batch.mode must be 'lab' or 'random', got '" + s + "'");
}

const char* to_string(BatchMode mode) { return mode == BatchMode::Lab ? "lab" : "random"; }

namespace {

// chunk into batches of n; keep a tail of >= 2, drop a singleton
void chunk_into(std::vector<std::vector<int>>& batches, const std::vector<int>& order, int n) {
  size_t i = 0;
  while (i < order.size()) {
    size_t take = std::min<size_t>(n, order.size() - i);
    if (take < 2) break;  // singleton tail: no negatives exist for it this epoch
    batches.emplace_back(order.begin() + i, order.begin() + i + take);
    i += take;
  }
}

}  // namespace

BatchPlan plan_epoch(const Corpus& train, int batch_size_authors, BatchMode mode,
                     uint64_t epoch_seed, bool shuffle_batches) {
  if (batch_size_authors < 2)
    raise(ErrorCode::BatchTooSmall, "batch.authors must be >= 2");
  if (train.empty()) raise(ErrorCode::EmptyCorpus, "cannot plan batches over an empty corpus");

  BatchPlan plan;
  plan.mode = mode;
  plan.epoch_seed = epoch_seed;
  std::mt19937_64 rng(epoch_seed);

  if (mode == BatchMode::Lab) {
    std::vector<std::string> langs;
    langs.reserve(train.index_by_lang.size());
    for (const auto& [lang, members] : train.index_by_lang) langs.push_back(lang);
    std::shuffle(langs.begin(), langs.end(), rng);  // per-epoch language permutation
    for (const std::string& lang : langs) {
      std::vector<int> order = train.index_by_lang.at(lang);
      std::shuffle(order.begin(), order.end(), rng);
      chunk_into(plan.batches, order, batch_size_authors);
    }
  } else {
    std::vector<int> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), rng);
    chunk_into(plan.batches, order, batch_size_authors);
  }

  if (shuffle_batches) std::shuffle(plan.batches.begin(), plan.batches.end(), rng);
  return plan;
}

NegativeComposition negative_composition(const BatchPlan& plan, const Corpus& corpus) {
  NegativeComposition result;
  long long same = 0, total = 0;
  for (const auto& batch : plan.batches) {
    long long batch_same = 0, batch_total = 0;
    for (int i : batch) {
      if (i < 0 || static_cast<size_t>(i) >= corpus.size())
        raise(ErrorCode::ShapeMismatch, "batch index out of range for corpus");
      for (int j : batch) {
        if (i == j) continue;
        ++batch_total;
        if (corpus.records[i].lang == corpus.records[j].lang) ++batch_same;
      }
    }
    result.per_batch_purity.push_back(
        batch_total == 0 ? 0.0 : static_cast<double>(batch_same) / static_cast<double>(batch_total));
    same += batch_same;
    total += batch_total;
  }
  result.same_lang_negative_fraction =
      total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
  return result;
}

}  // namespace lab
}  // namespace styloforge
