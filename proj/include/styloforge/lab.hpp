#pragma once

#include <cstdint>
#include <vector>

#include "styloforge/corpus.hpp"

namespace styloforge {
namespace lab {

enum class BatchMode { Lab, Random };

BatchMode batch_mode_from_string(const std::string& s);
const char* to_string(BatchMode mode);

/// One epoch's ordered batches of author indices into the training corpus.
struct BatchPlan {
  std::vector<std::vector<int>> batches;
  BatchMode mode = BatchMode::Lab;
  uint64_t epoch_seed = 0;
};

/// Lab mode: authors shuffled within each language, chunked into batches of
/// `batch_size_authors`; a tail of >= 2 authors stays as a smaller batch, a
/// singleton tail is dropped for this epoch; languages are emitted in a
/// seeded permutation. Random mode: one global shuffle, same chunking.
/// With shuffle_batches the finished batch list is globally reshuffled.
BatchPlan plan_epoch(const Corpus& train, int batch_size_authors, BatchMode mode,
                     uint64_t epoch_seed, bool shuffle_batches = false);

struct NegativeComposition {
  double same_lang_negative_fraction = 0.0;
  std::vector<double> per_batch_purity;  // same-language fraction per batch
};

/// Fraction of (anchor, negative) author pairs inside batches that share a
/// language tag; 1.0 for every lab-mode plan.
NegativeComposition negative_composition(const BatchPlan& plan, const Corpus& corpus);

}  // namespace lab
}  // namespace styloforge
