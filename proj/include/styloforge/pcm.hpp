#pragma once

#include <cstdint>
#include <random>

#include "styloforge/tokenizer.hpp"

namespace styloforge {
namespace pcm {

/// Masking rate plus the stream the Bernoulli draws come from. Each worker
/// owns its own MaskConfig; the stream advances across calls so every
/// (document, epoch) sees a fresh draw.
struct MaskConfig {
  double rate = 0.2;
  std::mt19937_64 rng{0};

  MaskConfig() = default;
  MaskConfig(double rate_, uint64_t seed) : rate(rate_), rng(seed) {}
};

/// Replaces each content position (is_function = false) by mask_id with
/// probability cfg.rate. Function positions and sequence length are
/// untouched; masked positions keep is_function = false.
TokenSeq mask_sequence(const TokenSeq& seq, MaskConfig& cfg, int mask_id);

/// Process-wide count of mask_sequence invocations. Evaluation paths must
/// leave it unchanged; trainer tests assert exactly that.
uint64_t mask_call_count();

}  // namespace pcm
}  // namespace styloforge
