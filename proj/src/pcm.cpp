#include "styloforge/pcm.hpp"

#include <atomic>

#include "styloforge/error.hpp"

namespace styloforge {
namespace pcm {

namespace {
std::atomic<uint64_t> g_mask_calls{0};
}

TokenSeq mask_sequence(const TokenSeq& seq, MaskConfig& cfg, int mask_id) {
  if (!(cfg.rate >= 0.0 && cfg.rate <= 1.0))
    raise(ErrorCode::ConfigError, "pcm.rate must lie in [0,1]");
  if (!seq.annotated)
    raise(ErrorCode::UnannotatedSequence, "function flags were never populated");

  g_mask_calls.fetch_add(1, std::memory_order_relaxed);

  TokenSeq out = seq;
  if (cfg.rate == 0.0) return out;
  std::bernoulli_distribution draw(cfg.rate);
  for (size_t i = 0; i < out.ids.size(); ++i) {
    if (out.is_function[i]) continue;
    if (draw(cfg.rng)) out.ids[i] = mask_id;
  }
  return out;
}

uint64_t mask_call_count() { return g_mask_calls.load(std::memory_order_relaxed); }

}  // namespace pcm
}  // namespace styloforge
