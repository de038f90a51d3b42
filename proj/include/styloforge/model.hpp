#pragma once

#include <cstdint>
#include <string>

#include "styloforge/dense.hpp"
#include "styloforge/tokenizer.hpp"

namespace styloforge {

/// Linear encoder: token lookup, mean pooling, affine projection, L2
/// normalization. embedding is V x d, projection o x d, bias o.
struct ModelParams {
  Mat embedding;
  Mat projection;
  Vec bias;

  int vocab_size() const { return static_cast<int>(embedding.rows()); }
  int dim() const { return static_cast<int>(embedding.cols()); }
  int out_dim() const { return static_cast<int>(projection.rows()); }
};

/// embedding ~ U[-1/sqrt(d), 1/sqrt(d)], projection ~ U[-1/sqrt(o), 1/sqrt(o)],
/// bias = 0; deterministic per seed.
ModelParams init_params(int vocab_size, int dim, int out_dim, uint64_t seed);

/// Unit-norm style embedding z of one encoded document.
Vec encode_document(const ModelParams& params, const TokenSeq& seq);

struct CheckpointMeta {
  long long step = 0;
  double val_loss = 0.0;
  std::string config_hash;
};

/// Binary format: magic "MARC", u32 version=1, u32 V, u32 d, u32 o, then
/// embedding, projection, bias as row-major little-endian f32. A JSON
/// sidecar (<path>.json) carries step, val_loss and config_hash.
void save_checkpoint(const ModelParams& params, const std::string& path,
                     const CheckpointMeta& meta);
ModelParams load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace styloforge
