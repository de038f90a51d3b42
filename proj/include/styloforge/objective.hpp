#pragma once

#include <utility>
#include <vector>

#include "styloforge/dense.hpp"
#include "styloforge/model.hpp"
#include "styloforge/tokenizer.hpp"

namespace styloforge {

/// 2N unit-norm embeddings for a batch of N authors; row 2i+k holds author
/// i's side-k document. tau is the softmax temperature.
struct BatchEmbeddings {
  Mat z;
  double tau = 0.1;

  int n_authors() const { return static_cast<int>(z.rows()) / 2; }
};

/// Gradients shaped like ModelParams.
struct ParamGrads {
  Mat d_embedding;
  Mat d_projection;
  Vec d_bias;
};

struct LossAndGradZ {
  double loss = 0.0;
  Mat dz;  // d loss / d z, before re-projection through normalization
};

/// Supervised contrastive loss over a batch:
///   loss = -(1/2N) sum_{i,k} log( exp(z_i^k . z_i^{1-k} / tau)
///                                / sum_{j != i, l} exp(z_i^k . z_j^l / tau) ).
/// The denominator excludes the anchor's own author entirely (both the
/// anchor and its positive), so the loss can go negative; with
/// include_positive_in_denominator the positive joins the denominator, the
/// variant seen in some supervised-contrastive formulations. All arithmetic
/// is 64-bit with a log-sum-exp guard.
LossAndGradZ supcon_loss_and_grad(const BatchEmbeddings& be,
                                  bool include_positive_in_denominator = false);

/// A masked same-author document pair, encoder-ready.
struct DocPair {
  TokenSeq side0;
  TokenSeq side1;
};

/// Full backward chain for one batch: loss dz, then through the
/// normalization Jacobian, the affine projection, mean pooling, and finally
/// scattered into embedding rows.
std::pair<double, ParamGrads> param_gradients(const ModelParams& params,
                                              const std::vector<DocPair>& batch, double tau,
                                              bool include_positive_in_denominator = false);

}  // namespace styloforge
