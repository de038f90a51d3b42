#include "styloforge/objective.hpp"

#include <cmath>
#include <limits>

#include "styloforge/error.hpp"

namespace styloforge {

LossAndGradZ supcon_loss_and_grad(const BatchEmbeddings& be,
                                  bool include_positive_in_denominator) {
  const int n = be.n_authors();
  if (n < 2) raise(ErrorCode::DegenerateBatch, "contrastive batch needs N >= 2 authors");
  if (be.z.rows() != 2 * n)
    raise(ErrorCode::ShapeMismatch, "batch embeddings must hold 2N rows");
  if (!(be.tau > 0.0)) raise(ErrorCode::ConfigError, "loss.tau must be > 0");

  const int rows = 2 * n;
  const double inv_tau = 1.0 / be.tau;
  const double weight = 1.0 / static_cast<double>(rows);  // 1/(2N)

  Mat sims = be.z * be.z.transpose();  // cosine similarities of unit vectors

  LossAndGradZ out;
  out.dz = Mat::Zero(rows, be.z.cols());
  double loss = 0.0;

  for (int a = 0; a < rows; ++a) {
    const int author = a / 2;
    const int positive = a ^ 1;

    auto in_denominator = [&](int m) {
      if (include_positive_in_denominator) return m != a;
      return m / 2 != author;
    };

    // log-sum-exp over the denominator set
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < rows; ++m)
      if (in_denominator(m)) max_logit = std::max(max_logit, sims(a, m) * inv_tau);
    double sum_exp = 0.0;
    for (int m = 0; m < rows; ++m)
      if (in_denominator(m)) sum_exp += std::exp(sims(a, m) * inv_tau - max_logit);
    const double lse = max_logit + std::log(sum_exp);

    loss += weight * (lse - sims(a, positive) * inv_tau);

    // positive term
    const double cp = -weight * inv_tau;
    out.dz.row(a) += cp * be.z.row(positive);
    out.dz.row(positive) += cp * be.z.row(a);
    // softmax-weighted denominator terms
    for (int m = 0; m < rows; ++m) {
      if (!in_denominator(m)) continue;
      const double p = std::exp(sims(a, m) * inv_tau - lse);
      const double cm = weight * inv_tau * p;
      out.dz.row(a) += cm * be.z.row(m);
      out.dz.row(m) += cm * be.z.row(a);
    }
  }
  out.loss = loss;
  return out;
}

std::pair<double, ParamGrads> param_gradients(const ModelParams& params,
                                              const std::vector<DocPair>& batch, double tau,
                                              bool include_positive_in_denominator) {
  const int n = static_cast<int>(batch.size());
  if (n < 2) raise(ErrorCode::DegenerateBatch, "contrastive batch needs N >= 2 authors");
  const int rows = 2 * n;
  const int d = params.dim();
  const int o = params.out_dim();

  // forward: cache pooled means, pre-normalization vectors and norms
  Mat pooled(rows, d);
  Mat z(rows, o);
  Vec inv_norm(rows);
  std::vector<const TokenSeq*> docs(rows);
  for (int i = 0; i < n; ++i) {
    docs[2 * i] = &batch[i].side0;
    docs[2 * i + 1] = &batch[i].side1;
  }
  for (int r = 0; r < rows; ++r) {
    const TokenSeq& seq = *docs[r];
    if (seq.ids.empty()) raise(ErrorCode::EmptyText, "empty token sequence in batch");
    Vec h = Vec::Zero(d);
    for (int id : seq.ids) {
      if (id < 0 || id >= params.vocab_size())
        raise(ErrorCode::TokenOutOfRange, "token id " + std::to_string(id));
      h += params.embedding.row(id).transpose();
    }
    h /= static_cast<double>(seq.ids.size());
    pooled.row(r) = h.transpose();
    Vec v = params.projection * h + params.bias;
    const double norm = v.norm();
    if (norm < 1e-12)
      raise(ErrorCode::DegenerateEmbedding, "pre-normalization vector has near-zero norm");
    inv_norm(r) = 1.0 / norm;
    z.row(r) = (v * inv_norm(r)).transpose();
  }

  BatchEmbeddings be{z, tau};
  LossAndGradZ lg = supcon_loss_and_grad(be, include_positive_in_denominator);

  ParamGrads grads;
  grads.d_embedding = Mat::Zero(params.vocab_size(), d);
  grads.d_projection = Mat::Zero(o, d);
  grads.d_bias = Vec::Zero(o);

  for (int r = 0; r < rows; ++r) {
    const Vec dz = lg.dz.row(r).transpose();
    const Vec zr = z.row(r).transpose();
    // normalization Jacobian: dv = (I - z z^T) dz / ||v||
    const Vec dv = (dz - zr * zr.dot(dz)) * inv_norm(r);
    grads.d_projection += dv * pooled.row(r);
    grads.d_bias += dv;
    const Vec dh = params.projection.transpose() * dv;
    const TokenSeq& seq = *docs[r];
    const double scale = 1.0 / static_cast<double>(seq.ids.size());
    for (int id : seq.ids) grads.d_embedding.row(id) += (dh * scale).transpose();
  }
  return {lg.loss, std::move(grads)};
}

}  // namespace styloforge
