#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "styloforge/corpus.hpp"
#include "styloforge/dense.hpp"
#include "styloforge/model.hpp"
#include "styloforge/tokenizer.hpp"

namespace styloforge {
namespace eval {

/// Query/candidate views of one author record (doc0 asks, doc1 answers).
struct EvalPair {
  TokenSeq query;
  TokenSeq candidate;
  std::string author_id;
  std::string lang;
  std::string domain;
};

enum class PoolMode { PerGroup, Global };
PoolMode pool_mode_from_string(const std::string& s);

struct GroupMetrics {
  int n = 0;
  double r_at_k = 0.0;
  double mrr = 0.0;
};

struct EvalReport {
  double r_at_k = 0.0;
  double mrr = 0.0;
  int n_queries = 0;
  int k = 8;
  uint64_t seed = 0;
  std::string pool = "per_group";
  std::string tag = "attribution";
  std::map<std::string, GroupMetrics> per_lang;
  std::map<std::string, GroupMetrics> per_domain;
};

/// Encodes every record of a corpus into query/candidate pairs (unmasked).
std::vector<EvalPair> make_eval_pairs(const Corpus& corpus, const Vocab& vocab,
                                      int max_seq_len = kDefaultMaxSeqLen);

/// R@k and MRR from a list of true-candidate ranks (1-based).
GroupMetrics metrics_from_ranks(const std::vector<int>& ranks, int k);

/// Ranking core over precomputed embeddings; row i of `candidates` is the
/// true candidate for row i of `queries`. Ties break pessimistically: the
/// true candidate ranks after every candidate scoring >= it.
EvalReport attribution_from_embeddings(const Mat& queries, const Mat& candidates,
                                       const std::vector<std::string>& langs,
                                       const std::vector<std::string>& domains, int k,
                                       PoolMode pool);

EvalReport attribution_metrics(const ModelParams& params, const std::vector<EvalPair>& pairs,
                               int k = 8, PoolMode pool = PoolMode::PerGroup);

/// Cosine similarity of the two texts' embeddings, one score per pair.
std::vector<double> verification_scores(const ModelParams& params, const Vocab& vocab,
                                        const std::vector<std::pair<std::string, std::string>>& doc_pairs,
                                        int max_seq_len = kDefaultMaxSeqLen);

/// Mann-Whitney AUROC: fraction of (positive, negative) pairs where the
/// positive scores higher, ties counted 0.5.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ProbeHyper {
  int iterations = 500;
  double step = 0.1;
  double l2 = 1.0;
};

/// Binary logistic regression by full-batch gradient descent on frozen
/// embeddings; returns test accuracy.
double linear_probe(const Mat& train_embs, const std::vector<int>& train_labels,
                    const Mat& test_embs, const std::vector<int>& test_labels,
                    const ProbeHyper& hyper = {});

/// Metrics of a uniformly random ranking; E[R@k] = k/n, E[MRR] = H(n)/n.
EvalReport random_order_baseline(int n_pairs, int k, uint64_t seed);

void save_eval_report(const EvalReport& report, const std::string& json_path,
                      const std::string& config_hash = "");
void save_eval_csv(const EvalReport& report, const std::string& csv_path);

}  // namespace eval
}  // namespace styloforge
