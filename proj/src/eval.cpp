#include "styloforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "styloforge/error.hpp"

namespace styloforge {
namespace eval {

using nlohmann::json;

PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "per_group") return PoolMode::PerGroup;
  if (s == "global") return PoolMode::Global;
  raise(ErrorCode::ConfigError, "eval.pool must be 'per_group' or 'global', got '" + s + "'");
}

std::vector<EvalPair> make_eval_pairs(const Corpus& corpus, const Vocab& vocab, int max_seq_len) {
  std::vector<EvalPair> pairs;
  pairs.reserve(corpus.size());
  for (const AuthorRecord& rec : corpus.records) {
    EvalPair p;
    p.query = encode(vocab, rec.doc0, max_seq_len);
    p.candidate = encode(vocab, rec.doc1, max_seq_len);
    p.author_id = rec.author_id;
    p.lang = rec.lang;
    p.domain = rec.domain;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

GroupMetrics metrics_from_ranks(const std::vector<int>& ranks, int k) {
  GroupMetrics m;
  m.n = static_cast<int>(ranks.size());
  if (m.n == 0) return m;
  double hits = 0.0, rr = 0.0;
  for (int rank : ranks) {
    if (rank <= k) hits += 1.0;
    rr += 1.0 / static_cast<double>(rank);
  }
  m.r_at_k = hits / m.n;
  m.mrr = rr / m.n;
  return m;
}

EvalReport attribution_from_embeddings(const Mat& queries, const Mat& candidates,
                                       const std::vector<std::string>& langs,
                                       const std::vector<std::string>& domains, int k,
                                       PoolMode pool) {
  const int n = static_cast<int>(queries.rows());
  if (n < 2) raise(ErrorCode::TooFewPairs, "attribution needs >= 2 query/candidate pairs");
  if (candidates.rows() != n || static_cast<int>(langs.size()) != n ||
      static_cast<int>(domains.size()) != n)
    raise(ErrorCode::ShapeMismatch, "queries, candidates and group tags must align");

  Mat sims = queries * candidates.transpose();

  std::vector<int> all_ranks;
  all_ranks.reserve(n);
  std::map<std::string, std::vector<int>> lang_ranks, domain_ranks;
  for (int i = 0; i < n; ++i) {
    const double true_score = sims(i, i);
    int rank = 1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (pool == PoolMode::PerGroup && langs[j] != langs[i]) continue;
      if (sims(i, j) >= true_score) ++rank;  // pessimistic tie-breaking
    }
    all_ranks.push_back(rank);
    lang_ranks[langs[i]].push_back(rank);
    domain_ranks[domains[i]].push_back(rank);
  }

  EvalReport report;
  report.k = k;
  report.n_queries = n;
  report.pool = pool == PoolMode::PerGroup ? "per_group" : "global";
  GroupMetrics overall = metrics_from_ranks(all_ranks, k);
  report.r_at_k = overall.r_at_k;
  report.mrr = overall.mrr;
  for (const auto& [lang, ranks] : lang_ranks)
    report.per_lang[lang] = metrics_from_ranks(ranks, k);
  for (const auto& [domain, ranks] : domain_ranks)
    report.per_domain[domain] = metrics_from_ranks(ranks, k);
  return report;
}

EvalReport attribution_metrics(const ModelParams& params, const std::vector<EvalPair>& pairs,
                               int k, PoolMode pool) {
  const int n = static_cast<int>(pairs.size());
  if (n < 2) raise(ErrorCode::TooFewPairs, "attribution needs >= 2 query/candidate pairs");

  Mat queries(n, params.out_dim());
  Mat candidates(n, params.out_dim());
  std::vector<std::string> langs(n), domains(n);
  for (int i = 0; i < n; ++i) {
    queries.row(i) = encode_document(params, pairs[i].query).transpose();
    candidates.row(i) = encode_document(params, pairs[i].candidate).transpose();
    langs[i] = pairs[i].lang;
    domains[i] = pairs[i].domain;
  }
  return attribution_from_embeddings(queries, candidates, langs, domains, k, pool);
}

std::vector<double> verification_scores(const ModelParams& params, const Vocab& vocab,
                                        const std::vector<std::pair<std::string, std::string>>& doc_pairs,
                                        int max_seq_len) {
  std::vector<double> scores;
  scores.reserve(doc_pairs.size());
  for (const auto& [a, b] : doc_pairs) {
    Vec za = encode_document(params, encode(vocab, a, max_seq_len));
    Vec zb = encode_document(params, encode(vocab, b, max_seq_len));
    scores.push_back(za.dot(zb));
  }
  return scores;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    raise(ErrorCode::ShapeMismatch, "scores and labels must align");
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (int l : labels) n_pos += l ? 1 : 0;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(ErrorCode::SingleClass, "AUROC needs both classes present");

  // midrank-based Mann-Whitney U
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&scores](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (size_t t = i; t < j; ++t)
      if (labels[order[t]]) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double linear_probe(const Mat& train_embs, const std::vector<int>& train_labels,
                    const Mat& test_embs, const std::vector<int>& test_labels,
                    const ProbeHyper& hyper) {
  const int n = static_cast<int>(train_embs.rows());
  const int d = static_cast<int>(train_embs.cols());
  if (static_cast<int>(train_labels.size()) != n ||
      static_cast<int>(test_labels.size()) != test_embs.rows() || test_embs.cols() != d)
    raise(ErrorCode::DimMismatch, "probe embeddings and labels must align");
  int n_pos = 0;
  for (int l : train_labels) n_pos += l ? 1 : 0;
  if (n_pos == 0 || n_pos == n)
    raise(ErrorCode::SingleClass, "probe training set needs both classes");

  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = train_labels[i] ? 1.0 : -1.0;

  Vec w = Vec::Zero(d);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < hyper.iterations; ++it) {
    Vec f = train_embs * w + Vec::Constant(n, b);
    // sigma(-y f) = 1 / (1 + exp(y f))
    Vec s = (1.0 + (y.array() * f.array()).exp()).inverse().matrix();
    Vec coeff = -(y.array() * s.array()).matrix() * inv_n;
    Vec grad_w = train_embs.transpose() * coeff + (hyper.l2 * inv_n) * w;
    double grad_b = coeff.sum();
    w -= hyper.step * grad_w;
    b -= hyper.step * grad_b;
  }

  int correct = 0;
  for (int i = 0; i < test_embs.rows(); ++i) {
    const double f = test_embs.row(i).dot(w) + b;
    const int pred = f >= 0.0 ? 1 : 0;
    if (pred == (test_labels[i] ? 1 : 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_embs.rows());
}

EvalReport random_order_baseline(int n_pairs, int k, uint64_t seed) {
  if (n_pairs < 2) raise(ErrorCode::TooFewPairs, "random baseline needs >= 2 pairs");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> draw(1, n_pairs);

  std::vector<int> ranks(n_pairs);
  for (int& rank : ranks) rank = draw(rng);  // uniform position of the true candidate

  GroupMetrics m = metrics_from_ranks(ranks, k);
  EvalReport report;
  report.tag = "random_order";
  report.pool = "global";
  report.k = k;
  report.seed = seed;
  report.n_queries = n_pairs;
  report.r_at_k = m.r_at_k;
  report.mrr = m.mrr;
  return report;
}

namespace {

json group_to_json(const std::map<std::string, GroupMetrics>& groups) {
  json obj = json::object();
  for (const auto& [name, g] : groups)
    obj[name] = {{"n", g.n}, {"r_at_k", g.r_at_k}, {"mrr", g.mrr}};
  return obj;
}

}  // namespace

void save_eval_report(const EvalReport& report, const std::string& json_path,
                      const std::string& config_hash) {
  json obj = {{"tag", report.tag},
              {"k", report.k},
              {"pool", report.pool},
              {"seed", report.seed},
              {"n_queries", report.n_queries},
              {"r_at_k", report.r_at_k},
              {"mrr", report.mrr},
              {"per_lang", group_to_json(report.per_lang)},
              {"per_domain", group_to_json(report.per_domain)}};
  if (!config_hash.empty()) obj["config_hash"] = config_hash;
  std::ofstream out(json_path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write eval report " + json_path);
  out << obj.dump(2) << '\n';
}

void save_eval_csv(const EvalReport& report, const std::string& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write eval csv " + csv_path);
  const std::string metric = "r_at_" + std::to_string(report.k);
  out << "group,n," << metric << ",mrr\n";
  out << "overall," << report.n_queries << ',' << report.r_at_k << ',' << report.mrr << '\n';
  for (const auto& [lang, g] : report.per_lang)
    out << "lang:" << lang << ',' << g.n << ',' << g.r_at_k << ',' << g.mrr << '\n';
  for (const auto& [domain, g] : report.per_domain)
    out << "domain:" << domain << ',' << g.n << ',' << g.r_at_k << ',' << g.mrr << '\n';
}

}  // namespace eval
}  // namespace styloforge
