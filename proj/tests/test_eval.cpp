#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "styloforge/error.hpp"
#include "styloforge/eval.hpp"
#include "styloforge/tokenizer.hpp"
#include "test_support.hpp"

using namespace styloforge;
using eval::EvalReport;
using eval::PoolMode;

namespace {

// Independent ranking oracle: sorts the full similarity row per query with
// the true candidate losing every tie, then reads off the rank.
EvalReport brute_force_attribution(const Mat& queries, const Mat& candidates,
                                   const std::vector<std::string>& langs, int k, PoolMode pool) {
  const int n = static_cast<int>(queries.rows());
  std::vector<int> ranks;
  for (int i = 0; i < n; ++i) {
    struct Entry {
      double score;
      bool is_true;
    };
    std::vector<Entry> entries;
    for (int j = 0; j < n; ++j) {
      if (pool == PoolMode::PerGroup && langs[j] != langs[i]) continue;
      entries.push_back({queries.row(i).dot(candidates.row(j)), j == i});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.is_true < b.is_true;  // true candidate after all ties
    });
    for (size_t pos = 0; pos < entries.size(); ++pos)
      if (entries[pos].is_true) {
        ranks.push_back(static_cast<int>(pos) + 1);
        break;
      }
  }
  eval::GroupMetrics m = eval::metrics_from_ranks(ranks, k);
  EvalReport report;
  report.r_at_k = m.r_at_k;
  report.mrr = m.mrr;
  report.n_queries = n;
  report.k = k;
  return report;
}

// Exhaustive pairwise Mann-Whitney oracle.
double brute_force_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (size_t p = 0; p < scores.size(); ++p) {
    if (!labels[p]) continue;
    for (size_t q = 0; q < scores.size(); ++q) {
      if (labels[q]) continue;
      ++pairs;
      if (scores[p] > scores[q])
        wins += 1.0;
      else if (scores[p] == scores[q])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("metrics_from_ranks reproduces the hand-evaluated example") {
  eval::GroupMetrics m = eval::metrics_from_ranks({1, 9, 2}, 8);
  CHECK(m.r_at_k == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.mrr == doctest::Approx((1.0 + 1.0 / 9.0 + 0.5) / 3.0).epsilon(1e-12));
  CHECK(m.mrr == doctest::Approx(0.5370).epsilon(1e-4));
}

TEST_CASE("perfect retrieval gives R@k = 1 and MRR = 1") {
  // orthogonal one-hot pairs: each query matches exactly its own candidate
  const int n = 5;
  Mat q = Mat::Identity(n, n);
  Mat c = Mat::Identity(n, n);
  std::vector<std::string> langs(n, "x"), domains(n, "d");
  EvalReport r = eval::attribution_from_embeddings(q, c, langs, domains, 8, PoolMode::Global);
  CHECK(r.r_at_k == 1.0);
  CHECK(r.mrr == 1.0);
}

TEST_CASE("attribution equals the brute-force oracle exactly for n <= 6 (200 trials)") {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> n_draw(2, 6);
  std::uniform_int_distribution<int> lang_draw(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_draw(rng);
    const int o = 4;
    Mat q = testsupport::random_unit_rows(n, o, rng);
    Mat c = testsupport::random_unit_rows(n, o, rng);
    std::vector<std::string> langs(n), domains(n, "d");
    for (auto& l : langs) l = "l" + std::to_string(lang_draw(rng));
    const PoolMode pool = trial % 2 == 0 ? PoolMode::Global : PoolMode::PerGroup;
    const int k = 1 + trial % 4;

    EvalReport ours = eval::attribution_from_embeddings(q, c, langs, domains, k, pool);
    EvalReport oracle = brute_force_attribution(q, c, langs, k, pool);
    CHECK(ours.r_at_k == oracle.r_at_k);
    CHECK(ours.mrr == oracle.mrr);
  }
}

TEST_CASE("pessimistic ties: a duplicate decoy candidate pushes the true rank down") {
  // three one-hot pairs retrieve perfectly at k=1
  Mat q = Mat::Zero(3, 4), c = Mat::Zero(3, 4);
  for (int i = 0; i < 3; ++i) {
    q(i, i) = 1.0;
    c(i, i) = 1.0;
  }
  std::vector<std::string> langs(3, "x"), domains(3, "d");
  EvalReport before = eval::attribution_from_embeddings(q, c, langs, domains, 1, PoolMode::Global);
  CHECK(before.r_at_k == 1.0);

  // append a pair whose candidate duplicates candidate 0; query 0 now ties
  // and loses, so R@1 drops even though the duplicate's own query is easy
  Mat q2 = Mat::Zero(4, 4), c2 = Mat::Zero(4, 4);
  q2.topRows(3) = q;
  c2.topRows(3) = c;
  q2(3, 3) = 1.0;
  c2.row(3) = c.row(0);
  q2(3, 0) = 1.0;  // decoy's query points at the shared direction
  std::vector<std::string> langs2(4, "x"), domains2(4, "d");
  EvalReport after =
      eval::attribution_from_embeddings(q2, c2, langs2, domains2, 1, PoolMode::Global);
  auto rank_of_query0_hits = after.r_at_k * after.n_queries;
  CHECK(rank_of_query0_hits < 4.0);  // query 0 (and the decoy query) lost rank 1 to ties
  CHECK(after.r_at_k < 1.0);
}

TEST_CASE("breakdown consistency: overall equals the query-weighted mean of per-language metrics") {
  std::mt19937_64 rng(99);
  const int n = 24;
  Mat q = testsupport::random_unit_rows(n, 6, rng);
  Mat c = testsupport::random_unit_rows(n, 6, rng);
  std::vector<std::string> langs(n), domains(n);
  for (int i = 0; i < n; ++i) {
    langs[i] = "l" + std::to_string(i % 3);
    domains[i] = "d" + std::to_string(i % 2);
  }
  EvalReport r = eval::attribution_from_embeddings(q, c, langs, domains, 8, PoolMode::PerGroup);

  int total = 0;
  double weighted_r = 0.0, weighted_mrr = 0.0;
  for (const auto& [lang, g] : r.per_lang) {
    total += g.n;
    weighted_r += g.n * g.r_at_k;
    weighted_mrr += g.n * g.mrr;
  }
  CHECK(total == r.n_queries);
  CHECK(std::abs(weighted_r / total - r.r_at_k) <= 1e-12);
  CHECK(std::abs(weighted_mrr / total - r.mrr) <= 1e-12);

  int domain_total = 0;
  for (const auto& [domain, g] : r.per_domain) domain_total += g.n;
  CHECK(domain_total == r.n_queries);
}

TEST_CASE("attribution error paths") {
  Mat q = Mat::Identity(1, 3), c = Mat::Identity(1, 3);
  CHECK_THROWS_AS(
      eval::attribution_from_embeddings(q, c, {"x"}, {"d"}, 8, PoolMode::Global), Error);
  Mat q2 = Mat::Identity(3, 3);
  CHECK_THROWS_AS(
      eval::attribution_from_embeddings(q2, q2, {"x"}, {"d"}, 8, PoolMode::Global), Error);
}

TEST_CASE("verification scores: self-similarity, symmetry, orthogonality") {
  Corpus c = make_corpus({{"a0", "x", "d", "aaa bbb aaa", "bbb aaa bbb"}});
  Vocab v = train_bpe(c, 4);
  ModelParams params = init_params(v.size(), 8, 4, 3);

  SUBCASE("identical texts score 1") {
    auto s = eval::verification_scores(params, v, {{"aaa bbb", "aaa bbb"}});
    CHECK(std::abs(s[0] - 1.0) <= 1e-9);
  }
  SUBCASE("symmetry") {
    auto s1 = eval::verification_scores(params, v, {{"aaa bbb", "bbb bbb aaa"}});
    auto s2 = eval::verification_scores(params, v, {{"bbb bbb aaa", "aaa bbb"}});
    CHECK(std::abs(s1[0] - s2[0]) <= 1e-12);
  }
  SUBCASE("engineered orthogonal embeddings score 0") {
    // disjoint vocabularies plus orthogonalized parameters
    ModelParams ortho = params;
    ortho.embedding.setZero();
    const int id_a = encode(v, "aaa").ids[0];
    const int id_b = encode(v, "bbb").ids[0];
    ortho.embedding(id_a, 0) = 1.0;
    ortho.embedding(id_b, 1) = 1.0;
    ortho.projection.setZero();
    ortho.projection(0, 0) = 1.0;
    ortho.projection(1, 1) = 1.0;
    ortho.bias.setZero();
    auto s = eval::verification_scores(ortho, v, {{"aaa", "bbb"}});
    CHECK(std::abs(s[0]) <= 1e-6);
  }
}

TEST_CASE("auroc oracle values") {
  CHECK(eval::auroc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
  CHECK(eval::auroc({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}) == 0.5);
  CHECK(eval::auroc({0.9, 0.3, 0.5, 0.1}, {1, 1, 0, 0}) == 0.75);
}

TEST_CASE("auroc equals the exhaustive Mann-Whitney oracle on 100 random instances") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> n_draw(2, 40);
  std::uniform_real_distribution<double> score_draw(0.0, 1.0);
  std::uniform_int_distribution<int> quantize(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = n_draw(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores[i] = trial % 2 == 0 ? score_draw(rng) : quantize(rng) / 10.0;
      labels[i] = (i == 0) ? 1 : (i == 1 ? 0 : (score_draw(rng) < 0.5 ? 1 : 0));
      pos += labels[i];
    }
    CHECK(eval::auroc(scores, labels) == brute_force_auroc(scores, labels));
  }
}

TEST_CASE("auroc needs both classes") {
  try {
    eval::auroc({0.1, 0.2}, {1, 1});
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
}

TEST_CASE("linear probe: separable 1-D embeddings reach accuracy 1") {
  Mat train(8, 1), test(4, 1);
  std::vector<int> train_y, test_y;
  for (int i = 0; i < 8; ++i) {
    train(i, 0) = i < 4 ? 1.0 : -1.0;
    train_y.push_back(i < 4 ? 1 : 0);
  }
  for (int i = 0; i < 4; ++i) {
    test(i, 0) = i < 2 ? 1.0 : -1.0;
    test_y.push_back(i < 2 ? 1 : 0);
  }
  CHECK(eval::linear_probe(train, train_y, test, test_y) == 1.0);
}

TEST_CASE("linear probe: identical embeddings for both classes score 0.5 on a balanced set") {
  Mat train = Mat::Constant(10, 3, 0.7);
  Mat test = Mat::Constant(6, 3, 0.7);
  std::vector<int> train_y = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  std::vector<int> test_y = {1, 0, 1, 0, 1, 0};
  CHECK(eval::linear_probe(train, train_y, test, test_y) == 0.5);
}

TEST_CASE("linear probe: Gaussian blobs at +-(2,2) with sigma 0.5 reach 0.95") {
  std::mt19937_64 rng(2021);
  std::normal_distribution<double> noise(0.0, 0.5);
  auto blob = [&](int n, double cx, double cy, Mat& x, std::vector<int>& y, int label) {
    for (int i = 0; i < n; ++i) {
      const int row = static_cast<int>(y.size());
      x(row, 0) = cx + noise(rng);
      x(row, 1) = cy + noise(rng);
      y.push_back(label);
    }
  };
  Mat train(400, 2), test(200, 2);
  std::vector<int> train_y, test_y;
  blob(200, 2.0, 2.0, train, train_y, 1);
  blob(200, -2.0, -2.0, train, train_y, 0);
  blob(100, 2.0, 2.0, test, test_y, 1);
  blob(100, -2.0, -2.0, test, test_y, 0);
  CHECK(eval::linear_probe(train, train_y, test, test_y) >= 0.95);
}

TEST_CASE("linear probe error paths") {
  Mat x = Mat::Constant(4, 2, 1.0);
  std::vector<int> same = {1, 1, 1, 1}, ok = {1, 0, 1, 0};
  try {
    eval::linear_probe(x, same, x, ok);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
  Mat bad = Mat::Constant(4, 3, 1.0);
  try {
    eval::linear_probe(x, ok, bad, ok);
    FAIL("expected DimMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimMismatch);
  }
}

TEST_CASE("random baseline: 1000-seed mean of R@8 over 50 pairs is close to 0.16") {
  double sum = 0.0;
  for (uint64_t seed = 0; seed < 1000; ++seed)
    sum += eval::random_order_baseline(50, 8, seed).r_at_k;
  CHECK(std::abs(sum / 1000.0 - 0.16) <= 0.01);
}

TEST_CASE("random baseline: k >= n makes R@k exactly 1 for every seed") {
  for (uint64_t seed = 0; seed < 20; ++seed)
    CHECK(eval::random_order_baseline(8, 8, seed).r_at_k == 1.0);
}

TEST_CASE("random baseline: n=2, k=1 averages to a coin flip") {
  double sum = 0.0;
  for (uint64_t seed = 0; seed < 2000; ++seed)
    sum += eval::random_order_baseline(2, 1, seed).r_at_k;
  CHECK(std::abs(sum / 2000.0 - 0.5) <= 0.03);
}

TEST_CASE("random baseline MRR expectation H(n)/n") {
  const int n = 20;
  double harmonic = 0.0;
  for (int i = 1; i <= n; ++i) harmonic += 1.0 / i;
  double sum = 0.0;
  for (uint64_t seed = 0; seed < 2000; ++seed)
    sum += eval::random_order_baseline(n, 8, seed).mrr;
  CHECK(std::abs(sum / 2000.0 - harmonic / n) <= 0.01);
}

TEST_CASE("eval report json and csv writers produce the pinned columns") {
  testsupport::TempDir dir("report");
  std::mt19937_64 rng(5);
  Mat q = testsupport::random_unit_rows(6, 4, rng);
  Mat c = testsupport::random_unit_rows(6, 4, rng);
  std::vector<std::string> langs = {"en", "en", "fr", "fr", "de", "de"};
  std::vector<std::string> domains(6, "wiki");
  EvalReport r = eval::attribution_from_embeddings(q, c, langs, domains, 8, PoolMode::PerGroup);
  r.seed = 7;
  eval::save_eval_report(r, dir.file("eval.json"), "abcd");
  eval::save_eval_csv(r, dir.file("eval.csv"));

  std::string json_text = testsupport::read_file(dir.file("eval.json"));
  CHECK(json_text.find("\"config_hash\": \"abcd\"") != std::string::npos);
  CHECK(json_text.find("\"per_lang\"") != std::string::npos);

  std::string csv = testsupport::read_file(dir.file("eval.csv"));
  CHECK(csv.rfind("group,n,r_at_8,mrr\n", 0) == 0);
  CHECK(csv.find("lang:en,") != std::string::npos);
  CHECK(csv.find("domain:wiki,") != std::string::npos);
  CHECK(csv.find("overall,6,") != std::string::npos);
}
