#include "styloforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "styloforge/error.hpp"
#include "styloforge/util.hpp"

namespace styloforge {

using nlohmann::json;

Corpus make_corpus(std::vector<AuthorRecord> records) {
  Corpus corpus;
  corpus.records = std::move(records);
  std::set<std::string> seen;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const AuthorRecord& rec = corpus.records[i];
    if (trim(rec.doc0).empty() || trim(rec.doc1).empty())
      raise(ErrorCode::EmptyDocument, "author " + rec.author_id);
    if (!seen.insert(rec.author_id).second)
      raise(ErrorCode::DuplicateAuthor, "author " + rec.author_id);
    corpus.index_by_lang[rec.lang].push_back(static_cast<int>(i));
  }
  return corpus;
}

namespace {

std::string fetch_string(const json& obj, const char* key, size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end())
    raise(ErrorCode::MissingField, std::string(key) + " at line " + std::to_string(line_no));
  if (!it->is_string())
    raise(ErrorCode::MalformedLine,
          "line " + std::to_string(line_no) + ": field " + key + " is not a string");
  return it->get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& path, long max_records) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open corpus file " + path);

  std::vector<AuthorRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception&) {
      raise(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
    }
    if (!obj.is_object()) raise(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
    AuthorRecord rec;
    rec.author_id = fetch_string(obj, "author_id", line_no);
    rec.lang = fetch_string(obj, "lang", line_no);
    rec.domain = fetch_string(obj, "domain", line_no);
    rec.doc0 = fetch_string(obj, "doc0", line_no);
    rec.doc1 = fetch_string(obj, "doc1", line_no);
    records.push_back(std::move(rec));
    if (max_records > 0 && static_cast<long>(records.size()) >= max_records) break;
  }
  return make_corpus(std::move(records));
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write corpus file " + path);
  for (const AuthorRecord& rec : corpus.records) {
    json obj = {{"author_id", rec.author_id},
                {"lang", rec.lang},
                {"domain", rec.domain},
                {"doc0", rec.doc0},
                {"doc1", rec.doc1}};
    out << obj.dump() << '\n';
  }
}

SplitCorpus split_corpus(const Corpus& corpus, const SplitRatios& ratios, uint64_t seed) {
  if (corpus.empty()) raise(ErrorCode::EmptyCorpus, "cannot split an empty corpus");
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 || std::abs(sum - 100.0) > 1e-9)
    raise(ErrorCode::BadRatios, "ratios must be non-negative and sum to 100");

  std::vector<AuthorRecord> train, validation, test;
  for (const auto& [lang, indices] : corpus.index_by_lang) {
    std::vector<int> order = indices;
    std::mt19937_64 rng(derive_seed(seed, fnv1a64(lang)));
    std::shuffle(order.begin(), order.end(), rng);

    const size_t n = order.size();
    // floor sizes for validation and test; remainder goes to train
    auto floor_count = [n](double pct) {
      return static_cast<size_t>(std::floor(static_cast<double>(n) * pct / 100.0 + 1e-9));
    };
    size_t n_val = floor_count(ratios[1]);
    size_t n_test = floor_count(ratios[2]);
    size_t n_train = n - n_val - n_test;

    size_t pos = 0;
    for (size_t i = 0; i < n_train; ++i) train.push_back(corpus.records[order[pos++]]);
    for (size_t i = 0; i < n_val; ++i) validation.push_back(corpus.records[order[pos++]]);
    for (size_t i = 0; i < n_test; ++i) test.push_back(corpus.records[order[pos++]]);
  }

  SplitCorpus split;
  split.train = make_corpus(std::move(train));
  split.validation = make_corpus(std::move(validation));
  split.test = make_corpus(std::move(test));
  split.split_seed = seed;
  split.ratios = ratios;
  return split;
}

SplitManifest manifest_from_split(const SplitCorpus& split) {
  SplitManifest m;
  m.seed = split.split_seed;
  m.ratios = split.ratios;
  for (const auto& r : split.train.records) m.train_ids.push_back(r.author_id);
  for (const auto& r : split.validation.records) m.validation_ids.push_back(r.author_id);
  for (const auto& r : split.test.records) m.test_ids.push_back(r.author_id);
  return m;
}

void save_split_manifest(const SplitManifest& manifest, const std::string& path) {
  json obj = {{"seed", manifest.seed},
              {"ratios", manifest.ratios},
              {"train", manifest.train_ids},
              {"validation", manifest.validation_ids},
              {"test", manifest.test_ids}};
  if (!manifest.config_hash.empty()) obj["config_hash"] = manifest.config_hash;
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write split manifest " + path);
  out << obj.dump(2) << '\n';
}

SplitManifest load_split_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open split manifest " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception&) {
    raise(ErrorCode::FormatError, "split manifest is not valid JSON: " + path);
  }
  SplitManifest m;
  try {
    m.seed = obj.at("seed").get<uint64_t>();
    auto r = obj.at("ratios");
    m.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    m.train_ids = obj.at("train").get<std::vector<std::string>>();
    m.validation_ids = obj.at("validation").get<std::vector<std::string>>();
    m.test_ids = obj.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    raise(ErrorCode::FormatError, std::string("split manifest missing key: ") + e.what());
  }
  if (obj.contains("config_hash")) m.config_hash = obj["config_hash"].get<std::string>();
  return m;
}

SplitCorpus apply_split_manifest(const Corpus& corpus, const SplitManifest& manifest) {
  std::map<std::string, int> by_id;
  for (size_t i = 0; i < corpus.records.size(); ++i)
    by_id[corpus.records[i].author_id] = static_cast<int>(i);

  auto collect = [&](const std::vector<std::string>& ids) {
    std::vector<AuthorRecord> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        raise(ErrorCode::FormatError, "manifest author " + id + " not present in corpus");
      out.push_back(corpus.records[it->second]);
    }
    return out;
  };

  SplitCorpus split;
  split.train = make_corpus(collect(manifest.train_ids));
  split.validation = make_corpus(collect(manifest.validation_ids));
  split.test = make_corpus(collect(manifest.test_ids));
  split.split_seed = manifest.seed;
  split.ratios = manifest.ratios;
  return split;
}

}  // namespace styloforge
