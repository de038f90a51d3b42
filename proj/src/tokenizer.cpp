#include "styloforge/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "styloforge/error.hpp"
#include "styloforge/util.hpp"

namespace styloforge {

using nlohmann::json;

namespace {

constexpr int kNumSpecials = 3;

inline bool is_ws(unsigned char c) { return std::isspace(c) != 0; }

inline int byte_token_id(unsigned char b) { return kNumSpecials + static_cast<int>(b); }

Vocab base_vocab() {
  Vocab v;
  v.tokens.reserve(kNumSpecials + 256);
  v.tokens.push_back("<pad>");
  v.tokens.push_back("<mask>");
  v.tokens.push_back("<unk>");
  for (int b = 0; b < 256; ++b) v.tokens.push_back(std::string(1, static_cast<char>(b)));
  return v;
}

struct PairHash {
  size_t operator()(const std::pair<int, int>& p) const {
    return (static_cast<size_t>(static_cast<uint32_t>(p.first)) << 32) ^
           static_cast<uint32_t>(p.second);
  }
};

// id-level merge rules derived from a vocab: (left id, right id) -> (rank, merged id)
struct MergeTable {
  std::unordered_map<std::pair<int, int>, std::pair<int, int>, PairHash> rules;

  explicit MergeTable(const Vocab& vocab) {
    std::unordered_map<std::string, int> id_of;
    id_of.reserve(vocab.tokens.size());
    for (size_t i = 0; i < vocab.tokens.size(); ++i) id_of[vocab.tokens[i]] = static_cast<int>(i);
    for (size_t r = 0; r < vocab.merges.size(); ++r) {
      const auto& [l, rgt] = vocab.merges[r];
      auto li = id_of.find(l), ri = id_of.find(rgt), mi = id_of.find(l + rgt);
      if (li == id_of.end() || ri == id_of.end() || mi == id_of.end())
        raise(ErrorCode::FormatError, "merge rule references unknown token");
      rules[{li->second, ri->second}] = {static_cast<int>(r), mi->second};
    }
  }

  // Lowest-rank-first merging within one segment; equivalent to applying the
  // rules in vocab order because later merges always build on earlier ones.
  void apply(std::vector<int>& seg) const {
    while (seg.size() >= 2) {
      int best_rank = std::numeric_limits<int>::max();
      for (size_t i = 0; i + 1 < seg.size(); ++i) {
        auto it = rules.find({seg[i], seg[i + 1]});
        if (it != rules.end()) best_rank = std::min(best_rank, it->second.first);
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      std::vector<int> out;
      out.reserve(seg.size());
      for (size_t i = 0; i < seg.size();) {
        if (i + 1 < seg.size()) {
          auto it = rules.find({seg[i], seg[i + 1]});
          if (it != rules.end() && it->second.first == best_rank) {
            out.push_back(it->second.second);
            i += 2;
            continue;
          }
        }
        out.push_back(seg[i]);
        ++i;
      }
      seg.swap(out);
    }
  }
};

// Splits text into alternating whitespace / non-whitespace runs.
std::vector<std::pair<size_t, size_t>> segment_runs(const std::string& text) {
  std::vector<std::pair<size_t, size_t>> runs;
  size_t i = 0;
  while (i < text.size()) {
    size_t j = i;
    bool ws = is_ws(static_cast<unsigned char>(text[i]));
    while (j < text.size() && is_ws(static_cast<unsigned char>(text[j])) == ws) ++j;
    runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

}  // namespace

Vocab train_bpe(const Corpus& train_corpus, int num_merges) {
  if (train_corpus.empty()) raise(ErrorCode::EmptyCorpus, "BPE training needs a non-empty corpus");
  if (num_merges < 0) raise(ErrorCode::ConfigError, "tokenizer.merges must be >= 0");

  Vocab vocab = base_vocab();

  // word histogram over non-whitespace segments
  std::unordered_map<std::string, long long> word_count;
  for (const AuthorRecord& rec : train_corpus.records) {
    for (const std::string* doc : {&rec.doc0, &rec.doc1}) {
      for (auto [b, e] : segment_runs(*doc)) {
        if (is_ws(static_cast<unsigned char>((*doc)[b]))) continue;
        word_count[doc->substr(b, e - b)] += 1;
      }
    }
  }

  struct Word {
    std::vector<int> ids;
    long long count;
  };
  std::vector<Word> words;
  words.reserve(word_count.size());
  for (const auto& [text, count] : word_count) {
    Word w;
    w.count = count;
    w.ids.reserve(text.size());
    for (unsigned char c : text) w.ids.push_back(byte_token_id(c));
    words.push_back(std::move(w));
  }

  for (int step = 0; step < num_merges; ++step) {
    std::unordered_map<std::pair<int, int>, long long, PairHash> pair_count;
    for (const Word& w : words)
      for (size_t i = 0; i + 1 < w.ids.size(); ++i)
        pair_count[{w.ids[i], w.ids[i + 1]}] += w.count;
    if (pair_count.empty()) break;

    // highest count wins; ties break by lexicographic order of merged string
    std::pair<int, int> best{-1, -1};
    long long best_count = -1;
    std::string best_merged;
    for (const auto& [pair, count] : pair_count) {
      if (count < best_count) continue;
      std::string merged = vocab.tokens[pair.first] + vocab.tokens[pair.second];
      if (count > best_count || merged < best_merged) {
        best = pair;
        best_count = count;
        best_merged = std::move(merged);
      }
    }

    int merged_id = vocab.size();
    vocab.tokens.push_back(best_merged);
    vocab.merges.emplace_back(vocab.tokens[best.first], vocab.tokens[best.second]);

    for (Word& w : words) {
      if (w.ids.size() < 2) continue;
      std::vector<int> out;
      out.reserve(w.ids.size());
      for (size_t i = 0; i < w.ids.size();) {
        if (i + 1 < w.ids.size() && w.ids[i] == best.first && w.ids[i + 1] == best.second) {
          out.push_back(merged_id);
          i += 2;
        } else {
          out.push_back(w.ids[i]);
          ++i;
        }
      }
      w.ids.swap(out);
    }
  }
  return vocab;
}

TokenSeq encode(const Vocab& vocab, const std::string& text, int max_seq_len) {
  if (trim(text).empty()) raise(ErrorCode::EmptyText, "cannot encode empty text");

  MergeTable table(vocab);
  TokenSeq seq;
  for (auto [b, e] : segment_runs(text)) {
    std::vector<int> seg;
    seg.reserve(e - b);
    for (size_t i = b; i < e; ++i)
      seg.push_back(byte_token_id(static_cast<unsigned char>(text[i])));
    if (!is_ws(static_cast<unsigned char>(text[b]))) table.apply(seg);
    seq.ids.insert(seq.ids.end(), seg.begin(), seg.end());
    if (max_seq_len > 0 && seq.ids.size() >= static_cast<size_t>(max_seq_len)) break;
  }
  if (max_seq_len > 0 && seq.ids.size() > static_cast<size_t>(max_seq_len))
    seq.ids.resize(max_seq_len);
  seq.is_function.assign(seq.ids.size(), 0);
  return seq;
}

std::string decode(const Vocab& vocab, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= vocab.size())
      raise(ErrorCode::TokenOutOfRange, "token id " + std::to_string(id));
    out += vocab.tokens[id];
  }
  return out;
}

FrequencyTable build_frequency_table(const Corpus& train_corpus, const Vocab& vocab) {
  FrequencyTable freq;
  for (const AuthorRecord& rec : train_corpus.records) {
    auto& counts = freq.counts[rec.lang];
    auto& total = freq.totals[rec.lang];
    for (const std::string* doc : {&rec.doc0, &rec.doc1}) {
      TokenSeq seq = encode(vocab, *doc, /*max_seq_len=*/0);  // untruncated corpus statistics
      for (int id : seq.ids) counts[id] += 1;
      total += static_cast<long long>(seq.ids.size());
    }
  }
  return freq;
}

FunctionSets derive_function_tokens(const FrequencyTable& freq, const FunctionPolicy& policy) {
  if (policy.kind == FunctionPolicy::Kind::Rank && policy.k < 1)
    raise(ErrorCode::ConfigError, "tokenizer.function_k must be >= 1");
  if (policy.kind == FunctionPolicy::Kind::Threshold &&
      !(policy.theta > 0.0 && policy.theta < 1.0))
    raise(ErrorCode::ConfigError, "tokenizer.function_theta must be in (0,1)");

  auto select = [&policy](const std::map<int, long long>& counts, long long total) {
    std::set<int> out;
    if (policy.kind == FunctionPolicy::Kind::Rank) {
      std::vector<std::pair<int, long long>> ranked(counts.begin(), counts.end());
      // count descending, token id ascending on ties
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      size_t take = std::min<size_t>(static_cast<size_t>(policy.k), ranked.size());
      for (size_t i = 0; i < take; ++i) out.insert(ranked[i].first);
    } else {
      for (const auto& [id, count] : counts)
        if (total > 0 && static_cast<double>(count) / static_cast<double>(total) >= policy.theta)
          out.insert(id);
    }
    return out;
  };

  FunctionSets sets;
  if (policy.scope == FunctionPolicy::Scope::Global) {
    std::map<int, long long> merged;
    long long total = 0;
    for (const auto& [lang, counts] : freq.counts)
      for (const auto& [id, count] : counts) merged[id] += count;
    for (const auto& [lang, t] : freq.totals) total += t;
    std::set<int> global = select(merged, total);
    for (const auto& [lang, counts] : freq.counts) sets[lang] = global;
  } else {
    for (const auto& [lang, counts] : freq.counts) {
      auto it = freq.totals.find(lang);
      sets[lang] = select(counts, it == freq.totals.end() ? 0 : it->second);
    }
  }
  return sets;
}

void annotate_function_tokens(TokenSeq& seq, const std::string& lang, const FunctionSets& sets) {
  auto it = sets.find(lang);
  if (it == sets.end()) raise(ErrorCode::UnknownLanguage, "no function-token set for " + lang);
  seq.is_function.assign(seq.ids.size(), 0);
  for (size_t i = 0; i < seq.ids.size(); ++i)
    if (it->second.count(seq.ids[i])) seq.is_function[i] = 1;
  seq.annotated = true;
}

void save_vocab(const Vocab& vocab, const std::string& path) {
  json tokens = json::array();
  for (size_t i = 0; i < vocab.tokens.size(); ++i) {
    if (static_cast<int>(i) < kNumSpecials)
      tokens.push_back(vocab.tokens[i]);
    else
      tokens.push_back(bytes_to_utf8(vocab.tokens[i]));
  }
  json merges = json::array();
  for (const auto& [l, r] : vocab.merges)
    merges.push_back({bytes_to_utf8(l), bytes_to_utf8(r)});
  json obj = {{"tokens", tokens},
              {"merges", merges},
              {"special", {{"pad", vocab.pad_id}, {"mask", vocab.mask_id}, {"unk", vocab.unk_id}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write vocab file " + path);
  out << obj.dump(2) << '\n';
}

Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open vocab file " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception&) {
    raise(ErrorCode::FormatError, "vocab file is not valid JSON: " + path);
  }
  Vocab vocab;
  try {
    auto tokens = obj.at("tokens");
    for (size_t i = 0; i < tokens.size(); ++i) {
      std::string t = tokens.at(i).get<std::string>();
      vocab.tokens.push_back(static_cast<int>(i) < kNumSpecials ? t : utf8_to_bytes(t));
    }
    for (const auto& m : obj.at("merges"))
      vocab.merges.emplace_back(utf8_to_bytes(m.at(0).get<std::string>()),
                                utf8_to_bytes(m.at(1).get<std::string>()));
    vocab.pad_id = obj.at("special").at("pad").get<int>();
    vocab.mask_id = obj.at("special").at("mask").get<int>();
    vocab.unk_id = obj.at("special").at("unk").get<int>();
  } catch (const json::exception& e) {
    raise(ErrorCode::FormatError, std::string("vocab file missing key: ") + e.what());
  }
  return vocab;
}

void save_frequency_table(const FrequencyTable& freq, const std::string& path) {
  json obj = json::object();
  for (const auto& [lang, counts] : freq.counts) {
    json c = json::object();
    for (const auto& [id, count] : counts) c[std::to_string(id)] = count;
    obj[lang] = {{"total", freq.totals.at(lang)}, {"counts", c}};
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write frequency file " + path);
  out << obj.dump(2) << '\n';
}

FrequencyTable load_frequency_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open frequency file " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception&) {
    raise(ErrorCode::FormatError, "frequency file is not valid JSON: " + path);
  }
  FrequencyTable freq;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const json& entry = it.value();
    freq.totals[it.key()] = entry.at("total").get<long long>();
    auto& counts = freq.counts[it.key()];
    const json& c = entry.at("counts");
    for (auto ct = c.begin(); ct != c.end(); ++ct)
      counts[std::stoi(ct.key())] = ct.value().get<long long>();
  }
  return freq;
}

}  // namespace styloforge
