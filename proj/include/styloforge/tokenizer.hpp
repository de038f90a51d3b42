#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "styloforge/corpus.hpp"

namespace styloforge {

/// Byte-level BPE vocabulary. Ids are dense: specials first, then the 256
/// byte tokens, then one token per merge in merge order.
struct Vocab {
  std::vector<std::string> tokens;  // raw byte strings ("<pad>"/"<mask>"/"<unk>" for specials)
  std::vector<std::pair<std::string, std::string>> merges;
  int pad_id = 0;
  int mask_id = 1;
  int unk_id = 2;

  int size() const { return static_cast<int>(tokens.size()); }
};

/// Encoded document: token ids plus parallel function-token flags.
struct TokenSeq {
  std::vector<int> ids;
  std::vector<uint8_t> is_function;  // parallel to ids
  bool annotated = false;            // set once flags have been populated

  size_t size() const { return ids.size(); }
};

struct FrequencyTable {
  std::map<std::string, std::map<int, long long>> counts;  // lang -> token id -> count
  std::map<std::string, long long> totals;                 // lang -> total token count
};

struct FunctionPolicy {
  enum class Kind { Rank, Threshold };
  enum class Scope { PerLang, Global };
  Kind kind = Kind::Rank;
  Scope scope = Scope::PerLang;
  int k = 250;          // rank cutoff
  double theta = 0.001; // relative-frequency threshold
};

using FunctionSets = std::map<std::string, std::set<int>>;

/// Learns `num_merges` greedy highest-frequency pair merges over the
/// whitespace-segmented training text. Ties break by lexicographic order of
/// the merged byte string; deterministic for a fixed corpus.
Vocab train_bpe(const Corpus& train_corpus, int num_merges);

constexpr int kDefaultMaxSeqLen = 512;

/// Whitespace pre-segmentation, merges applied in vocab order within each
/// segment, then truncation. Whitespace runs are kept as segments of their
/// own so decode(encode(t)) reproduces t exactly when nothing is truncated.
TokenSeq encode(const Vocab& vocab, const std::string& text, int max_seq_len = kDefaultMaxSeqLen);

std::string decode(const Vocab& vocab, const std::vector<int>& ids);

/// Token occurrence counts per language over the training split only.
FrequencyTable build_frequency_table(const Corpus& train_corpus, const Vocab& vocab);

/// High-frequency token sets per language (the PCM "function token" sets).
FunctionSets derive_function_tokens(const FrequencyTable& freq, const FunctionPolicy& policy);

/// Populates seq.is_function from the language's function set.
void annotate_function_tokens(TokenSeq& seq, const std::string& lang, const FunctionSets& sets);

void save_vocab(const Vocab& vocab, const std::string& path);
Vocab load_vocab(const std::string& path);
void save_frequency_table(const FrequencyTable& freq, const std::string& path);
FrequencyTable load_frequency_table(const std::string& path);

}  // namespace styloforge
