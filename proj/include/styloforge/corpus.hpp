#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace styloforge {

/// One author: exactly two documents, both in the same language.
struct AuthorRecord {
  std::string author_id;
  std::string lang;
  std::string domain;
  std::string doc0;
  std::string doc1;
};

struct Corpus {
  std::vector<AuthorRecord> records;
  // lang -> record indices, languages in sorted order so every downstream
  // iteration over languages is deterministic.
  std::map<std::string, std::vector<int>> index_by_lang;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Validates record invariants (non-empty docs, unique ids) and builds the
/// language index.
Corpus make_corpus(std::vector<AuthorRecord> records);

/// Percentages for (train, validation, test); must sum to 100.
using SplitRatios = std::array<double, 3>;

struct SplitCorpus {
  Corpus train;
  Corpus validation;
  Corpus test;
  uint64_t split_seed = 0;
  SplitRatios ratios{85.0, 5.0, 10.0};
};

/// Reads a JSONL corpus file: one object per line with keys
/// author_id, lang, domain, doc0, doc1. max_records = 0 keeps everything.
Corpus load_corpus(const std::string& path, long max_records = 0);

/// Writes the corpus back as JSONL. load(save(c)) is identity on records.
void save_corpus(const Corpus& corpus, const std::string& path);

/// Per-language stratified split. Within each language the authors are
/// shuffled with a seeded generator; validation and test sizes are the
/// floors of their ratios, the remainder goes to train.
SplitCorpus split_corpus(const Corpus& corpus, const SplitRatios& ratios, uint64_t seed);

struct SplitManifest {
  uint64_t seed = 0;
  SplitRatios ratios{85.0, 5.0, 10.0};
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
  std::string config_hash;  // optional auditing tag
};

SplitManifest manifest_from_split(const SplitCorpus& split);
void save_split_manifest(const SplitManifest& manifest, const std::string& path);
SplitManifest load_split_manifest(const std::string& path);

/// Rebuilds a SplitCorpus by matching manifest ids against a corpus.
SplitCorpus apply_split_manifest(const Corpus& corpus, const SplitManifest& manifest);

}  // namespace styloforge
