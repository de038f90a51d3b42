#pragma once

#include <cstdint>

#include "styloforge/corpus.hpp"

namespace styloforge {

/// Synthetic multilingual author corpus. Languages use disjoint alphabets;
/// every author has a persistent weighted profile over the language's small
/// function-word inventory plus per-document topic words drawn from a much
/// larger inventory. With topic_confound the two documents of an author use
/// disjoint topic clusters while different authors share clusters, so topic
/// similarity actively points at the wrong author.
struct SyntheticConfig {
  int n_authors = 200;
  int n_langs = 4;
  int letters_per_lang = 12;
  int function_inventory = 24;   // function words per language
  int topic_inventory = 240;     // topic words per language
  int profile_size = 6;          // function words an author favours
  int words_per_doc = 70;
  double function_fraction = 0.5;   // probability a slot is a function word
  int topic_words_per_doc = 8;      // per-document topic subset (plain mode)
  bool topic_confound = false;
  int topic_clusters = 6;           // per language (confound mode)
  uint64_t seed = 1;
};

Corpus make_synthetic_corpus(const SyntheticConfig& cfg);

}  // namespace styloforge
