#include "styloforge/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "styloforge/error.hpp"
#include "styloforge/util.hpp"

namespace styloforge {

namespace {

struct LangInventory {
  std::vector<std::string> function_words;
  std::vector<std::string> topic_words;
};

std::string draw_word(std::mt19937_64& rng, const std::string& letters, int min_len, int max_len) {
  std::uniform_int_distribution<int> len_draw(min_len, max_len);
  std::uniform_int_distribution<size_t> letter_draw(0, letters.size() - 1);
  const int len = len_draw(rng);
  std::string word;
  word.reserve(len);
  for (int i = 0; i < len; ++i) word.push_back(letters[letter_draw(rng)]);
  return word;
}

LangInventory build_inventory(const SyntheticConfig& cfg, const std::string& letters,
                              uint64_t seed) {
  std::mt19937_64 rng(seed);
  LangInventory inv;
  std::set<std::string> seen;
  // function words short (1-3), topic words long (5-8): the length gap keeps
  // the two inventories disjoint
  while (static_cast<int>(inv.function_words.size()) < cfg.function_inventory) {
    std::string w = draw_word(rng, letters, 1, 3);
    if (seen.insert(w).second) inv.function_words.push_back(std::move(w));
  }
  while (static_cast<int>(inv.topic_words.size()) < cfg.topic_inventory) {
    std::string w = draw_word(rng, letters, 5, 8);
    if (seen.insert(w).second) inv.topic_words.push_back(std::move(w));
  }
  return inv;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  static const std::string kPool = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
  if (cfg.n_langs * cfg.letters_per_lang > static_cast<int>(kPool.size()))
    raise(ErrorCode::ConfigError, "not enough letters for disjoint alphabets");
  if (cfg.profile_size > cfg.function_inventory)
    raise(ErrorCode::ConfigError, "profile_size exceeds function inventory");
  if (cfg.topic_confound && cfg.topic_clusters < 2)
    raise(ErrorCode::ConfigError, "confound mode needs >= 2 topic clusters");

  std::vector<LangInventory> inventories;
  for (int l = 0; l < cfg.n_langs; ++l) {
    std::string letters = kPool.substr(l * cfg.letters_per_lang, cfg.letters_per_lang);
    inventories.push_back(build_inventory(cfg, letters, derive_seed(cfg.seed, 100 + l)));
  }

  const int cluster_size = cfg.topic_inventory / std::max(cfg.topic_clusters, 1);
  std::vector<int> lang_counter(cfg.n_langs, 0);

  std::vector<AuthorRecord> records;
  records.reserve(cfg.n_authors);
  for (int a = 0; a < cfg.n_authors; ++a) {
    const int lang_idx = a % cfg.n_langs;
    const LangInventory& inv = inventories[lang_idx];
    std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + a));

    // persistent author profile: a favoured subset of function words with
    // personal weights
    std::vector<int> profile(inv.function_words.size());
    for (size_t i = 0; i < profile.size(); ++i) profile[i] = static_cast<int>(i);
    std::shuffle(profile.begin(), profile.end(), rng);
    profile.resize(cfg.profile_size);
    std::vector<double> weights(cfg.profile_size);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double& w : weights) w = 0.4 + u01(rng);
    std::discrete_distribution<int> profile_draw(weights.begin(), weights.end());

    const int author_in_lang = lang_counter[lang_idx]++;
    auto doc_for_side = [&](int side) {
      // per-document topic pool
      std::vector<int> pool;
      if (cfg.topic_confound) {
        int c0 = author_in_lang % cfg.topic_clusters;
        int c1 = (c0 + 1 + (author_in_lang / cfg.topic_clusters) % (cfg.topic_clusters - 1)) %
                 cfg.topic_clusters;
        const int cluster = side == 0 ? c0 : c1;
        for (int i = 0; i < cluster_size; ++i) pool.push_back(cluster * cluster_size + i);
      } else {
        std::vector<int> all(inv.topic_words.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(cfg.topic_words_per_doc);
        pool = std::move(all);
      }
      std::uniform_int_distribution<size_t> topic_draw(0, pool.size() - 1);
      std::bernoulli_distribution is_function(cfg.function_fraction);
      std::string doc;
      for (int w = 0; w < cfg.words_per_doc; ++w) {
        if (w > 0) doc.push_back(' ');
        if (is_function(rng))
          doc += inv.function_words[profile[profile_draw(rng)]];
        else
          doc += inv.topic_words[pool[topic_draw(rng)]];
      }
      return doc;
    };

    AuthorRecord rec;
    rec.author_id = "a" + std::to_string(a);
    rec.lang = "syn" + std::to_string(lang_idx);
    rec.domain = "dom" + std::to_string((a / cfg.n_langs) % 2);
    rec.doc0 = doc_for_side(0);
    rec.doc1 = doc_for_side(1);
    records.push_back(std::move(rec));
  }
  return make_corpus(std::move(records));
}

}  // namespace styloforge
