#include "doctest.h"

#include "hicom/error.hpp"
#include "hicom/tokenizer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace hicom;
namespace fs = std::filesystem;

namespace {

// Frequency-count reference: rank by descending count, ties lexicographic,
// drop below min_freq, cap total ids at max_size.
std::vector<std::string> vocab_oracle(const std::vector<std::string>& corpus, int max_size,
                                      int min_freq) {
  std::map<std::string, long> freq;
  for (const std::string& doc : corpus)
    for (const std::string& w : tokenize_words(doc)) ++freq[w];
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> ids{"<pad>", "<unk>"};
  for (const auto& [tok, n] : ranked) {
    if (n < min_freq) continue;
    if (static_cast<int>(ids.size()) >= max_size) break;
    ids.push_back(tok);
  }
  return ids;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("word splitting lowercases and collapses whitespace") {
    CHECK(tokenize_words("Alpha  beta\tGAMMA\n") ==
          std::vector<std::string>{"alpha", "beta", "gamma"});
    CHECK(tokenize_words("").empty());
    CHECK(tokenize_words("   ").empty());
    CHECK(count_words("one two  three") == 3);
  }

  TEST_CASE("vocabulary ids follow frequency rank with lexicographic ties") {
    std::vector<std::string> corpus{"b b b a a c", "a c d", "E e"};
    Vocabulary v = build_vocab(corpus, 100, 1);
    // Counts: a=3 b=3 c=2 e=2 d=1; ties a<b and c<e.
    CHECK(v.id_to_token ==
          std::vector<std::string>{"<pad>", "<unk>", "a", "b", "c", "e", "d"});
    CHECK(v.lookup("a") == 2);
    CHECK(v.lookup("missing") == Vocabulary::kUnk);
    Vocabulary capped = build_vocab(corpus, 4, 1);
    CHECK(capped.size() == 4);
    CHECK(capped.id_to_token == std::vector<std::string>{"<pad>", "<unk>", "a", "b"});
    Vocabulary frequent = build_vocab(corpus, 100, 2);
    CHECK(frequent.lookup("d") == Vocabulary::kUnk);
    CHECK_THROWS_AS(build_vocab({}, 10), InvalidArgumentError);
  }

  TEST_CASE("vocabulary matches the counting oracle on a synthetic corpus") {
    std::mt19937_64 gen(7);
    std::vector<std::string> words;
    for (int w = 0; w < 60; ++w) words.push_back("w" + std::to_string(w));
    std::vector<std::string> corpus;
    for (int doc = 0; doc < 1000; ++doc) {
      std::ostringstream os;
      const int len = 1 + static_cast<int>(gen() % 12);
      for (int i = 0; i < len; ++i) {
        if (i) os << ' ';
        // Zipf-ish skew so frequency ranks are nontrivial.
        os << words[static_cast<std::size_t>(gen() % (1 + gen() % 60))];
      }
      corpus.push_back(os.str());
    }
    for (const auto& [max_size, min_freq] : std::vector<std::pair<int, int>>{
             {10000, 1}, {30, 1}, {10000, 5}, {17, 3}}) {
      Vocabulary v = build_vocab(corpus, max_size, min_freq);
      CHECK(v.id_to_token == vocab_oracle(corpus, max_size, min_freq));
      for (TokenId id = 0; id < v.size(); ++id)
        if (id >= 2) CHECK(v.token_to_id.at(v.id_to_token[id]) == id);
    }
  }

  TEST_CASE("encoding pads, truncates and masks") {
    Vocabulary v = build_vocab({"a b c d e"}, 100, 1);
    TokenSeq s = encode_text("c a zzz", v, 5);
    REQUIRE(s.length() == 5);
    CHECK(s.ids[0] == v.lookup("c"));
    CHECK(s.ids[1] == v.lookup("a"));
    CHECK(s.ids[2] == Vocabulary::kUnk);
    CHECK(s.ids[3] == Vocabulary::kPad);
    CHECK(s.mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
    CHECK(s.valid_count() == 3);
    TokenSeq cut = encode_text("a b c d e", v, 3);
    CHECK(cut.ids == std::vector<TokenId>{v.lookup("a"), v.lookup("b"), v.lookup("c")});
    CHECK(cut.valid_count() == 3);
    TokenSeq empty = encode_text("", v, 4);
    CHECK(empty.valid_count() == 0);
    CHECK(empty.length() == 4);
  }

  TEST_CASE("pre_tokenize covers every node at fixed width") {
    TextGraph g;
    g.adjacency = {{1}, {0}, {}};
    g.text = {"a b", "", "b b b b"};
    g.labels.assign(3, {});
    Vocabulary v = build_vocab({g.text[0], g.text[2]}, 100, 1);
    TokenTable t = pre_tokenize(g, v, 3);
    REQUIRE(t.size() == 3);
    for (const TokenSeq& s : t) CHECK(s.length() == 3);
    CHECK(t[0].valid_count() == 2);
    CHECK(t[1].valid_count() == 0);
    CHECK(t[2].valid_count() == 3);
  }

  TEST_CASE("vocabulary file round trip") {
    Vocabulary v = build_vocab({"x y z y x x"}, 100, 1);
    const fs::path p = fs::temp_directory_path() / "hicom_test_vocab.jsonl";
    save_vocab(v, p);
    Vocabulary w = load_vocab(p);
    CHECK(w.id_to_token == v.id_to_token);
    CHECK(w.token_to_id.size() == v.token_to_id.size());
  }

  TEST_CASE("token cache round trip and corruption checks") {
    TokenTable table;
    std::mt19937_64 gen(11);
    for (int node = 0; node < 17; ++node) {
      TokenSeq s;
      const int valid = static_cast<int>(gen() % 7);
      for (int i = 0; i < 6; ++i) {
        const bool real = i < valid;
        s.ids.push_back(real ? static_cast<TokenId>(2 + gen() % 50) : Vocabulary::kPad);
        s.mask.push_back(real ? 1 : 0);
      }
      table.push_back(std::move(s));
    }
    const fs::path p = fs::temp_directory_path() / "hicom_test_tokens.bin";
    save_token_cache(table, p);
    TokenTable back = load_token_cache(p);
    REQUIRE(back.size() == table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      CHECK(back[i].ids == table[i].ids);
      CHECK(back[i].mask == table[i].mask);
    }
    // Flipping the magic must be rejected.
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(load_token_cache(p), FormatError);
    CHECK_THROWS_AS(load_token_cache(fs::temp_directory_path() / "hicom_no_such.bin"),
                    FormatError);
  }
}
