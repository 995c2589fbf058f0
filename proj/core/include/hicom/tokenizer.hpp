#pragma once

#include "hicom/graph.hpp"
#include "hicom/types.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace hicom {

// Whitespace/lowercase vocabulary. Ids are contiguous: 0 = pad, 1 = unk,
// then corpus tokens ranked by descending frequency, ties broken
// lexicographically.
struct Vocabulary {
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;

  std::unordered_map<std::string, TokenId> token_to_id;
  std::vector<std::string> id_to_token;  // index = id; [0]="<pad>", [1]="<unk>"

  int size() const { return static_cast<int>(id_to_token.size()); }
  TokenId lookup(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnk : it->second;
  }
};

// Fixed-length padded token sequence. Real tokens occupy a prefix; mask[i]=0
// implies ids[i]=pad.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;

  int length() const { return static_cast<int>(ids.size()); }
  int valid_count() const;
};

using TokenTable = std::vector<TokenSeq>;  // indexed by node id

// Lowercased whitespace split of a text.
std::vector<std::string> tokenize_words(const std::string& text);

// Token count for degree_stats; same splitting rule as the vocabulary.
std::size_t count_words(const std::string& text);

// Builds a vocabulary over the corpus. Tokens with frequency < min_freq are
// dropped (they map to unk at encode time); at most max_size ids total
// including pad and unk. Throws InvalidArgumentError on an empty corpus.
Vocabulary build_vocab(const std::vector<std::string>& corpus, int max_size, int min_freq = 1);

// Encodes every node's text to length exactly t: tail truncation for long
// texts, pad fill for short ones.
TokenTable pre_tokenize(const TextGraph& g, const Vocabulary& v, int t);

TokenSeq encode_text(const std::string& text, const Vocabulary& v, int t);

// JSON lines {"token": <string>, "id": <int>}.
void save_vocab(const Vocabulary& v, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

// Binary cache: header "HCTK", u32 version, u32 node count, u32 t; then per
// node t little-endian int32 ids followed by t little-endian int32 mask flags.
void save_token_cache(const TokenTable& table, const std::filesystem::path& path);
TokenTable load_token_cache(const std::filesystem::path& path);

}  // namespace hicom
