#include "hicom/tokenizer.hpp"

#include "hicom/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>

namespace hicom {

int TokenSeq::valid_count() const {
  int n = 0;
  for (std::uint8_t m : mask) n += m;
  return n;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t count_words(const std::string& text) { return tokenize_words(text).size(); }

Vocabulary build_vocab(const std::vector<std::string>& corpus, int max_size, int min_freq) {
  if (max_size < 3) throw InvalidArgumentError("build_vocab requires max_size >= 3");
  std::map<std::string, std::size_t> freq;  // ordered map gives the lexicographic tie-break
  for (const auto& doc : corpus)
    for (auto& tok : tokenize_words(doc)) ++freq[tok];
  if (freq.empty()) throw InvalidArgumentError("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.id_to_token = {"<pad>", "<unk>"};
  for (const auto& [tok, count] : ranked) {
    if (count < static_cast<std::size_t>(min_freq)) continue;
    if (v.size() >= max_size) break;
    v.token_to_id.emplace(tok, v.size());
    v.id_to_token.push_back(tok);
  }
  return v;
}

TokenSeq encode_text(const std::string& text, const Vocabulary& v, int t) {
  TokenSeq seq;
  seq.ids.assign(t, Vocabulary::kPad);
  seq.mask.assign(t, 0);
  const auto words = tokenize_words(text);
  const int n = std::min<int>(t, static_cast<int>(words.size()));
  for (int i = 0; i < n; ++i) {
    seq.ids[i] = v.lookup(words[i]);
    seq.mask[i] = 1;
  }
  return seq;
}

TokenTable pre_tokenize(const TextGraph& g, const Vocabulary& v, int t) {
  if (t < 1) throw InvalidArgumentError("pre_tokenize requires t >= 1");
  TokenTable table(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) table[i] = encode_text(g.text[i], v, t);
  return table;
}

void save_vocab(const Vocabulary& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (int id = 0; id < v.size(); ++id) {
    nlohmann::json j{{"token", v.id_to_token[id]}, {"id", id}};
    out << j.dump() << '\n';
  }
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Vocabulary v;
  std::string line;
  long lineno = 0;
  std::vector<std::pair<int, std::string>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("token") || !j.contains("id"))
      throw FormatError("bad vocab record in " + path.string(), lineno);
    rows.emplace_back(j["id"].get<int>(), j["token"].get<std::string>());
  }
  v.id_to_token.resize(rows.size());
  for (auto& [id, tok] : rows) {
    if (id < 0 || id >= static_cast<int>(rows.size()))
      throw FormatError("vocab ids not contiguous in " + path.string());
    v.id_to_token[id] = tok;
    if (id >= 2) v.token_to_id.emplace(tok, id);
  }
  if (v.size() < 2) throw FormatError("vocab missing pad/unk entries: " + path.string());
  return v;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_token_cache(const TokenTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::uint32_t t = table.empty() ? 0 : static_cast<std::uint32_t>(table[0].length());
  out.write("HCTK", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(table.size()));
  put_u32(out, t);
  for (const auto& seq : table) {
    if (seq.ids.size() != t || seq.mask.size() != t)
      throw InternalError("token cache rows must share one length");
    for (TokenId id : seq.ids) put_u32(out, static_cast<std::uint32_t>(id));
    for (std::uint8_t m : seq.mask) put_u32(out, m);
  }
}

TokenTable load_token_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HCTK", 4) != 0)
    throw FormatError("bad token cache magic: " + path.string());
  if (get_u32(in) != 1) throw FormatError("unsupported token cache version: " + path.string());
  const std::uint32_t n = get_u32(in);
  const std::uint32_t t = get_u32(in);
  TokenTable table(n);
  for (auto& seq : table) {
    seq.ids.resize(t);
    seq.mask.resize(t);
    for (auto& id : seq.ids) id = static_cast<TokenId>(get_u32(in));
    for (auto& m : seq.mask) m = static_cast<std::uint8_t>(get_u32(in));
  }
  if (!in) throw FormatError("truncated token cache: " + path.string());
  return table;
}

}  // namespace hicom
