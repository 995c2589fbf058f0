#include "hicom/checkpoint.hpp"

#include "hicom/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace hicom {
namespace {

constexpr char kMagic[4] = {'H', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void write_array(std::ostream& os, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f32(os, static_cast<float>(m(i, j)));
}

void read_array(std::istream& is, Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(get_f32(is));
}

}  // namespace

void save_checkpoint(const std::string& path, const CompressorParams& params,
                     const ClassifierHead& head) {
  auto refs = named_tensors(params);

  nlohmann::ordered_json header;
  header["version"] = kVersion;
  const ModelConfig& c = params.config;
  header["config"] = {{"vocab_size", c.vocab_size}, {"d", c.d},
                      {"layers", c.layers},         {"heads", c.heads},
                      {"k", c.k},                   {"t", c.t},
                      {"max_len", c.max_len},       {"init_seed", c.init_seed},
                      {"init_scale", c.init_scale}};
  header["num_classes"] = head.bias.size();
  header["arrays"] = nlohmann::ordered_json::array();
  for (const ConstTensorRef& r : refs)
    header["arrays"].push_back({{"name", r.name}, {"rows", r.mat->rows()}, {"cols", r.mat->cols()}});
  header["arrays"].push_back(
      {{"name", "head.proj"}, {"rows", head.proj.rows()}, {"cols", head.proj.cols()}});
  header["arrays"].push_back({{"name", "head.bias"}, {"rows", head.bias.size()}, {"cols", 1}});
  const std::string hs = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(hs.size()));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const ConstTensorRef& r : refs) write_array(os, *r.mat);
  write_array(os, head.proj);
  Mat bias = head.bias;
  write_array(os, bias);
  if (!os) throw Error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic in " + path);
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t hlen = get_u32(is);
  std::string hs(hlen, '\0');
  is.read(hs.data(), hlen);
  if (!is) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }

  ModelConfig cfg;
  try {
    const auto& jc = header.at("config");
    cfg.vocab_size = jc.at("vocab_size").get<int>();
    cfg.d = jc.at("d").get<int>();
    cfg.layers = jc.at("layers").get<int>();
    cfg.heads = jc.at("heads").get<int>();
    cfg.k = jc.at("k").get<int>();
    cfg.t = jc.at("t").get<int>();
    cfg.max_len = jc.at("max_len").get<int>();
    cfg.init_seed = jc.at("init_seed").get<std::uint64_t>();
    cfg.init_scale = jc.at("init_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: incomplete config: ") + e.what());
  }
  const int num_classes = header.at("num_classes").get<int>();

  Checkpoint ck;
  ck.params = init_params(cfg);
  ck.head.proj = Mat::Zero(cfg.d, num_classes);
  ck.head.bias = Vec::Zero(num_classes);

  auto refs = named_tensors(ck.params);
  const auto& arrays = header.at("arrays");
  if (arrays.size() != refs.size() + 2)
    throw FormatError("checkpoint: array count does not match this build");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& a = arrays[i];
    if (a.at("name").get<std::string>() != refs[i].name ||
        a.at("rows").get<Eigen::Index>() != refs[i].mat->rows() ||
        a.at("cols").get<Eigen::Index>() != refs[i].mat->cols())
      throw FormatError("checkpoint: array layout mismatch at " + refs[i].name);
    read_array(is, *refs[i].mat);
  }
  read_array(is, ck.head.proj);
  Mat bias = Mat::Zero(num_classes, 1);
  read_array(is, bias);
  ck.head.bias = bias.col(0);
  return ck;
}

}  // namespace hicom
