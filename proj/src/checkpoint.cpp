#include "mf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "mf/error.hpp"

namespace mf {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'C', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& buf, std::string path)
      : buf_(buf), path_(std::move(path)) {}

  void need(std::size_t n, const std::string& what) {
    if (pos_ + n > buf_.size())
      throw DataError("checkpoint '" + path_ + "': truncated while reading " +
                      what);
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64(const std::string& what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)]))
              << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  std::string bytes(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }
  const std::string& path() const { return path_; }

 private:
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const CheckpointHeader& header) {
  nlohmann::json j;
  j["kind"] = header.kind;
  j["config"] = header.config;
  j["vocab"] = header.vocab.words();
  j["seed"] = header.seed;
  const std::string hdr = j.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(hdr.size()));
  out += hdr;
  for (const auto& [name, tensor] : params.params) {  // std::map: lexicographic
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (std::size_t d : tensor.shape)
      put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values) put_f64(out, v);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open checkpoint '" + path + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(file)),
                  std::istreambuf_iterator<char>());

  Reader r(buf, path);
  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw DataError("checkpoint '" + path + "': bad magic bytes");
  const std::uint32_t version = r.u32("format version");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint '" + path + "': unsupported format version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t hdr_len = r.u32("header length");
  const std::string hdr = r.bytes(hdr_len, "JSON header");

  Checkpoint ckpt;
  try {
    const nlohmann::json j = nlohmann::json::parse(hdr);
    ckpt.header.kind = j.at("kind").get<std::string>();
    ckpt.header.config =
        j.at("config").get<std::map<std::string, std::string>>();
    ckpt.header.vocab =
        Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    ckpt.header.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "': malformed JSON header: " +
                    e.what());
  }

  while (!r.at_end()) {
    const std::uint32_t name_len = r.u32("parameter name length");
    const std::string name = r.bytes(name_len, "parameter name");
    const std::uint32_t rank = r.u32("rank of parameter '" + name + "'");
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = r.u32("dims of parameter '" + name + "'");
      count *= shape[i];
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i)
      values[i] = r.f64("values of parameter '" + name + "'");
    ckpt.params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return ckpt;
}

}  // namespace mf
