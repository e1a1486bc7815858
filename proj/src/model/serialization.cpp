#include "rlp/model/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rlp::model {

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void BinaryWriter::u32(std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf_.append(b, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf_.append(b, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void BinaryWriter::tensor(const std::string& name, const Tensor& t) {
  string(name);
  u32(static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) u64(static_cast<std::uint64_t>(e));
  const Matrix& m = t.values();
  const std::size_t n = static_cast<std::size_t>(m.size());
  const std::size_t at = buf_.size();
  buf_.resize(at + 8 * n);
  std::memcpy(buf_.data() + at, m.data(), 8 * n);
}

void BinaryWriter::tensors(const std::map<std::string, Tensor>& ts) {
  u32(static_cast<std::uint32_t>(ts.size()));
  for (const auto& [name, t] : ts) tensor(name, t);
}

void BinaryWriter::section(std::string_view tag, const BinaryWriter& payload) {
  if (tag.size() != 4) throw std::invalid_argument("section tags are four bytes");
  raw(tag);
  u64(payload.size());
  raw(payload.bytes());
}

void BinaryReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint truncated at byte " + std::to_string(pos_));
  }
}

std::uint8_t BinaryReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string_view BinaryReader::raw(std::size_t n) {
  need(n);
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string BinaryReader::string() {
  const std::uint32_t n = u32();
  return std::string(raw(n));
}

std::pair<std::string, Tensor> BinaryReader::tensor() {
  std::string name = string();
  const std::uint32_t rank = u32();
  if (rank < 1 || rank > 2) throw CheckpointError(CheckpointError::Kind::Malformed, "tensor " + name + " has rank " + std::to_string(rank));
  std::vector<numerics::Index> shape;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t e = u64();
    if (e == 0 || e > (1ULL << 32)) throw CheckpointError(CheckpointError::Kind::Malformed, "tensor " + name + " has bad extent");
    shape.push_back(static_cast<numerics::Index>(e));
    count *= e;
  }
  Tensor t(shape);
  const auto bytes = raw(static_cast<std::size_t>(count) * 8);
  std::memcpy(t.values().data(), bytes.data(), bytes.size());
  return {std::move(name), std::move(t)};
}

std::map<std::string, Tensor> BinaryReader::tensors() {
  const std::uint32_t n = u32();
  std::map<std::string, Tensor> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto [name, t] = tensor();
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

const Section* CheckpointImage::find(std::string_view tag) const {
  for (const Section& s : sections) {
    if (s.tag == tag) return &s;
  }
  return nullptr;
}

void write_config(BinaryWriter& w, const ModelConfig& c) {
  for (int v : {c.vocab_size, c.context_window, c.layers, c.width, c.heads, c.thought_budget, c.ff_width}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
}

ModelConfig read_config(BinaryReader& r) {
  ModelConfig c;
  c.vocab_size = static_cast<int>(r.u32());
  c.context_window = static_cast<int>(r.u32());
  c.layers = static_cast<int>(r.u32());
  c.width = static_cast<int>(r.u32());
  c.heads = static_cast<int>(r.u32());
  c.thought_budget = static_cast<int>(r.u32());
  c.ff_width = static_cast<int>(r.u32());
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointError::Kind::Malformed, e.what());
  }
  return c;
}

std::string encode_checkpoint(const ParameterSet& params,
                              const std::vector<std::pair<std::string, BinaryWriter>>& sections) {
  BinaryWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kFormatVersion);
  write_config(w, params.config());
  w.u64(params.version());
  w.tensors(params.tensors());
  for (const auto& [tag, payload] : sections) w.section(tag, payload);
  const std::uint64_t sum = fnv1a(w.bytes());
  w.raw("END0");
  w.u64(sum);
  return w.bytes();
}

namespace {

void check_schema(const ParameterSet& params) {
  const ParameterSet expected = init_parameters(params.config(), 0);
  if (expected.tensors().size() != params.tensors().size()) {
    throw CheckpointError(CheckpointError::Kind::Malformed, "checkpoint tensor set does not match its model config");
  }
  for (const auto& [name, t] : expected.tensors()) {
    auto it = params.tensors().find(name);
    if (it == params.tensors().end() || it->second.shape() != t.shape()) {
      throw CheckpointError(CheckpointError::Kind::Malformed, "checkpoint tensor " + name + " missing or misshapen");
    }
  }
}

}  // namespace

CheckpointImage decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint: bad magic bytes");
  }
  BinaryReader head(bytes.substr(4));
  const std::uint32_t version = head.u32();
  if (version != kFormatVersion) {
    throw CheckpointError(CheckpointError::Kind::UnsupportedVersion,
                          "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kFormatVersion) + ")");
  }
  if (bytes.size() < 8 + 12 || bytes.substr(bytes.size() - 12, 4) != "END0") {
    throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint truncated: missing trailer");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 12);
  BinaryReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != fnv1a(body)) throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint checksum mismatch");

  BinaryReader r(body.substr(8));
  const ModelConfig config = read_config(r);
  CheckpointImage image{ParameterSet(config), {}};
  image.params.set_version(r.u64());
  image.params.tensors() = r.tensors();
  check_schema(image.params);
  while (!r.done()) {
    Section s;
    s.tag = std::string(r.raw(4));
    const std::uint64_t n = r.u64();
    s.payload = std::string(r.raw(static_cast<std::size_t>(n)));
    image.sections.push_back(std::move(s));
  }
  return image;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_parameters(const std::filesystem::path& path, const ParameterSet& params) {
  write_file(path, encode_checkpoint(params, {}));
}

ParameterSet load_parameters(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)).params; }

}  // namespace rlp::model
