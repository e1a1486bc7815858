#pragma once

#include "rlp/model/parameters.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::model {

/// Checkpoint layout (all integers and floats little-endian):
///
///   "RLPF"  u32 format version
///   ModelConfig as 7 x u32 (vocab, context, layers, width, heads, L_max, ff;
///   ff = 0 means the 4 x width default)
///   u64 parameter version, u32 tensor count, tensors
///   zero or more sections: 4-byte tag, u64 payload length, payload
///   "END0"  u64 FNV-1a checksum of every preceding byte
///
/// A tensor is (u32 name length, name, u32 rank, u64 extents[rank],
/// f64 values in row-major order).
inline constexpr char kMagic[4] = {'R', 'L', 'P', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, Truncated, Checksum, ConfigMismatch, Malformed, Io };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::uint64_t fnv1a(std::string_view bytes);

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view bytes) { buf_.append(bytes); }
  void string(std::string_view s);
  void tensor(const std::string& name, const Tensor& t);
  void tensors(const std::map<std::string, Tensor>& ts);
  void section(std::string_view tag, const BinaryWriter& payload);

  const std::string& bytes() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view bytes) : data_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view raw(std::size_t n);
  std::string string();
  std::pair<std::string, Tensor> tensor();
  std::map<std::string, Tensor> tensors();

  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const;
  std::string_view data_;
  std::size_t pos_ = 0;
};

struct Section {
  std::string tag;
  std::string payload;
};

struct CheckpointImage {
  ParameterSet params;
  std::vector<Section> sections;

  const Section* find(std::string_view tag) const;
};

void write_config(BinaryWriter& w, const ModelConfig& c);
ModelConfig read_config(BinaryReader& r);

/// Serializes parameters plus extra sections, with header and checksum trailer.
std::string encode_checkpoint(const ParameterSet& params, const std::vector<std::pair<std::string, BinaryWriter>>& sections);
CheckpointImage decode_checkpoint(std::string_view bytes);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

void save_parameters(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_parameters(const std::filesystem::path& path);

}  // namespace rlp::model
