#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::corpus {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kThinkOpen = 2;
inline constexpr TokenId kThinkClose = 3;
inline constexpr TokenId kReservedCount = 4;

class TokenizeError : public std::invalid_argument {
 public:
  TokenizeError(const std::string& what, char character, std::size_t offset)
      : std::invalid_argument(what), character_(character), offset_(offset) {}
  char character() const { return character_; }
  std::size_t offset() const { return offset_; }

 private:
  char character_;
  std::size_t offset_;
};

/// Character-level vocabulary. Ids below kReservedCount are control tokens;
/// the remaining ids map one-to-one onto the characters of the charset.
class Vocabulary {
 public:
  explicit Vocabulary(std::string_view charset);

  /// 60 characters plus the four control tokens (V = 64).
  static Vocabulary desk();
  /// Printable ASCII plus the four control tokens (V = 99).
  static Vocabulary printable_ascii();

  std::size_t size() const { return charset_.size() + kReservedCount; }
  const std::string& charset() const { return charset_; }

  TokenId id(char c) const;
  char character(TokenId id) const;
  bool is_reserved(TokenId id) const { return id >= 0 && id < kReservedCount; }
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> tokens) const;

 private:
  std::string charset_;
  std::array<TokenId, 256> table_{};
};

}  // namespace rlp::corpus
