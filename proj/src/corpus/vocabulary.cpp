#include "rlp/corpus/vocabulary.hpp"

#include <cstdio>

namespace rlp::corpus {

namespace {

constexpr TokenId kUnmapped = -1;

// Raw characters that stand for the control tokens when rendering.
constexpr char kControlChars[kReservedCount] = {'\x00', '\x01', '\x02', '\x03'};

std::string describe(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%02x", u);
  return buf;
}

}  // namespace

Vocabulary::Vocabulary(std::string_view charset) : charset_(charset) {
  table_.fill(kUnmapped);
  for (std::size_t i = 0; i < charset_.size(); ++i) {
    const auto u = static_cast<unsigned char>(charset_[i]);
    if (u < kReservedCount) throw std::invalid_argument("charset contains a reserved control character");
    if (table_[u] != kUnmapped) throw std::invalid_argument("charset contains duplicate character " + describe(charset_[i]));
    table_[u] = static_cast<TokenId>(i) + kReservedCount;
  }
}

Vocabulary Vocabulary::desk() {
  return Vocabulary("abcdefghijklmnopqrstuvwxyz0123456789 =;?:#.,!'-()\"/+*&%@_<>$");
}

Vocabulary Vocabulary::printable_ascii() {
  std::string chars;
  for (char c = 0x20; c < 0x7f; ++c) chars.push_back(c);
  return Vocabulary(chars);
}

TokenId Vocabulary::id(char c) const {
  const TokenId t = table_[static_cast<unsigned char>(c)];
  if (t == kUnmapped) throw TokenizeError("unsupported character " + describe(c), c, 0);
  return t;
}

char Vocabulary::character(TokenId id) const {
  if (!contains(id)) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  if (is_reserved(id)) return kControlChars[id];
  return charset_[static_cast<std::size_t>(id - kReservedCount)];
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto u = static_cast<unsigned char>(text[i]);
    if (u < kReservedCount) {
      throw TokenizeError("reserved control character " + describe(text[i]) + " at offset " + std::to_string(i), text[i], i);
    }
    const TokenId t = table_[u];
    if (t == kUnmapped) {
      throw TokenizeError("unsupported character " + describe(text[i]) + " at offset " + std::to_string(i), text[i], i);
    }
    out.push_back(t);
  }
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) out.push_back(character(t));
  return out;
}

}  // namespace rlp::corpus
