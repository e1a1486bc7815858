#include "rlp/corpus/demonstration.hpp"

#include <stdexcept>
#include <string>

namespace rlp::corpus {

TraceKind parse_trace_kind(std::string_view name) {
  if (name == "answer") return TraceKind::Answer;
  if (name == "binding") return TraceKind::Binding;
  if (name == "scan") return TraceKind::Scan;
  throw std::invalid_argument("unknown trace kind '" + std::string(name) + "' (expected answer, binding or scan)");
}

std::string_view trace_kind_name(TraceKind kind) {
  switch (kind) {
    case TraceKind::Answer: return "answer";
    case TraceKind::Binding: return "binding";
    case TraceKind::Scan: return "scan";
  }
  return "?";
}

namespace {

std::vector<TokenId> lookup_trace(const Document& doc, std::size_t pos, TraceKind kind, const Vocabulary& vocab) {
  const auto& t = doc.tokens;
  if (pos + 1 != t.size() || t.size() < 7) throw std::invalid_argument("lookup trace: not an answer position");
  const TokenId key = t[t.size() - 3];  // "...?k:v"
  const TokenId value = t[t.size() - 1];
  if (kind == TraceKind::Answer) return {value};
  const TokenId eq = vocab.id('=');
  if (kind == TraceKind::Binding) return {key, eq, value};
  std::vector<TokenId> out;
  // Table entries sit at 4j (key) and 4j + 2 (value); ';' separates them.
  for (std::size_t j = 0; 4 * j + 2 < t.size() - 3; ++j) {
    if (j) out.push_back(vocab.id(';'));
    out.insert(out.end(), {t[4 * j], eq, t[4 * j + 2]});
    if (t[4 * j] == key) return out;
  }
  throw std::invalid_argument("lookup trace: queried key missing from the table");
}

std::vector<TokenId> copy_trace(const Document& doc, std::size_t pos, TraceKind kind) {
  const std::size_t half = (doc.tokens.size() - 1) / 2;
  if (pos <= half || pos >= doc.tokens.size()) throw std::invalid_argument("copy trace: not an answer position");
  const std::size_t j = pos - half - 1;
  if (kind == TraceKind::Scan) return {doc.tokens.begin(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(j + 1)};
  return {doc.tokens[j]};
}

}  // namespace

std::vector<TokenId> worked_trace(const Document& doc, std::size_t pos, TraceKind kind, const Vocabulary& vocab,
                                  Rng& rng) {
  if (doc.source == "lookup") return lookup_trace(doc, pos, kind, vocab);
  if (doc.source == "copy") return copy_trace(doc, pos, kind);
  if (doc.source == "uniform-noise") {
    std::vector<TokenId> out(1 + rng.index(3));
    for (auto& tok : out) tok = vocab.id(kValueAlphabet[rng.index(kValueAlphabet.size())]);
    return out;
  }
  return {};
}

std::vector<TokenId> splice_thought(const Document& doc, std::size_t pos, std::span<const TokenId> trace) {
  if (pos < 1 || pos >= doc.tokens.size()) throw std::out_of_range("splice_thought: position out of range");
  std::vector<TokenId> out(doc.tokens.begin(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(pos));
  out.push_back(kThinkOpen);
  out.insert(out.end(), trace.begin(), trace.end());
  out.push_back(kThinkClose);
  out.insert(out.end(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(pos), doc.tokens.end());
  return out;
}

}  // namespace rlp::corpus
