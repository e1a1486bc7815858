#pragma once

#include "rlp/corpus/synthetic.hpp"
#include "rlp/rng.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace rlp::corpus {

/// Shape of the worked thought a demonstration writes before an answer.
enum class TraceKind {
  Answer,   // the answer token alone
  Binding,  // lookup: "k=v" for the queried key
  Scan,     // lookup: every binding up to the queried one; copy: the source up to the answer
};

TraceKind parse_trace_kind(std::string_view name);
std::string_view trace_kind_name(TraceKind kind);

/// Worked thought for answer position `pos` of a synthetic document. Noise
/// documents get 1-3 random digits, which carry no information about the
/// target. Documents without a known generator get an empty trace.
std::vector<TokenId> worked_trace(const Document& doc, std::size_t pos, TraceKind kind, const Vocabulary& vocab,
                                  Rng& rng);

/// doc[0, pos) ++ THINK_OPEN ++ trace ++ THINK_CLOSE ++ doc[pos, end)
std::vector<TokenId> splice_thought(const Document& doc, std::size_t pos, std::span<const TokenId> trace);

}  // namespace rlp::corpus
