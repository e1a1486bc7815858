#include "rlp/corpus/batch.hpp"

#include "rlp/rng.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace rlp::corpus {

PositionPolicy parse_position_policy(std::string_view name) {
  if (name == "stream") return PositionPolicy::Stream;
  if (name == "answer-positions") return PositionPolicy::AnswerPositions;
  throw std::invalid_argument("unknown position policy '" + std::string(name) + "'");
}

std::string_view position_policy_name(PositionPolicy policy) {
  return policy == PositionPolicy::Stream ? "stream" : "answer-positions";
}

PositionIndex::PositionIndex(std::span<const Document> corpus, PositionPolicy policy)
    : corpus_(corpus), policy_(policy) {
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const Document& doc = corpus[d];
    std::size_t count = 0;
    if (doc.tokens.size() >= 2) {
      count = policy == PositionPolicy::Stream ? doc.tokens.size() - 1 : doc.answer_positions.size();
    }
    if (count == 0) {
      ++skipped_;
      continue;
    }
    docs_.push_back(d);
    offsets_.push_back(total_);
    total_ += count;
  }
}

std::pair<std::size_t, std::size_t> PositionIndex::locate(std::size_t flat) const {
  if (flat >= total_) throw std::out_of_range("position index out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
  const auto k = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  const std::size_t local = flat - offsets_[k];
  const Document& doc = corpus_[docs_[k]];
  const std::size_t position = policy_ == PositionPolicy::Stream ? local + 1 : doc.answer_positions[local];
  return {docs_[k], position};
}

model::PositionContext make_context(const Document& doc, std::size_t document, std::size_t position,
                                    std::size_t max_prefix) {
  if (position < 1 || position >= doc.tokens.size()) throw std::out_of_range("position outside document");
  std::size_t begin = 0;
  if (max_prefix > 0 && position > max_prefix) begin = position - max_prefix;
  model::PositionContext ctx;
  ctx.prefix.assign(doc.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                    doc.tokens.begin() + static_cast<std::ptrdiff_t>(position));
  ctx.target = doc.tokens[position];
  ctx.document = document;
  ctx.position = position;
  return ctx;
}

std::vector<model::PositionContext> sample_batch(std::span<const Document> corpus, const BatchSpec& spec) {
  if (corpus.empty()) throw std::invalid_argument("sample_batch: corpus is empty");
  if (spec.batch_size < 1) throw std::invalid_argument("sample_batch: batch size must be at least 1");
  const PositionIndex index(corpus, spec.policy);
  if (index.skipped_documents() > 0) {
    std::clog << "warning: sample_batch skipped " << index.skipped_documents()
              << " document(s) without a valid position\n";
  }
  if (index.total() == 0) throw std::invalid_argument("sample_batch: no eligible positions in corpus");
  Rng rng(spec.seed);
  std::vector<model::PositionContext> out;
  out.reserve(spec.batch_size);
  for (std::size_t b = 0; b < spec.batch_size; ++b) {
    const auto [d, p] = index.locate(static_cast<std::size_t>(rng.index(index.total())));
    out.push_back(make_context(corpus[d], d, p, spec.max_prefix));
  }
  return out;
}

std::vector<model::PositionContext> all_positions(std::span<const Document> corpus, PositionPolicy policy,
                                                  std::size_t max_prefix) {
  const PositionIndex index(corpus, policy);
  std::vector<model::PositionContext> out;
  out.reserve(index.total());
  for (std::size_t i = 0; i < index.total(); ++i) {
    const auto [d, p] = index.locate(i);
    out.push_back(make_context(corpus[d], d, p, max_prefix));
  }
  return out;
}

}  // namespace rlp::corpus
