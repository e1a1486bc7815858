#pragma once

#include "rlp/corpus/synthetic.hpp"
#include "rlp/model/types.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace rlp::corpus {

enum class PositionPolicy {
  Stream,           // uniform over every position t >= 1 of every document
  AnswerPositions,  // only positions the generator marked as determined by context
};

PositionPolicy parse_position_policy(std::string_view name);
std::string_view position_policy_name(PositionPolicy policy);

struct BatchSpec {
  std::size_t batch_size = 32;
  PositionPolicy policy = PositionPolicy::Stream;
  std::uint64_t seed = 0;
  // Keep at most this many trailing prefix tokens; 0 keeps the whole prefix.
  std::size_t max_prefix = 0;
};

/// Eligible positions of a corpus under a policy, indexed for uniform draws.
class PositionIndex {
 public:
  PositionIndex(std::span<const Document> corpus, PositionPolicy policy);

  std::size_t total() const { return total_; }
  std::size_t skipped_documents() const { return skipped_; }
  /// Maps a flat index in [0, total) to (document, position).
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;

 private:
  std::span<const Document> corpus_;
  PositionPolicy policy_;
  std::vector<std::size_t> docs_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  std::size_t skipped_ = 0;
};

model::PositionContext make_context(const Document& doc, std::size_t document, std::size_t position,
                                    std::size_t max_prefix);

std::vector<model::PositionContext> sample_batch(std::span<const Document> corpus, const BatchSpec& spec);

/// Every eligible position of the corpus, in document order.
std::vector<model::PositionContext> all_positions(std::span<const Document> corpus, PositionPolicy policy,
                                                  std::size_t max_prefix = 0);

}  // namespace rlp::corpus
