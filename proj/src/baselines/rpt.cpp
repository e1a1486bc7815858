#include "rlp/baselines/rpt.hpp"

#include "rlp/model/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace rlp::baselines {

double binary_match(const numerics::RowVector& logits, model::TokenId target) {
  numerics::Index best = 0;
  logits.maxCoeff(&best);
  return best == target ? 1.0 : 0.0;
}

double rpt_reward(const model::ThoughtSample& thought, const model::ParameterSet& params,
                  const model::PositionContext& ctx) {
  const auto prefix = model::reasoned_prefix(ctx.prefix, thought.tokens);
  return model::greedy_next_token(params, prefix) == ctx.target ? 1.0 : 0.0;
}

double entropy_from_logits(const numerics::RowVector& logits) {
  const double m = logits.maxCoeff();
  const numerics::RowVector shifted = logits.array() - m;
  const numerics::RowVector e = shifted.array().exp();
  const double z = e.sum();
  return std::log(z) - e.dot(shifted) / z;
}

double next_token_entropy(const model::ParameterSet& params, std::span<const model::TokenId> prefix) {
  model::check_prefix(params.config(), prefix, 0);
  model::InferenceSession session(params);
  session.feed(prefix);
  return entropy_from_logits(session.logits());
}

bool entropy_filter(const model::PositionContext& ctx, const reward::EmaTeacher& teacher, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("entropy threshold must be non-negative");
  const auto phi = teacher.snapshot();
  if (threshold == 0.0) return true;
  return next_token_entropy(*phi, ctx.prefix) >= threshold;
}

}  // namespace rlp::baselines
