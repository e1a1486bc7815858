#include "rlp/trainer/evaluate.hpp"

#include "rlp/corpus/batch.hpp"
#include "rlp/model/inference.hpp"
#include "rlp/parallel.hpp"
#include "rlp/rng.hpp"
#include "rlp/trainer/state.hpp"

#include <stdexcept>

namespace rlp::trainer {

EvalReport evaluate(const model::ParameterSet& params, const model::ParameterSet* teacher,
                    std::span<const model::PositionContext> contexts, double temperature, int max_len,
                    std::uint64_t seed, int samples, int threads) {
  if (contexts.empty()) throw std::invalid_argument("evaluate: no positions");
  if (samples < 1) throw std::invalid_argument("evaluate: samples must be at least 1");
  struct Row {
    double reasoned = 0.0, plain = 0.0, teacher = 0.0, length = 0.0;
  };
  std::vector<Row> rows(contexts.size());
  parallel_for(contexts.size(), threads, [&](std::size_t c) {
    const auto& ctx = contexts[c];
    model::check_prefix(params.config(), ctx.prefix, static_cast<std::size_t>(max_len) + 2);
    model::InferenceSession base(params);
    base.feed(ctx.prefix);
    Row& row = rows[c];
    row.plain = -model::log_softmax(base.logits())(ctx.target);
    if (teacher) row.teacher = -model::score_next_token(*teacher, ctx.prefix, ctx.target);
    for (int s = 0; s < samples; ++s) {
      model::InferenceSession fork = base;
      const auto thought =
          model::sample_thought_from(fork, temperature, max_len, Rng::derive(seed, c, static_cast<std::uint64_t>(s)));
      row.reasoned -= model::log_softmax(fork.feed(corpus::kThinkClose))(ctx.target);
      row.length += static_cast<double>(thought.size());
    }
    row.reasoned /= samples;
    row.length /= samples;
  });
  EvalReport out;
  out.positions = contexts.size();
  for (const Row& r : rows) {
    out.reasoned_ce += r.reasoned;
    out.no_think_ce += r.plain;
    out.teacher_ce += r.teacher;
    out.mean_thought_len += r.length;
  }
  const double n = static_cast<double>(contexts.size());
  out.reasoned_ce /= n;
  out.no_think_ce /= n;
  out.teacher_ce /= n;
  out.mean_thought_len /= n;
  if (teacher) out.mean_reward = out.teacher_ce - out.reasoned_ce;
  return out;
}

std::vector<model::PositionContext> held_out_positions(const RunConfig& config, std::size_t documents) {
  RunConfig held = config;
  held.corpus_path.clear();
  held.corpus_size = documents;
  held.data_seed = Rng::derive(config.data_seed, 0x4e1d07u);
  const auto docs = build_corpus(held);
  return corpus::all_positions(docs, corpus::PositionPolicy::AnswerPositions,
                               static_cast<std::size_t>(config.model.max_prefix()));
}

}  // namespace rlp::trainer
