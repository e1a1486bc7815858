#include "rlp/baselines/cpt.hpp"
#include "rlp/baselines/rpt.hpp"
#include "rlp/corpus/batch.hpp"
#include "rlp/model/inference.hpp"
#include "rlp/trainer/policy_step.hpp"
#include "rlp/trainer/run.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace rlp::baselines;
using rlp::model::ParameterSet;
using rlp::model::PositionContext;
using rlp::model::TokenId;
using rlp::trainer::RunConfig;
using rlp::trainer::TrainerState;

RunConfig small_config(int vocab = 64) {
  RunConfig c;
  c.model.vocab_size = vocab;
  c.model.context_window = 24;
  c.model.layers = 1;
  c.model.width = 16;
  c.model.heads = 2;
  c.model.thought_budget = 4;
  c.rollouts = 4;
  c.batch_size = 4;
  c.corpus_size = 32;
  c.synthetic.keys = 2;
  c.position_policy = rlp::corpus::PositionPolicy::AnswerPositions;
  c.record_wall_time = false;
  c.arm = rlp::trainer::Arm::Cpt;
  return c;
}

void zero_head(ParameterSet& p) {
  p.at("head.w").values().setZero();
  p.at("head.b").values().setZero();
}

PositionContext context(std::vector<TokenId> prefix, TokenId target) {
  PositionContext c;
  c.prefix = std::move(prefix);
  c.target = target;
  return c;
}

TEST(Cpt, UniformModelInitialLossIsLogV) {
  // The desk vocabulary fixes V = 64 for corpus runs, so swap in a V = 32 model.
  TrainerState state = rlp::trainer::make_state(small_config());
  state.params = rlp::model::init_parameters(small_config(32).model, 1);
  zero_head(state.params);
  const std::vector<PositionContext> batch{context({4, 5, 6}, 7), context({9}, 30), context({31, 31}, 4)};
  EXPECT_NEAR(ntp_loss(state.params, batch), std::log(32.0), 1e-12);
  const auto report = ntp_step(state, batch);
  EXPECT_NEAR(report.loss, std::log(32.0), 0.05);
  EXPECT_EQ(report.arm, rlp::trainer::Arm::Cpt);
}

TEST(Cpt, RejectsThoughtDelimiters) {
  TrainerState state = rlp::trainer::make_state(small_config());
  const ParameterSet before = state.params;
  EXPECT_THROW(ntp_step(state, {context({4, rlp::corpus::kThinkOpen, 6}, 7)}), std::invalid_argument);
  EXPECT_THROW(ntp_step(state, {context({4, 5}, rlp::corpus::kThinkClose)}), std::invalid_argument);
  EXPECT_TRUE(state.params.same_values(before));
}

TEST(Cpt, ChargesInputOnly) {
  const RunConfig config = small_config();
  TrainerState state = rlp::trainer::make_state(config);
  const auto batch = rlp::trainer::batch_for_step(config, rlp::trainer::build_corpus(config), 0);
  std::uint64_t input = 0;
  for (const auto& ctx : batch) input += ctx.prefix.size() + 1;
  const auto report = ntp_step(state, batch);
  EXPECT_EQ(report.input_tokens, input);
  EXPECT_EQ(report.flop_tokens, input);
  EXPECT_EQ(state.ledger.rollout_tokens(), 0u);
  EXPECT_EQ(report.mean_thought_len, 0.0);
}

TEST(Cpt, CopyTaskBecomesNearlyFree) {
  RunConfig config = small_config();
  config.task = "copy";
  config.synthetic.copy_length = 4;
  config.corpus_size = 512;
  config.batch_size = 32;
  config.model.layers = 2;
  config.model.width = 32;
  config.model.heads = 4;
  config.optimizer.learning_rate = 1e-2;
  const auto corpus = rlp::trainer::build_corpus(config);
  TrainerState state = rlp::trainer::make_state(config);
  rlp::trainer::train(state, corpus, 400);
  const auto held = rlp::corpus::make_synthetic_corpus(rlp::trainer::desk_vocabulary(), rlp::corpus::Task::Copy, 64,
                                                       12345, config.synthetic);
  const auto positions = rlp::corpus::all_positions(held, rlp::corpus::PositionPolicy::AnswerPositions);
  EXPECT_LT(ntp_loss(state.params, positions), 0.1);
}

TEST(Cpt, SingleDocumentLossMostlyMonotone) {
  RunConfig config = small_config();
  config.optimizer.learning_rate = 3e-3;
  TrainerState state = rlp::trainer::make_state(config);
  const std::vector<rlp::corpus::Document> doc{
      {rlp::trainer::desk_vocabulary().tokenize("the quick brown fox"), "t", {}}};
  const auto batch = rlp::corpus::all_positions(doc, rlp::corpus::PositionPolicy::Stream);
  std::vector<double> losses;
  for (int k = 0; k < 100; ++k) losses.push_back(ntp_step(state, batch).loss);
  int violations = 0;
  for (std::size_t k = 1; k < losses.size(); ++k) violations += losses[k] > losses[k - 1] ? 1 : 0;
  EXPECT_LE(violations, 5);
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

TEST(Rpt, BinaryMatchDefinition) {
  rlp::numerics::RowVector logits = rlp::numerics::RowVector::Zero(8);
  logits(5) = 2.0;
  EXPECT_EQ(binary_match(logits, 5), 1.0);
  EXPECT_EQ(binary_match(logits, 6), 0.0);
}

TEST(Rpt, RewardIsGreedyMatchAfterThought) {
  ParameterSet p = rlp::model::init_parameters(small_config().model, 2);
  zero_head(p);
  p.at("head.b").values()(0, 10) = 5.0;
  rlp::model::ThoughtSample thought;
  thought.tokens = {7, 8};
  EXPECT_EQ(rpt_reward(thought, p, context({4, 5}, 10)), 1.0);
  EXPECT_EQ(rpt_reward(thought, p, context({4, 5}, 11)), 0.0);
}

TEST(Rpt, RunRewardsAreBinaryWhileRlpRewardsAreReal) {
  RunConfig config = small_config();
  const auto corpus = rlp::trainer::build_corpus(config);
  config.arm = rlp::trainer::Arm::Rpt;
  TrainerState rpt = rlp::trainer::make_state(config);
  std::size_t count = 0;
  for (const auto& r : rlp::trainer::train(rpt, corpus, 5)) {
    for (double x : r.rewards) {
      EXPECT_TRUE(x == 0.0 || x == 1.0) << x;
      ++count;
    }
    EXPECT_EQ(r.arm, rlp::trainer::Arm::Rpt);
  }
  EXPECT_EQ(count, 5u * 4u * 4u);

  config.arm = rlp::trainer::Arm::Rlp;
  TrainerState rlp_state = rlp::trainer::make_state(config);
  std::size_t fractional = 0;
  for (const auto& r : rlp::trainer::train(rlp_state, corpus, 5)) {
    for (double x : r.rewards) fractional += (x != std::round(x)) ? 1 : 0;
  }
  EXPECT_GT(fractional, 0u);
}

TEST(Entropy, UniformLogitsGiveLogV) {
  EXPECT_EQ(entropy_from_logits(rlp::numerics::RowVector::Constant(32, 1.5)), std::log(32.0));
}

TEST(EntropyFilter, UniformTeacherPassesAtLogV) {
  ParameterSet p = rlp::model::init_parameters(small_config(32).model, 3);
  zero_head(p);
  rlp::reward::EmaTeacher teacher;
  teacher.update(p);
  EXPECT_TRUE(entropy_filter(context({4, 5, 6}, 7), teacher, std::log(32.0)));
  EXPECT_FALSE(entropy_filter(context({4, 5, 6}, 7), teacher, std::log(32.0) + 1e-9));
}

TEST(EntropyFilter, DeterministicTeacherFailsAnyPositiveThreshold) {
  ParameterSet p = rlp::model::init_parameters(small_config(32).model, 3);
  zero_head(p);
  p.at("head.b").values()(0, 9) = 1e3;
  rlp::reward::EmaTeacher teacher;
  teacher.update(p);
  EXPECT_LT(next_token_entropy(p, std::vector<TokenId>{4, 5}), 1e-300);
  EXPECT_FALSE(entropy_filter(context({4, 5}, 9), teacher, 1e-12));
  EXPECT_TRUE(entropy_filter(context({4, 5}, 9), teacher, 0.0));
}

TEST(EntropyFilter, UninitializedTeacherRejected) {
  rlp::reward::EmaTeacher teacher;
  EXPECT_THROW(entropy_filter(context({4}, 5), teacher, 0.5), rlp::reward::TeacherStateError);
}

TEST(EntropyFilter, RptStepDropsLowEntropyContexts) {
  RunConfig config = small_config();
  config.arm = rlp::trainer::Arm::Rpt;
  config.entropy_threshold = 100.0;  // above ln V, so nothing passes
  TrainerState state = rlp::trainer::make_state(config);
  const auto batch = rlp::trainer::batch_for_step(config, rlp::trainer::build_corpus(config), 0);
  const ParameterSet before = state.params;
  const auto report = rlp::trainer::policy_step(state, batch, rlp::trainer::RewardKind::Binary);
  EXPECT_EQ(report.filtered, batch.size());
  EXPECT_EQ(report.contexts, 0u);
  EXPECT_TRUE(state.params.same_values(before));
  EXPECT_EQ(state.ledger.rollout_tokens(), 0u);
}

}  // namespace
