#include "rlp/model/inference.hpp"
#include "rlp/trainer/base_model.hpp"
#include "rlp/trainer/checkpoint.hpp"
#include "rlp/trainer/optimizer.hpp"
#include "rlp/trainer/policy_step.hpp"
#include "rlp/trainer/run.hpp"
#include "rlp/trainer/run_config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

namespace {

using namespace rlp::trainer;
using rlp::model::GradientMap;
using rlp::model::ParameterSet;

RunConfig tiny_config() {
  RunConfig c;
  c.model.vocab_size = 64;
  c.model.context_window = 24;
  c.model.layers = 1;
  c.model.width = 8;
  c.model.heads = 2;
  c.model.thought_budget = 4;
  c.rollouts = 3;
  c.batch_size = 2;
  c.steps = 4;
  c.corpus_size = 16;
  c.synthetic.keys = 2;
  c.position_policy = rlp::corpus::PositionPolicy::AnswerPositions;
  c.record_wall_time = false;
  c.validate();
  return c;
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

void expect_same_report(const StepReport& a, const StepReport& b) {
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.mean_reward, b.mean_reward);
  EXPECT_EQ(a.min_reward, b.min_reward);
  EXPECT_EQ(a.max_reward, b.max_reward);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.mean_thought_len, b.mean_thought_len);
  EXPECT_EQ(a.truncated_frac, b.truncated_frac);
  EXPECT_EQ(a.clip_frac, b.clip_frac);
  EXPECT_EQ(a.input_tokens, b.input_tokens);
  EXPECT_EQ(a.flop_tokens, b.flop_tokens);
  EXPECT_EQ(a.rewards, b.rewards);
}

TEST(RunConfig, IniRoundTrip) {
  RunConfig c = tiny_config();
  c.clip.kl_beta = 1e-3;
  c.temperature = 0.3;
  c.arm = Arm::Rpt;
  c.base.steps = 7;
  c.base.imitate = "full";
  c.optimizer.kind = OptimizerKind::Sgd;
  c.data_seed = 1234567890123ULL;
  const RunConfig back = parse_run_config(to_ini(c));
  EXPECT_EQ(to_ini(back), to_ini(c));
  EXPECT_EQ(back.clip.kl_beta, 1e-3);
  EXPECT_EQ(back.arm, Arm::Rpt);
  EXPECT_EQ(back.base.imitate, "full");
  EXPECT_EQ(back.data_seed, 1234567890123ULL);
}

TEST(RunConfig, ParsesSections) {
  const RunConfig c = parse_run_config(
      "[model]\nthought_budget = 8\n[rl]\nrollouts = 4\nkl_beta = 0.001\n[run]\narm = cpt\nsteps = 9\n"
      "[data]\ntask = copy\nposition_policy = stream\n");
  EXPECT_EQ(c.model.thought_budget, 8);
  EXPECT_EQ(c.rollouts, 4);
  EXPECT_EQ(c.clip.kl_beta, 0.001);
  EXPECT_EQ(c.arm, Arm::Cpt);
  EXPECT_EQ(c.steps, 9);
  EXPECT_EQ(c.task, "copy");
}

TEST(RunConfig, RejectsBadInput) {
  EXPECT_THROW(parse_run_config("[rl]\nrollouts = 1\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[rl]\nrolouts = 4\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[run]\narm = sft\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[run]\nsteps = 0\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[run]\nsteps = ten\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[optimizer]\nlearning_rate = 0\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[data]\ntask = poetry\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[base]\nimitate = some\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[rl]\neps_low = 1.0\n"), RunConfigError);
  EXPECT_THROW(parse_run_config("[model]\nheads = 3\nwidth = 8\n"), RunConfigError);
  try {
    parse_run_config("[rl]\nrollouts = 1\n");
  } catch (const RunConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rollouts"), std::string::npos);
  }
}

TEST(Optimizer, SgdQuadraticMatchesHandIterate) {
  // f(x) = a x^2 / 2, so x_{k+1} = (1 - lr a) x_k.
  const double a = 3.0, lr = 0.05;
  ParameterSet p{rlp::model::ModelConfig{}};
  rlp::model::Tensor t = rlp::model::Tensor::vector(1);
  t.values()(0, 0) = 2.0;
  p.tensors().emplace("x", t);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Sgd;
  cfg.learning_rate = lr;
  Optimizer opt(cfg);
  double expected = 2.0;
  for (int k = 0; k < 50; ++k) {
    GradientMap g{{"x", a * p.at("x").values()}};
    opt.step(p, g);
    expected *= 1.0 - lr * a;
    EXPECT_NEAR(p.at("x").values()(0, 0), expected, 1e-12);
  }
  EXPECT_EQ(p.version(), 50u);
}

TEST(Optimizer, AdamFirstStepIsSignScaled) {
  ParameterSet p{rlp::model::ModelConfig{}};
  rlp::model::Tensor t = rlp::model::Tensor::vector(2);
  t.values() << 1.0, 1.0;
  p.tensors().emplace("x", t);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  rlp::numerics::Matrix g(1, 2);
  g << 4.0, -0.5;
  const ParameterSet q = optimizer_step(p, {{"x", g}}, cfg);
  EXPECT_NEAR(q.at("x").values()(0, 0), 1.0 - 0.01 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(q.at("x").values()(0, 1), 1.0 + 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
}

TEST(Optimizer, ZeroGradientChangesOnlyVersion) {
  const ParameterSet p = rlp::model::init_parameters(tiny_config().model, 3);
  for (OptimizerKind kind : {OptimizerKind::AdamW, OptimizerKind::Sgd}) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    const ParameterSet q = optimizer_step(p, p.zero_gradients(), cfg);
    EXPECT_TRUE(q.same_values(p));
    EXPECT_EQ(q.version(), p.version() + 1);
  }
}

TEST(Optimizer, NonFiniteGradientRejected) {
  ParameterSet p = rlp::model::init_parameters(tiny_config().model, 3);
  const ParameterSet before = p;
  GradientMap g = p.zero_gradients();
  g.begin()->second(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Optimizer opt;
  EXPECT_THROW(opt.step(p, g), rlp::numerics::NonFiniteError);
  EXPECT_TRUE(p.same_values(before));
  EXPECT_EQ(p.version(), before.version());
  EXPECT_EQ(opt.steps(), 0u);
}

TEST(Optimizer, MisalignedGradientRejected) {
  ParameterSet p = rlp::model::init_parameters(tiny_config().model, 3);
  GradientMap g = p.zero_gradients();
  g.erase(g.begin());
  Optimizer opt;
  EXPECT_THROW(opt.step(p, g), rlp::numerics::ShapeError);
}

TEST(PolicyStep, FirstCallInitializesTeacherFromTheta) {
  const RunConfig config = tiny_config();
  TrainerState state = make_state(config);
  const auto corpus = build_corpus(config);
  const ParameterSet theta0 = state.params;
  ASSERT_FALSE(state.teacher.initialized());

  // Scores seen by the first rollout: the teacher is theta0 itself.
  const auto batch = batch_for_step(config, corpus, 0);
  const auto groups = rollout(theta0, &theta0, batch, config, 0, RewardKind::InformationGain);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    EXPECT_EQ(groups[b].s_ema, rlp::model::score_next_token(theta0, batch[b].prefix, batch[b].target));
  }

  train_step(state, corpus);
  ASSERT_TRUE(state.teacher.initialized());
  EXPECT_EQ(state.teacher.updates(), 1u);
  const auto phi = state.teacher.snapshot();
  for (const auto& [name, t] : phi->tensors()) {
    const auto expected = (config.tau * theta0.values(name) + (1.0 - config.tau) * state.params.values(name)).eval();
    EXPECT_EQ((t.values() - expected).cwiseAbs().maxCoeff(), 0.0) << name;
  }
}

TEST(PolicyStep, EmaVersionFollowsOptimizerStep) {
  RunConfig config = tiny_config();
  config.clip.inner_epochs = 2;
  TrainerState state = make_state(config);
  const auto corpus = build_corpus(config);
  for (int k = 1; k <= 3; ++k) {
    train_step(state, corpus);
    EXPECT_EQ(state.params.version(), static_cast<std::uint64_t>(2 * k));
    EXPECT_EQ(state.teacher.snapshot()->version(), state.params.version());
    EXPECT_EQ(state.teacher.updates(), static_cast<std::uint64_t>(k));
    EXPECT_EQ(state.optimizer.steps(), static_cast<std::uint64_t>(2 * k));
  }
}

TEST(PolicyStep, EqualRewardsGiveZeroUpdate) {
  // With a zero output projection the next-token distribution ignores the
  // thought, so every rollout of a group earns the same reward.
  RunConfig config = tiny_config();
  config.rollouts = 2;
  TrainerState state = make_state(config);
  state.params.at("head.w").values().setZero();
  const ParameterSet before = state.params;
  const auto report = train_step(state, build_corpus(config));
  for (double r : report.rewards) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(report.mean_abs_advantage, 0.0);
  EXPECT_TRUE(state.params.same_values(before));
  EXPECT_EQ(state.params.version(), before.version() + 1);
}

TEST(PolicyStep, ReportInvariants) {
  const RunConfig config = tiny_config();
  TrainerState state = make_state(config);
  const auto corpus = build_corpus(config);
  for (int k = 0; k < 3; ++k) {
    const auto r = train_step(state, corpus);
    EXPECT_EQ(r.rewards.size(), static_cast<std::size_t>(config.rollouts * config.batch_size));
    EXPECT_NEAR(r.mean_advantage, 0.0, 1e-9);
    EXPECT_LE(r.min_reward, r.mean_reward);
    EXPECT_GE(r.max_reward, r.mean_reward);
    EXPECT_GE(r.mean_thought_len, 1.0);
    EXPECT_LE(r.mean_thought_len, config.model.thought_budget);
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_GE(r.clip_frac, 0.0);
    EXPECT_LE(r.clip_frac, 1.0);
  }
}

TEST(PolicyStep, FailedStepLeavesStateUntouched) {
  const RunConfig config = tiny_config();
  TrainerState state = make_state(config);
  rlp::model::PositionContext ctx;
  ctx.prefix.assign(static_cast<std::size_t>(config.model.context_window), 10);
  ctx.target = 11;
  const ParameterSet before = state.params;
  EXPECT_THROW(rlp_step(state, {ctx}), rlp::model::ContextOverflow);
  EXPECT_TRUE(state.params.same_values(before));
  EXPECT_FALSE(state.teacher.initialized());
  EXPECT_EQ(state.step, 0u);
  EXPECT_EQ(state.ledger.input_tokens(), 0u);
}

TEST(SurrogateGradient, NonFiniteLossNamesGroup) {
  const RunConfig config = tiny_config();
  const ParameterSet params = rlp::model::init_parameters(config.model, 4);
  const auto batch = batch_for_step(config, build_corpus(config), 0);
  auto groups = rollout(params, &params, batch, config, 0, RewardKind::InformationGain);
  groups[1].group.advantages[0] = std::numeric_limits<double>::quiet_NaN();
  GradientMap grads;
  try {
    surrogate_gradient(params, nullptr, batch, groups, config.clip, 1, grads, nullptr, nullptr);
    FAIL() << "expected NonFiniteLoss";
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.group(), 1u);
  }
}

// The scored target only enters through detached rewards: with the groups
// held fixed, changing every target leaves the gradient bit-identical, and
// zeroing the advantages zeroes it.
TEST(SurrogateGradient, FlowsOnlyThroughThoughtTokens) {
  const RunConfig config = tiny_config();
  const ParameterSet params = rlp::model::init_parameters(config.model, 6);
  auto batch = batch_for_step(config, build_corpus(config), 0);
  auto groups = rollout(params, &params, batch, config, 0, RewardKind::InformationGain);
  for (auto& g : groups) {
    for (std::size_t i = 0; i < g.group.size(); ++i) g.group.advantages[i] = i % 2 ? 0.5 : -0.5;
  }
  GradientMap a, b, z;
  surrogate_gradient(params, nullptr, batch, groups, config.clip, 1, a, nullptr, nullptr);
  for (auto& ctx : batch) ctx.target = ctx.target == 20 ? 21 : 20;
  surrogate_gradient(params, nullptr, batch, groups, config.clip, 1, b, nullptr, nullptr);
  double norm = 0.0;
  for (const auto& [name, g] : a) {
    EXPECT_EQ((g - b.at(name)).cwiseAbs().maxCoeff(), 0.0) << name;
    norm += g.squaredNorm();
  }
  EXPECT_GT(norm, 0.0);
  for (auto& g : groups) std::fill(g.group.advantages.begin(), g.group.advantages.end(), 0.0);
  surrogate_gradient(params, nullptr, batch, groups, config.clip, 1, z, nullptr, nullptr);
  for (const auto& [name, g] : z) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0) << name;
}

TEST(SurrogateGradient, ThreadCountDoesNotChangeResult) {
  const RunConfig config = tiny_config();
  const ParameterSet params = rlp::model::init_parameters(config.model, 6);
  const auto batch = batch_for_step(config, build_corpus(config), 0);
  const auto groups = rollout(params, &params, batch, config, 0, RewardKind::InformationGain);
  GradientMap one, four;
  const double l1 = surrogate_gradient(params, nullptr, batch, groups, config.clip, 1, one, nullptr, nullptr);
  const double l4 = surrogate_gradient(params, nullptr, batch, groups, config.clip, 4, four, nullptr, nullptr);
  EXPECT_EQ(l1, l4);
  for (const auto& [name, g] : one) EXPECT_EQ((g - four.at(name)).cwiseAbs().maxCoeff(), 0.0) << name;
}

TEST(Training, BitIdenticalUnderFixedSeeds) {
  const RunConfig config = tiny_config();
  const auto corpus = build_corpus(config);
  TrainerState a = make_state(config);
  TrainerState b = make_state(config);
  const auto ra = train(a, corpus, 4);
  const auto rb = train(b, corpus, 4);
  ASSERT_EQ(ra.size(), 4u);
  for (std::size_t i = 0; i < ra.size(); ++i) expect_same_report(ra[i], rb[i]);
  EXPECT_TRUE(a.params.same_values(b.params));
  EXPECT_TRUE(a.teacher.snapshot()->same_values(*b.teacher.snapshot()));
}

TEST(Training, ResumeFromCheckpointIsBitIdentical) {
  for (Arm arm : {Arm::Rlp, Arm::Cpt}) {
    RunConfig config = tiny_config();
    config.arm = arm;
    const auto corpus = build_corpus(config);
    TrainerState whole = make_state(config);
    const auto full = train(whole, corpus, 4);

    TrainerState first = make_state(config);
    train(first, corpus, 2);
    const auto path = temp_path("rlp_trainer_resume.ckpt");
    save_checkpoint(first, path);
    TrainerState resumed = load_checkpoint(path, config.model);
    std::filesystem::remove(path);
    EXPECT_EQ(resumed.step, 2u);
    const auto rest = train(resumed, corpus, 4);
    ASSERT_EQ(rest.size(), 2u);
    expect_same_report(rest[0], full[2]);
    expect_same_report(rest[1], full[3]);
    EXPECT_TRUE(resumed.params.same_values(whole.params));
    EXPECT_EQ(resumed.params.version(), whole.params.version());
    EXPECT_EQ(resumed.ledger.flop_tokens(), whole.ledger.flop_tokens());
  }
}

TEST(Training, CheckpointFromOtherConfigRejectedWithDiff) {
  const RunConfig config = tiny_config();
  TrainerState state = make_state(config);
  const auto path = temp_path("rlp_trainer_mismatch.ckpt");
  save_checkpoint(state, path);
  auto other = config.model;
  other.width = 16;
  try {
    load_checkpoint(path, other);
    FAIL() << "expected CheckpointError";
  } catch (const rlp::model::CheckpointError& e) {
    EXPECT_EQ(e.kind(), rlp::model::CheckpointError::Kind::ConfigMismatch);
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Training, CorruptedCheckpointRejected) {
  TrainerState state = make_state(tiny_config());
  std::string bytes = encode_state(state);
  bytes[0] = 'X';
  try {
    decode_state(bytes);
    FAIL() << "expected CheckpointError";
  } catch (const rlp::model::CheckpointError& e) {
    EXPECT_EQ(e.kind(), rlp::model::CheckpointError::Kind::BadMagic);
  }
}

TEST(Training, TokenBudgetStopsRun) {
  RunConfig config = tiny_config();
  const auto corpus = build_corpus(config);
  TrainerState probe = make_state(config);
  train(probe, corpus, 1);
  config.token_budget = probe.ledger.input_tokens() + 1;
  TrainerState state = make_state(config);
  EXPECT_EQ(train(state, corpus, 10).size(), 2u);
}

TEST(BaseModel, DemoTargetsFollowImitationMode) {
  RunConfig config = tiny_config();
  config.base.demo_fraction = 1.0;
  config.base.batch_size = 8;
  config.model.context_window = 64;
  const auto corpus = build_corpus(config);
  for (const std::string mode : {"none", "close", "full"}) {
    config.base.imitate = mode;
    for (const auto& ex : base_examples(config, corpus, 0)) {
      std::size_t open = 0, close = 0;
      for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
        if (ex.tokens[t] == rlp::corpus::kThinkOpen) open = t;
        if (ex.tokens[t] == rlp::corpus::kThinkClose) close = t;
      }
      ASSERT_GT(close, open);
      for (std::size_t t : ex.targets) {
        EXPECT_NE(t, open) << mode;
        if (t > open && t < close) {
          EXPECT_EQ(mode, "full");
        }
        if (t == close) {
          EXPECT_NE(mode, "none");
        }
      }
      // The answer after THINK_CLOSE is always trained.
      EXPECT_EQ(ex.targets.back(), ex.tokens.size() - 1);
    }
  }
}

TEST(BaseModel, PlainExamplesTrainEveryPosition) {
  RunConfig config = tiny_config();
  config.base.demo_fraction = 0.0;
  for (const auto& ex : base_examples(config, build_corpus(config), 3)) {
    ASSERT_EQ(ex.targets.size(), ex.tokens.size() - 1);
    for (std::size_t i = 0; i < ex.targets.size(); ++i) EXPECT_EQ(ex.targets[i], i + 1);
  }
}

TEST(BaseModel, WarmStartUsedByMakeState) {
  RunConfig config = tiny_config();
  config.base.steps = 3;
  const auto corpus = build_corpus(config);
  const ParameterSet base = pretrain_base(config, corpus);
  EXPECT_FALSE(base.same_values(rlp::model::init_parameters(config.model, config.model_seed)));
  EXPECT_TRUE(make_state(config).params.same_values(base));
  // The cache key ignores settings the base never reads.
  config.clip.kl_beta = 1e-3;
  config.rollouts = 5;
  EXPECT_TRUE(cached_base(config, corpus).same_values(base));
}

}  // namespace
