#include "rlp/oracle/suite.hpp"

#include "rlp/oracle/propositions.hpp"
#include "rlp/oracle/surrogate_gradient.hpp"
#include "rlp/oracle/world.hpp"
#include "rlp/reward/ema.hpp"
#include "rlp/rlcore/advantage.hpp"
#include "rlp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace rlp::oracle {

namespace {

CheckReport finish(std::string name, std::size_t n, double residual, double tolerance) {
  return CheckReport{std::move(name), n, residual, tolerance, residual < tolerance};
}

WorldOptions options_for(std::uint64_t seed) {
  Rng rng(seed);
  WorldOptions o;
  o.vocab = 2 + static_cast<int>(rng.index(kMaxVocab - 1));
  o.max_thought_len = 1 + static_cast<int>(rng.index(2));
  return o;
}

}  // namespace

CheckReport check_prop1(std::uint64_t seed, std::size_t worlds) {
  double worst = 0.0;
  for (std::size_t i = 0; i < worlds; ++i) {
    const auto s = Rng::derive(seed, 0x9101u, i);
    worst = std::max(worst, verify_prop1(random_world(s, options_for(s))).residual);
  }
  return finish("prop1_identity", worlds, worst, kIdentityTolerance);
}

CheckReport check_prop2_bound(std::uint64_t seed, std::size_t worlds) {
  // The bound holds when every Jensen gap is <= 0; report the worst violation.
  double worst = 0.0;
  for (std::size_t i = 0; i < worlds; ++i) {
    const auto s = Rng::derive(seed, 0x9102u, i);
    worst = std::max(worst, verify_prop2(random_world(s, options_for(s))).max_jensen_gap);
  }
  return finish("prop2_jensen", worlds, worst, kIdentityTolerance);
}

CheckReport check_prop2_tightness(std::uint64_t seed, std::size_t worlds) {
  double worst = 0.0;
  for (std::size_t i = 0; i < worlds; ++i) {
    const auto s = Rng::derive(seed, 0x9103u, i);
    WorldOptions o = options_for(s);
    o.thought_independent = true;
    const auto r = verify_prop2(random_world(s, o));
    worst = std::max({worst, r.tightness_residual, std::abs(r.bound - r.objective)});
  }
  return finish("prop2_tightness", worlds, worst, kIdentityTolerance);
}

CheckReport check_prop1_prop2_agreement(std::uint64_t seed, std::size_t worlds) {
  double worst = 0.0;
  for (std::size_t i = 0; i < worlds; ++i) {
    const auto s = Rng::derive(seed, 0x9104u, i);
    const auto r = verify_prop2(random_world(s, options_for(s)));
    worst = std::max({worst, r.objective_via_prop1 - r.bound, std::abs(r.objective_via_prop1 - r.objective)});
  }
  return finish("prop1_prop2_agreement", worlds, worst, kIdentityTolerance);
}

CheckReport check_token_to_seq(std::uint64_t seed, std::size_t chains, int vocab, int length) {
  double worst = 0.0;
  WorldOptions o;
  o.vocab = vocab;
  for (std::size_t i = 0; i < chains; ++i) {
    worst = std::max(worst, verify_token_to_seq(random_chain(Rng::derive(seed, 0x9105u, i), length, o)).residual);
  }
  return finish("token_to_sequence", chains, worst, kChainTolerance);
}

CheckReport check_chain_single_position(std::uint64_t seed, std::size_t chains) {
  double worst = 0.0;
  WorldOptions o;
  o.vocab = 2;
  for (std::size_t i = 0; i < chains; ++i) {
    const ChainWorld chain = random_chain(Rng::derive(seed, 0x9106u, i), 1, o);
    const CategoricalWorld& w = chain.at({});
    double expected = 0.0;
    for (std::size_t z = 0; z < w.thoughts.size(); ++z) expected += w.policy[z] * verify_prop1(w, z).expected_reward;
    const auto r = verify_token_to_seq(chain);
    worst = std::max({worst, std::abs(r.tokenwise - expected), std::abs(r.sequence - expected)});
  }
  return finish("chain_single_position", chains, worst, 1e-14);
}

namespace {

std::vector<double> random_group(Rng& rng) {
  std::vector<double> r(2 + rng.index(31));
  for (double& x : r) x = 3.0 * rng.normal();
  return r;
}

}  // namespace

CheckReport check_advantage_sum(std::uint64_t seed, std::size_t trials) {
  Rng rng(Rng::derive(seed, 0x9107u));
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto a = rlcore::group_advantages(random_group(rng));
    double sum = 0.0;
    for (double x : a) sum += x;
    worst = std::max(worst, std::abs(sum));
  }
  return finish("advantage_sum", trials, worst, 1e-12);
}

CheckReport check_leave_one_out(std::uint64_t seed, std::size_t trials) {
  Rng rng(Rng::derive(seed, 0x9108u));
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto r = random_group(rng);
    const auto a = rlcore::group_advantages(r);
    for (std::size_t k = 0; k < r.size(); ++k) {
      double others = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (j != k) others += r[j];
      }
      const double loo = r[k] - others / static_cast<double>(r.size() - 1);
      worst = std::max(worst, std::abs(a[k] - loo));
    }
  }
  return finish("leave_one_out", trials, worst, 1e-12);
}

std::pair<CheckReport, CheckReport> check_surrogate_gradient(std::uint64_t seed, std::size_t repetitions) {
  double fd = 0.0, reinforce = 0.0;
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto r = verify_surrogate_gradient(make_surrogate_problem(Rng::derive(seed, 0x9109u, i)));
    fd = std::max(fd, r.finite_difference_error);
    reinforce = std::max(reinforce, r.reinforce_error);
  }
  return {finish("gradient_vs_finite_difference", repetitions, fd, kFiniteDifferenceTolerance),
          finish("gradient_vs_reinforce", repetitions, reinforce, kReinforceTolerance)};
}

CheckReport check_ema_closed_form(std::uint64_t seed, std::size_t steps, double tau) {
  const model::ModelConfig config = tiny_model_config();
  const model::ParameterSet theta = model::init_parameters(config, Rng::derive(seed, 0x910au, 1));
  const model::ParameterSet phi0 = model::init_parameters(config, Rng::derive(seed, 0x910au, 2));
  reward::EmaTeacher teacher(tau);
  teacher.restore(phi0, 0);
  double worst = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    teacher.update(theta);
    const double decay = std::pow(tau, static_cast<double>(k));
    const auto phi = teacher.snapshot();
    for (const auto& [name, t] : phi->tensors()) {
      const auto expected = decay * phi0.values(name).array() + (1.0 - decay) * theta.values(name).array();
      worst = std::max(worst, (t.values().array() - expected).abs().maxCoeff());
    }
  }
  return finish("ema_closed_form", steps, worst, 1e-12);
}

std::vector<CheckReport> run_oracle_suite(std::uint64_t seed) {
  auto [fd, reinforce] = check_surrogate_gradient(seed);
  return {check_prop1(seed),
          check_prop2_bound(seed),
          check_prop2_tightness(seed),
          check_prop1_prop2_agreement(seed),
          check_token_to_seq(seed),
          check_chain_single_position(seed),
          check_advantage_sum(seed),
          check_leave_one_out(seed),
          fd,
          reinforce,
          check_ema_closed_form(seed)};
}

}  // namespace rlp::oracle
