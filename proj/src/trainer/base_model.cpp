#include "rlp/trainer/base_model.hpp"

#include "rlp/parallel.hpp"
#include "rlp/rng.hpp"
#include "rlp/trainer/optimizer.hpp"
#include "rlp/trainer/state.hpp"

#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace rlp::trainer {

std::vector<baselines::SequenceExample> base_examples(const RunConfig& config, std::span<const corpus::Document> corpus,
                                                      int step) {
  if (corpus.empty()) throw std::invalid_argument("base pretraining needs a non-empty corpus");
  const auto kind = corpus::parse_trace_kind(config.base.trace);
  const auto& vocab = desk_vocabulary();
  const auto window = static_cast<std::size_t>(config.model.context_window);
  Rng rng(Rng::derive(config.data_seed, 0xba5eu, static_cast<std::uint64_t>(step)));
  std::vector<baselines::SequenceExample> out;
  out.reserve(static_cast<std::size_t>(config.base.batch_size));
  while (out.size() < static_cast<std::size_t>(config.base.batch_size)) {
    const corpus::Document& doc = corpus[rng.index(corpus.size())];
    if (doc.tokens.size() < 2) continue;
    baselines::SequenceExample ex;
    const bool demo = !doc.answer_positions.empty() && rng.uniform() < config.base.demo_fraction;
    if (demo) {
      const std::size_t pos = doc.answer_positions[rng.index(doc.answer_positions.size())];
      auto trace = corpus::worked_trace(doc, pos, kind, vocab, rng);
      ex.tokens = corpus::splice_thought(doc, pos, trace);
      // Tokens: OPEN at pos, trace, CLOSE at close, then doc[pos..].
      const std::size_t close = pos + trace.size() + 1;
      const bool full = config.base.imitate == "full";
      const bool train_close = full || config.base.imitate == "close";
      for (std::size_t t = 1; t < ex.tokens.size(); ++t) {
        if (t < pos || t > close || (t == close && train_close) || (t > pos && t < close && full)) {
          ex.targets.push_back(t);
        }
      }
    } else {
      ex.tokens = doc.tokens;
      ex.targets.resize(doc.tokens.size() - 1);
      std::iota(ex.targets.begin(), ex.targets.end(), std::size_t{1});
    }
    if (ex.tokens.size() > window) {
      // Keep the trailing window; the targets shift with it.
      const std::size_t drop = ex.tokens.size() - window;
      ex.tokens.erase(ex.tokens.begin(), ex.tokens.begin() + static_cast<std::ptrdiff_t>(drop));
      std::vector<std::size_t> kept;
      for (std::size_t t : ex.targets) {
        if (t > drop) kept.push_back(t - drop);
      }
      ex.targets = std::move(kept);
    }
    if (!ex.targets.empty()) out.push_back(std::move(ex));
  }
  return out;
}

model::ParameterSet pretrain_base(const RunConfig& config, std::span<const corpus::Document> corpus) {
  model::ParameterSet params = model::init_parameters(config.model, config.model_seed);
  OptimizerConfig opt = config.optimizer;
  opt.learning_rate = config.base.learning_rate;
  Optimizer optimizer(opt);
  const int threads = resolve_threads(config.threads);
  for (int step = 0; step < config.base.steps; ++step) {
    const auto batch = base_examples(config, corpus, step);
    baselines::sequence_ntp_step(params, optimizer, batch, threads);
  }
  return params;
}

model::ParameterSet cached_base(const RunConfig& config, std::span<const corpus::Document> corpus) {
  // Reset every setting the base does not read.
  RunConfig key_config = config;
  key_config.arm = Arm::Rlp;
  key_config.steps = 1;
  key_config.rollouts = 2;
  key_config.clip = {};
  key_config.tau = 0.5;
  key_config.temperature = 1.0;
  key_config.sampling_seed = 0;
  key_config.token_budget = 0;
  key_config.threads = 0;
  key_config.position_policy = corpus::PositionPolicy::Stream;
  key_config.entropy_threshold = 0.0;
  key_config.record_wall_time = false;
  key_config.checkpoint_every = 0;
  key_config.model.thought_budget = 1;
  std::ostringstream key;
  key << to_ini(key_config) << "#docs=" << corpus.size();
  for (const auto& d : corpus) key << ',' << d.tokens.size();

  static std::mutex mutex;
  static std::map<std::string, model::ParameterSet> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key.str()); it != cache.end()) return it->second;
  }
  model::ParameterSet params = pretrain_base(config, corpus);
  std::lock_guard lock(mutex);
  return cache.emplace(key.str(), std::move(params)).first->second;
}

}  // namespace rlp::trainer
