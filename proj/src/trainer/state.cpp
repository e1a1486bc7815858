#include "rlp/trainer/state.hpp"

#include "rlp/model/serialization.hpp"
#include "rlp/trainer/base_model.hpp"

namespace rlp::trainer {

TrainerState::TrainerState(const RunConfig& c) : config(c), params(c.model), teacher(c.tau), optimizer(c.optimizer) {}

const corpus::Vocabulary& desk_vocabulary() {
  static const corpus::Vocabulary vocab = corpus::Vocabulary::desk();
  return vocab;
}

std::vector<corpus::Document> build_corpus(const RunConfig& config) {
  const auto& vocab = desk_vocabulary();
  if (!config.corpus_path.empty()) return corpus::load_documents(config.corpus_path, vocab);
  return corpus::make_synthetic_corpus(vocab, corpus::parse_task(config.task), config.corpus_size, config.data_seed,
                                       config.synthetic);
}

TrainerState make_state(const RunConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(config.model.vocab_size) != desk_vocabulary().size()) {
    throw RunConfigError("model.vocab_size must be " + std::to_string(desk_vocabulary().size()) +
                         " for the desk vocabulary");
  }
  TrainerState state(config);
  if (config.init_checkpoint.empty() && config.base.steps > 0) {
    state.params = cached_base(config, build_corpus(config));
  } else if (config.init_checkpoint.empty()) {
    state.params = model::init_parameters(config.model, config.model_seed);
  } else {
    ParameterSet loaded = model::load_parameters(config.init_checkpoint);
    // The thought budget does not shape any tensor, so a base model may be
    // reused under any completion length.
    model::ModelConfig expected = config.model;
    model::ModelConfig found = loaded.config();
    expected.thought_budget = found.thought_budget = 0;
    expected.ff_width = expected.feed_forward_width();
    found.ff_width = found.feed_forward_width();
    if (!(expected == found)) {
      throw model::CheckpointError(model::CheckpointError::Kind::ConfigMismatch,
                                   "init checkpoint does not match [model]: " + model::config_diff(expected, found));
    }
    state.params = ParameterSet(config.model);
    state.params.tensors() = std::move(loaded.tensors());
  }
  if (config.clip.kl_beta > 0.0) state.reference = std::make_shared<const ParameterSet>(state.params);
  return state;
}

}  // namespace rlp::trainer
