#include "rlp/trainer/checkpoint.hpp"

#include "rlp/model/serialization.hpp"

namespace rlp::trainer {

using model::BinaryReader;
using model::BinaryWriter;
using model::CheckpointError;

namespace {

void write_parameters(BinaryWriter& w, const ParameterSet& p) {
  w.u64(p.version());
  w.tensors(p.tensors());
}

// A section's parameter map must have the schema of the main one.
ParameterSet read_parameters(BinaryReader& r, const ParameterSet& like, const char* what) {
  ParameterSet p(like.config());
  p.set_version(r.u64());
  p.tensors() = r.tensors();
  bool same = p.tensors().size() == like.tensors().size();
  for (const auto& [name, t] : like.tensors()) {
    auto it = p.tensors().find(name);
    same = same && it != p.tensors().end() && it->second.shape() == t.shape();
  }
  if (!same) throw CheckpointError(CheckpointError::Kind::Malformed, std::string(what) + " tensors do not match the model");
  return p;
}

const model::Section& require(const model::CheckpointImage& image, const char* tag) {
  const model::Section* s = image.find(tag);
  if (!s) throw CheckpointError(CheckpointError::Kind::Malformed, std::string("checkpoint lacks section ") + tag);
  return *s;
}

}  // namespace

std::string encode_state(const TrainerState& state) {
  BinaryWriter ema;
  const bool init = state.teacher.initialized();
  ema.u8(init ? 1 : 0);
  ema.f64(state.teacher.tau());
  ema.u64(state.teacher.updates());
  if (init) write_parameters(ema, *state.teacher.snapshot());

  BinaryWriter opt;
  state.optimizer.write(opt);

  BinaryWriter trn;
  trn.u64(state.step);
  trn.u64(state.ledger.input_tokens());
  trn.u64(state.ledger.rollout_tokens());
  trn.string(to_ini(state.config));
  trn.u8(state.reference ? 1 : 0);
  if (state.reference) write_parameters(trn, *state.reference);

  return model::encode_checkpoint(state.params, {{"EMA0", ema}, {"OPT0", opt}, {"TRN0", trn}});
}

TrainerState decode_state(const std::string& bytes) {
  model::CheckpointImage image = model::decode_checkpoint(bytes);

  BinaryReader trn(require(image, "TRN0").payload);
  const std::uint64_t step = trn.u64();
  const std::uint64_t input = trn.u64();
  const std::uint64_t rollout = trn.u64();
  RunConfig config;
  try {
    config = parse_run_config(trn.string());
  } catch (const RunConfigError& e) {
    throw CheckpointError(CheckpointError::Kind::Malformed, std::string("checkpoint run config: ") + e.what());
  }
  TrainerState state(config);
  state.params = std::move(image.params);
  state.step = step;
  state.ledger.restore(input, rollout);
  if (trn.u8() != 0) state.reference = std::make_shared<const ParameterSet>(read_parameters(trn, state.params, "KL reference"));

  BinaryReader ema(require(image, "EMA0").payload);
  const bool init = ema.u8() != 0;
  const double tau = ema.f64();
  const std::uint64_t updates = ema.u64();
  state.teacher = reward::EmaTeacher(tau);
  if (init) state.teacher.restore(read_parameters(ema, state.params, "EMA teacher"), updates);

  BinaryReader opt(require(image, "OPT0").payload);
  state.optimizer = Optimizer(config.optimizer);
  state.optimizer.read(opt);
  return state;
}

void save_checkpoint(const TrainerState& state, const std::filesystem::path& path) {
  model::write_file(path, encode_state(state));
}

TrainerState load_checkpoint(const std::filesystem::path& path) { return decode_state(model::read_file(path)); }

TrainerState load_checkpoint(const std::filesystem::path& path, const model::ModelConfig& expected) {
  const std::string bytes = model::read_file(path);
  const model::CheckpointImage image = model::decode_checkpoint(bytes);
  const std::string diff = model::config_diff(expected, image.params.config());
  if (!diff.empty()) throw CheckpointError(CheckpointError::Kind::ConfigMismatch, "checkpoint model config differs: " + diff);
  return decode_state(bytes);
}

}  // namespace rlp::trainer
