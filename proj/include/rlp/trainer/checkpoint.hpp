#pragma once

#include "rlp/trainer/state.hpp"

#include <filesystem>
#include <string>

namespace rlp::trainer {

/// Parameters, EMA teacher ("EMA0"), optimizer moments ("OPT0") and run
/// progress ("TRN0": step, ledger, config, KL reference) in one file.
std::string encode_state(const TrainerState& state);
TrainerState decode_state(const std::string& bytes);

void save_checkpoint(const TrainerState& state, const std::filesystem::path& path);
TrainerState load_checkpoint(const std::filesystem::path& path);

/// As load_checkpoint, but rejects a file whose model config differs from
/// `expected`, naming each differing dimension.
TrainerState load_checkpoint(const std::filesystem::path& path, const model::ModelConfig& expected);

}  // namespace rlp::trainer
