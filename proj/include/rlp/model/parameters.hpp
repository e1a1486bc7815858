#pragma once

#include "rlp/model/config.hpp"
#include "rlp/numerics/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace rlp::model {

using numerics::Matrix;
using numerics::Tensor;

/// Gradients keyed by parameter name, aligned with a ParameterSet.
using GradientMap = std::map<std::string, Matrix>;

/// The shared network parameters. Tensors are kept in name order so every
/// traversal (initialization, serialization, optimizer updates) is ordered.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(ModelConfig config) : config_(config) {}

  const ModelConfig& config() const { return config_; }
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  void bump_version() { ++version_; }

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const Matrix& values(const std::string& name) const { return at(name).values(); }

  std::size_t parameter_count() const;
  bool finite() const;

  GradientMap zero_gradients() const;

  /// Bit-exact equality of config and every tensor (version ignored).
  bool same_values(const ParameterSet& other) const;

 private:
  ModelConfig config_;
  std::map<std::string, Tensor> tensors_;
  std::uint64_t version_ = 0;
};

/// Name of a per-layer tensor, e.g. layer_name(1, "attn.wq") == "layer1.attn.wq".
std::string layer_name(int layer, const char* suffix);

/// Deterministic initialization. Output-projection bias starts at zero so the
/// initial next-token distribution is close to uniform.
ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed);

void add_into(GradientMap& acc, const GradientMap& delta);
bool all_finite(const GradientMap& grads);

}  // namespace rlp::model
