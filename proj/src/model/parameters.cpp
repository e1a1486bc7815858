#include "rlp/model/parameters.hpp"

#include "rlp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace rlp::model {

Tensor& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ParameterSet::finite() const {
  for (const auto& [_, t] : tensors_) {
    if (!t.finite()) return false;
  }
  return true;
}

GradientMap ParameterSet::zero_gradients() const {
  GradientMap g;
  for (const auto& [name, t] : tensors_) g.emplace(name, Matrix::Zero(t.rows(), t.cols()));
  return g;
}

bool ParameterSet::same_values(const ParameterSet& other) const {
  return config_ == other.config_ && tensors_ == other.tensors_;
}

std::string layer_name(int layer, const char* suffix) { return "layer" + std::to_string(layer) + "." + suffix; }

ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParameterSet params(config);
  Rng rng(Rng::derive(seed, 0x1a17));
  auto& t = params.tensors();
  const auto d = static_cast<numerics::Index>(config.width);
  const auto f = static_cast<numerics::Index>(config.feed_forward_width());
  const auto v = static_cast<numerics::Index>(config.vocab_size);
  const double std_main = 0.02 * std::sqrt(128.0 / static_cast<double>(config.width));
  const double std_resid = std_main / std::sqrt(2.0 * config.layers);

  // Tensors are created first, then filled in map order so the random stream
  // does not depend on insertion order.
  auto normal = [&](const std::string& name, std::vector<numerics::Index> shape, double stddev) {
    t.emplace(name, Tensor(std::move(shape)));
    return std::pair<std::string, double>{name, stddev};
  };
  auto fixed = [&](const std::string& name, std::vector<numerics::Index> shape, double value) {
    Tensor x(std::move(shape));
    x.values().setConstant(value);
    t.emplace(name, std::move(x));
  };

  std::map<std::string, double> random_std;
  random_std.insert(normal("tok_emb", {v, d}, std_main));
  random_std.insert(normal("pos_emb", {static_cast<numerics::Index>(config.context_window), d}, std_main));
  for (int l = 0; l < config.layers; ++l) {
    fixed(layer_name(l, "ln1.gain"), {d}, 1.0);
    fixed(layer_name(l, "ln1.bias"), {d}, 0.0);
    random_std.insert(normal(layer_name(l, "attn.wq"), {d, d}, std_main));
    random_std.insert(normal(layer_name(l, "attn.wk"), {d, d}, std_main));
    random_std.insert(normal(layer_name(l, "attn.wv"), {d, d}, std_main));
    random_std.insert(normal(layer_name(l, "attn.wo"), {d, d}, std_resid));
    fixed(layer_name(l, "attn.bq"), {d}, 0.0);
    fixed(layer_name(l, "attn.bk"), {d}, 0.0);
    fixed(layer_name(l, "attn.bv"), {d}, 0.0);
    fixed(layer_name(l, "attn.bo"), {d}, 0.0);
    fixed(layer_name(l, "ln2.gain"), {d}, 1.0);
    fixed(layer_name(l, "ln2.bias"), {d}, 0.0);
    random_std.insert(normal(layer_name(l, "mlp.w1"), {d, f}, std_main));
    random_std.insert(normal(layer_name(l, "mlp.w2"), {f, d}, std_resid));
    fixed(layer_name(l, "mlp.b1"), {f}, 0.0);
    fixed(layer_name(l, "mlp.b2"), {d}, 0.0);
  }
  fixed("final_ln.gain", {d}, 1.0);
  fixed("final_ln.bias", {d}, 0.0);
  // Unit-variance normalized features times this give logits of spread 0.02,
  // so the initial next-token distribution is close to uniform.
  random_std.insert(normal("head.w", {d, v}, 0.02 / std::sqrt(static_cast<double>(config.width))));
  fixed("head.b", {v}, 0.0);

  for (auto& [name, tensor] : t) {
    auto it = random_std.find(name);
    if (it == random_std.end()) continue;
    Matrix& m = tensor.values();
    for (numerics::Index i = 0; i < m.size(); ++i) m.data()[i] = it->second * rng.normal();
  }
  return params;
}

void add_into(GradientMap& acc, const GradientMap& delta) {
  for (const auto& [name, g] : delta) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, g);
    } else {
      it->second += g;
    }
  }
}

bool all_finite(const GradientMap& grads) {
  for (const auto& [_, g] : grads) {
    if (!g.allFinite()) return false;
  }
  return true;
}

}  // namespace rlp::model
