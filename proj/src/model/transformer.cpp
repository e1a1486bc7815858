#include "rlp/model/transformer.hpp"

#include "rlp/model/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlp::model {

using numerics::Index;

BoundParameters::BoundParameters(Graph& graph, const ParameterSet& params) : params_(&params) {
  for (const auto& [name, t] : params.tensors()) vars_.emplace(name, graph.parameter(t.values()));
}

Var BoundParameters::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("no bound parameter named " + name);
  return it->second;
}

GradientMap BoundParameters::gradients(const Graph& graph) const {
  GradientMap g;
  for (const auto& [name, v] : vars_) g.emplace(name, graph.gradient(v));
  return g;
}

void BoundParameters::accumulate_gradients(const Graph& graph, GradientMap& acc) const {
  for (const auto& [name, v] : vars_) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, graph.gradient(v));
    } else {
      it->second += graph.gradient(v);
    }
  }
}

Var forward_hidden(Graph& graph, const BoundParameters& p, std::span<const TokenId> tokens) {
  const ModelConfig& cfg = p.parameters().config();
  if (tokens.empty()) throw std::invalid_argument("forward_logits: empty token sequence");
  if (tokens.size() > static_cast<std::size_t>(cfg.context_window)) {
    throw ContextOverflow("sequence of " + std::to_string(tokens.size()) + " tokens exceeds context window " +
                          std::to_string(cfg.context_window));
  }
  std::vector<Index> ids(tokens.begin(), tokens.end());
  for (Index id : ids) {
    if (id < 0 || id >= cfg.vocab_size) throw UnknownToken("token id " + std::to_string(id) + " outside vocabulary");
  }
  std::vector<Index> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<Index>(i);

  Var x = graph.add(graph.embedding(p["tok_emb"], ids), graph.embedding(p["pos_emb"], positions));
  const int dh = cfg.head_width();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < cfg.layers; ++l) {
    auto w = [&](const char* suffix) { return p[layer_name(l, suffix)]; };
    Var h = graph.layer_norm(x, w("ln1.gain"), w("ln1.bias"));
    Var q = graph.add_row_bias(graph.matmul(h, w("attn.wq")), w("attn.bq"));
    Var k = graph.add_row_bias(graph.matmul(h, w("attn.wk")), w("attn.bk"));
    Var v = graph.add_row_bias(graph.matmul(h, w("attn.wv")), w("attn.bv"));
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(cfg.heads));
    for (int hd = 0; hd < cfg.heads; ++hd) {
      Var qh = graph.slice_cols(q, hd * dh, dh);
      Var kh = graph.slice_cols(k, hd * dh, dh);
      Var vh = graph.slice_cols(v, hd * dh, dh);
      Var att = graph.causal_softmax(graph.scale(graph.matmul_transposed(qh, kh), inv_sqrt));
      heads.push_back(graph.matmul(att, vh));
    }
    Var o = heads.size() == 1 ? heads[0] : graph.concat_cols(heads);
    x = graph.add(x, graph.add_row_bias(graph.matmul(o, w("attn.wo")), w("attn.bo")));
    Var h2 = graph.layer_norm(x, w("ln2.gain"), w("ln2.bias"));
    Var ff = graph.gelu(graph.add_row_bias(graph.matmul(h2, w("mlp.w1")), w("mlp.b1")));
    x = graph.add(x, graph.add_row_bias(graph.matmul(ff, w("mlp.w2")), w("mlp.b2")));
  }
  return graph.layer_norm(x, p["final_ln.gain"], p["final_ln.bias"]);
}

Var project_logits(Graph& graph, const BoundParameters& p, Var hidden) {
  return graph.add_row_bias(graph.matmul(hidden, p["head.w"]), p["head.b"]);
}

Var forward_logits(Graph& graph, const BoundParameters& p, std::span<const TokenId> tokens) {
  return project_logits(graph, p, forward_hidden(graph, p, tokens));
}

numerics::RowVector thought_mask(int vocab_size, int step) {
  numerics::RowVector mask = numerics::RowVector::Zero(vocab_size);
  mask(corpus::kPad) = kMaskedLogit;
  mask(corpus::kBos) = kMaskedLogit;
  mask(corpus::kThinkOpen) = kMaskedLogit;
  if (step == 0) mask(corpus::kThinkClose) = kMaskedLogit;
  return mask;
}

PolicyTerms thought_policy_terms(Graph& graph, const BoundParameters& p, const std::vector<TokenId>& prefix,
                                 const ThoughtSample& thought) {
  if (thought.tokens.empty()) throw std::invalid_argument("thought_policy_terms: empty thought");
  if (!(thought.temperature > 0.0)) throw std::invalid_argument("thought_policy_terms: temperature must be positive");
  const int vocab = p.parameters().config().vocab_size;
  std::vector<TokenId> seq = prefix;
  seq.push_back(corpus::kThinkOpen);
  // The last thought token is never an input; it is only predicted.
  seq.insert(seq.end(), thought.tokens.begin(), thought.tokens.end() - 1);

  Var hidden = forward_hidden(graph, p, seq);
  const auto len = static_cast<Index>(thought.tokens.size());
  std::vector<Index> rows(static_cast<std::size_t>(len));
  numerics::Matrix mask(len, vocab);
  for (Index u = 0; u < len; ++u) {
    rows[static_cast<std::size_t>(u)] = static_cast<Index>(prefix.size()) + u;
    mask.row(u) = thought_mask(vocab, static_cast<int>(u));
  }
  Var logits = project_logits(graph, p, graph.gather_rows(hidden, rows));
  Var z = graph.add(graph.scale(logits, 1.0 / thought.temperature), graph.constant(mask));
  Var logp = graph.log_softmax(z);
  std::vector<Index> pick_rows(static_cast<std::size_t>(len));
  std::vector<Index> pick_cols(static_cast<std::size_t>(len));
  for (Index u = 0; u < len; ++u) {
    pick_rows[static_cast<std::size_t>(u)] = u;
    pick_cols[static_cast<std::size_t>(u)] = thought.tokens[static_cast<std::size_t>(u)];
  }
  return PolicyTerms{logp, graph.pick(logp, pick_rows, pick_cols)};
}

Var next_token_log_prob(Graph& graph, const BoundParameters& p, const std::vector<TokenId>& prefix, TokenId target) {
  if (prefix.empty()) throw std::invalid_argument("next_token_log_prob: empty prefix");
  const int vocab = p.parameters().config().vocab_size;
  if (target < 0 || target >= vocab) throw UnknownToken("target id " + std::to_string(target) + " outside vocabulary");
  Var hidden = forward_hidden(graph, p, prefix);
  const std::vector<Index> last{static_cast<Index>(prefix.size()) - 1};
  Var logp = graph.log_softmax(project_logits(graph, p, graph.gather_rows(hidden, last)));
  const std::vector<Index> r{0};
  const std::vector<Index> c{target};
  return graph.pick(logp, r, c);
}

Var sequence_log_probs(Graph& graph, const BoundParameters& p, std::span<const TokenId> tokens,
                       std::span<const std::size_t> targets) {
  if (targets.empty()) throw std::invalid_argument("sequence_log_probs: no target positions");
  std::size_t last = 0;
  for (std::size_t t : targets) {
    if (t < 1 || t >= tokens.size()) throw std::out_of_range("sequence_log_probs: target position out of range");
    last = std::max(last, t);
  }
  Var hidden = forward_hidden(graph, p, tokens.first(last));
  std::vector<Index> rows;
  std::vector<Index> cols;
  rows.reserve(targets.size());
  for (std::size_t t : targets) rows.push_back(static_cast<Index>(t) - 1);
  Var logp = graph.log_softmax(project_logits(graph, p, graph.gather_rows(hidden, rows)));
  std::vector<Index> pick_rows(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    pick_rows[i] = static_cast<Index>(i);
    const TokenId target = tokens[targets[i]];
    if (target < 0 || target >= p.parameters().config().vocab_size) throw UnknownToken("target outside vocabulary");
    cols.push_back(target);
  }
  return graph.pick(logp, pick_rows, cols);
}

}  // namespace rlp::model
