#include "rlp/model/inference.hpp"

#include "rlp/model/transformer.hpp"
#include "rlp/numerics/graph.hpp"
#include "rlp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace rlp::model {

namespace {

constexpr double kLayerNormEps = 1e-5;

RowVector layer_norm(const RowVector& x, const Matrix& gain, const Matrix& bias) {
  const double d = static_cast<double>(x.size());
  const double mean = x.sum() / d;
  const double var = (x.array() - mean).square().sum() / d;
  const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
  const RowVector xhat = (x.array() - mean) * rstd;
  return xhat.cwiseProduct(gain.row(0)) + bias.row(0);
}

}  // namespace

void check_prefix(const ModelConfig& config, std::span<const TokenId> prefix, std::size_t reserve) {
  if (prefix.empty()) throw std::invalid_argument("prefix must contain at least one token");
  if (prefix.size() + reserve > static_cast<std::size_t>(config.context_window)) {
    throw ContextOverflow("prefix of " + std::to_string(prefix.size()) + " tokens (+" + std::to_string(reserve) +
                          " reserved) exceeds context window " + std::to_string(config.context_window));
  }
  for (TokenId t : prefix) {
    if (t < 0 || t >= config.vocab_size) throw UnknownToken("token id " + std::to_string(t) + " outside vocabulary");
  }
}

InferenceSession::InferenceSession(const ParameterSet& params) : params_(&params) {
  const ModelConfig& cfg = params.config();
  auto ref = [&](const std::string& name) { return &params.values(name); };
  tok_emb_ = ref("tok_emb");
  pos_emb_ = ref("pos_emb");
  final_gain_ = ref("final_ln.gain");
  final_bias_ = ref("final_ln.bias");
  head_w_ = ref("head.w");
  head_b_ = ref("head.b");
  for (int l = 0; l < cfg.layers; ++l) {
    auto w = [&](const char* suffix) { return ref(layer_name(l, suffix)); };
    layers_.push_back(LayerRefs{w("ln1.gain"), w("ln1.bias"), w("attn.wq"), w("attn.bq"), w("attn.wk"), w("attn.bk"),
                                w("attn.wv"), w("attn.bv"), w("attn.wo"), w("attn.bo"), w("ln2.gain"), w("ln2.bias"),
                                w("mlp.w1"), w("mlp.b1"), w("mlp.w2"), w("mlp.b2")});
  }
  keys_.assign(static_cast<std::size_t>(cfg.layers), Matrix(0, cfg.width));
  values_.assign(static_cast<std::size_t>(cfg.layers), Matrix(0, cfg.width));
}

const RowVector& InferenceSession::logits() const {
  if (length_ == 0) throw std::logic_error("InferenceSession: no token consumed yet");
  return logits_;
}

void InferenceSession::feed(std::span<const TokenId> tokens) {
  for (TokenId t : tokens) feed(t);
}

const RowVector& InferenceSession::feed(TokenId token) {
  const ModelConfig& cfg = params_->config();
  if (token < 0 || token >= cfg.vocab_size) throw UnknownToken("token id " + std::to_string(token) + " outside vocabulary");
  if (length_ >= static_cast<std::size_t>(cfg.context_window)) {
    throw ContextOverflow("sequence exceeds context window " + std::to_string(cfg.context_window));
  }
  const auto pos = static_cast<numerics::Index>(length_);
  const int dh = cfg.head_width();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  RowVector x = tok_emb_->row(token) + pos_emb_->row(pos);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerRefs& w = layers_[l];
    Matrix& keys = keys_[l];
    Matrix& vals = values_[l];
    if (keys.rows() <= pos) {
      const numerics::Index cap = std::min<numerics::Index>(std::max<numerics::Index>(16, 2 * keys.rows()), cfg.context_window);
      keys.conservativeResize(cap, Eigen::NoChange);
      vals.conservativeResize(cap, Eigen::NoChange);
    }
    const RowVector h = layer_norm(x, *w.ln1_gain, *w.ln1_bias);
    const RowVector q = h * *w.wq + w.bq->row(0);
    keys.row(pos) = h * *w.wk + w.bk->row(0);
    vals.row(pos) = h * *w.wv + w.bv->row(0);
    RowVector o(cfg.width);
    for (int hd = 0; hd < cfg.heads; ++hd) {
      const auto kh = keys.block(0, hd * dh, pos + 1, dh);
      const auto vh = vals.block(0, hd * dh, pos + 1, dh);
      Eigen::VectorXd scores = (kh * q.segment(hd * dh, dh).transpose()) * inv_sqrt;
      const double m = scores.maxCoeff();
      scores = (scores.array() - m).exp();
      scores /= scores.sum();
      o.segment(hd * dh, dh) = scores.transpose() * vh;
    }
    x += o * *w.wo + w.bo->row(0);
    const RowVector h2 = layer_norm(x, *w.ln2_gain, *w.ln2_bias);
    const RowVector pre = h2 * *w.w1 + w.b1->row(0);
    const RowVector ff = pre.unaryExpr([](double v) { return numerics::detail::gelu(v); });
    x += ff * *w.w2 + w.b2->row(0);
  }
  logits_ = layer_norm(x, *final_gain_, *final_bias_) * *head_w_ + head_b_->row(0);
  ++length_;
  return logits_;
}

RowVector log_softmax(const RowVector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

RowVector policy_log_probs(const RowVector& logits, int step, double temperature) {
  const auto vocab = static_cast<int>(logits.size());
  const RowVector mask = thought_mask(vocab, step);
  if (temperature == 0.0) {
    numerics::Index best = 0;
    (logits + mask).maxCoeff(&best);
    RowVector out = RowVector::Constant(vocab, kMaskedLogit);
    out(best) = 0.0;
    return out;
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be non-negative");
  return log_softmax(logits / temperature + mask);
}

double score_next_token(const ParameterSet& params, std::span<const TokenId> prefix, TokenId target) {
  check_prefix(params.config(), prefix, 0);
  if (target < 0 || target >= params.config().vocab_size) {
    throw UnknownToken("target id " + std::to_string(target) + " outside vocabulary");
  }
  InferenceSession session(params);
  session.feed(prefix);
  return log_softmax(session.logits())(target);
}

RowVector next_token_log_probs(const ParameterSet& params, std::span<const TokenId> prefix) {
  check_prefix(params.config(), prefix, 0);
  InferenceSession session(params);
  session.feed(prefix);
  return log_softmax(session.logits());
}

ThoughtSample sample_thought_from(InferenceSession& session, double temperature, int max_len, std::uint64_t seed) {
  if (max_len < 1) throw std::invalid_argument("sample_thought: max_len must be at least 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("sample_thought: temperature must be non-negative");
  const ModelConfig& cfg = session.parameters().config();
  if (session.length() + static_cast<std::size_t>(max_len) + 2 > static_cast<std::size_t>(cfg.context_window)) {
    throw ContextOverflow("thought of up to " + std::to_string(max_len) + " tokens does not fit the context window");
  }
  Rng rng(seed);
  ThoughtSample thought;
  thought.temperature = temperature;
  session.feed(corpus::kThinkOpen);
  for (int step = 0;; ++step) {
    const RowVector logp = policy_log_probs(session.logits(), step, temperature);
    TokenId token = 0;
    if (temperature == 0.0) {
      numerics::Index best = 0;
      logp.maxCoeff(&best);
      token = static_cast<TokenId>(best);
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      token = -1;
      for (int v = 0; v < logp.size(); ++v) {
        const double p = std::exp(logp(v));
        if (p == 0.0) continue;
        acc += p;
        token = v;
        if (u < acc) break;
      }
    }
    if (token == corpus::kThinkClose) break;
    thought.tokens.push_back(token);
    thought.behavior_log_probs.push_back(logp(token));
    session.feed(token);
    if (static_cast<int>(thought.tokens.size()) == max_len) {
      thought.truncated = true;
      break;
    }
  }
  return thought;
}

ThoughtSample sample_thought(const ParameterSet& params, std::span<const TokenId> prefix, double temperature,
                             int max_len, std::uint64_t seed) {
  check_prefix(params.config(), prefix, static_cast<std::size_t>(std::max(max_len, 0)) + 2);
  InferenceSession session(params);
  session.feed(prefix);
  return sample_thought_from(session, temperature, max_len, seed);
}

std::vector<double> thought_log_probs(const ParameterSet& params, std::span<const TokenId> prefix,
                                      const ThoughtSample& thought) {
  check_prefix(params.config(), prefix, thought.tokens.size() + 2);
  InferenceSession session(params);
  session.feed(prefix);
  session.feed(corpus::kThinkOpen);
  std::vector<double> out;
  out.reserve(thought.tokens.size());
  for (std::size_t u = 0; u < thought.tokens.size(); ++u) {
    const TokenId t = thought.tokens[u];
    out.push_back(policy_log_probs(session.logits(), static_cast<int>(u), thought.temperature)(t));
    if (u + 1 < thought.tokens.size()) session.feed(t);
  }
  return out;
}

TokenId greedy_next_token(const ParameterSet& params, std::span<const TokenId> prefix) {
  check_prefix(params.config(), prefix, 0);
  InferenceSession session(params);
  session.feed(prefix);
  numerics::Index best = 0;
  session.logits().maxCoeff(&best);
  return static_cast<TokenId>(best);
}

std::vector<TokenId> reasoned_prefix(const std::vector<TokenId>& prefix, const std::vector<TokenId>& thought) {
  std::vector<TokenId> out;
  out.reserve(prefix.size() + thought.size() + 2);
  out.insert(out.end(), prefix.begin(), prefix.end());
  out.push_back(corpus::kThinkOpen);
  out.insert(out.end(), thought.begin(), thought.end());
  out.push_back(corpus::kThinkClose);
  return out;
}

}  // namespace rlp::model
