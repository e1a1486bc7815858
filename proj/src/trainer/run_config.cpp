#include "rlp/trainer/run_config.hpp"

#include "rlp/corpus/demonstration.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace rlp::trainer {

namespace pt = boost::property_tree;

Arm parse_arm(std::string_view name) {
  if (name == "rlp") return Arm::Rlp;
  if (name == "cpt") return Arm::Cpt;
  if (name == "rpt") return Arm::Rpt;
  throw RunConfigError("unknown arm '" + std::string(name) + "' (expected rlp, cpt or rpt)");
}

std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::Rlp: return "rlp";
    case Arm::Cpt: return "cpt";
    case Arm::Rpt: return "rpt";
  }
  return "?";
}

void RunConfig::validate() const {
  try {
    model.validate();
    clip.validate();
  } catch (const std::invalid_argument& e) {
    throw RunConfigError(e.what());
  }
  if (rollouts < 2) throw RunConfigError("rollouts must be at least 2 (group baseline undefined), got " + std::to_string(rollouts));
  if (steps < 1) throw RunConfigError("steps must be at least 1");
  if (batch_size < 1) throw RunConfigError("batch_size must be at least 1");
  if (!(optimizer.learning_rate > 0.0)) throw RunConfigError("learning_rate must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw RunConfigError("tau must lie in (0, 1)");
  if (!(temperature > 0.0)) throw RunConfigError("training temperature must be positive");
  if (!(entropy_threshold >= 0.0)) throw RunConfigError("entropy_threshold must be non-negative");
  if (corpus_size < 1) throw RunConfigError("corpus_size must be at least 1");
  if (threads < 0) throw RunConfigError("threads must be non-negative");
  if (base.steps < 0) throw RunConfigError("base.steps must be non-negative");
  if (base.batch_size < 1) throw RunConfigError("base.batch_size must be at least 1");
  if (!(base.learning_rate > 0.0)) throw RunConfigError("base.learning_rate must be positive");
  if (!(base.demo_fraction >= 0.0 && base.demo_fraction <= 1.0)) throw RunConfigError("base.demo_fraction must lie in [0, 1]");
  if (checkpoint_every < 0) throw RunConfigError("checkpoint_every must be non-negative");
}

namespace {

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw RunConfigError("bad value '" + text + "' for " + key);
  return v;
}

std::string render(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw RunConfigError("bad boolean '" + text + "' for " + key);
}

#define RLP_INT(path, member)                                                                    \
  {path, Field{[](RunConfig& c, const std::string& v) { c.member = parse_number<int>(path, v); }, \
               [](const RunConfig& c) { return std::to_string(c.member); }}}
#define RLP_U64(path, member)                                                                              \
  {path, Field{[](RunConfig& c, const std::string& v) { c.member = parse_number<std::uint64_t>(path, v); }, \
               [](const RunConfig& c) { return std::to_string(c.member); }}}
#define RLP_DBL(path, member)                                                                       \
  {path, Field{[](RunConfig& c, const std::string& v) { c.member = parse_number<double>(path, v); }, \
               [](const RunConfig& c) { return render(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      RLP_INT("model.vocab_size", model.vocab_size),
      RLP_INT("model.context_window", model.context_window),
      RLP_INT("model.layers", model.layers),
      RLP_INT("model.width", model.width),
      RLP_INT("model.heads", model.heads),
      RLP_INT("model.thought_budget", model.thought_budget),
      RLP_INT("model.ff_width", model.ff_width),
      RLP_INT("rl.rollouts", rollouts),
      RLP_DBL("rl.eps_low", clip.eps_low),
      RLP_DBL("rl.eps_high", clip.eps_high),
      RLP_INT("rl.inner_epochs", clip.inner_epochs),
      RLP_DBL("rl.kl_beta", clip.kl_beta),
      RLP_DBL("rl.tau", tau),
      RLP_DBL("rl.temperature", temperature),
      {"optimizer.kind",
       Field{[](RunConfig& c, const std::string& v) {
               if (v == "adamw") c.optimizer.kind = OptimizerKind::AdamW;
               else if (v == "sgd") c.optimizer.kind = OptimizerKind::Sgd;
               else throw RunConfigError("unknown optimizer '" + v + "' (expected adamw or sgd)");
             },
             [](const RunConfig& c) { return std::string(c.optimizer.kind == OptimizerKind::AdamW ? "adamw" : "sgd"); }}},
      RLP_DBL("optimizer.learning_rate", optimizer.learning_rate),
      RLP_DBL("optimizer.beta1", optimizer.beta1),
      RLP_DBL("optimizer.beta2", optimizer.beta2),
      RLP_DBL("optimizer.epsilon", optimizer.epsilon),
      RLP_DBL("optimizer.weight_decay", optimizer.weight_decay),
      {"run.arm", Field{[](RunConfig& c, const std::string& v) { c.arm = parse_arm(v); },
                        [](const RunConfig& c) { return std::string(arm_name(c.arm)); }}},
      RLP_INT("run.batch_size", batch_size),
      RLP_INT("run.steps", steps),
      RLP_U64("run.model_seed", model_seed),
      RLP_U64("run.sampling_seed", sampling_seed),
      RLP_U64("run.data_seed", data_seed),
      RLP_U64("run.token_budget", token_budget),
      RLP_INT("run.threads", threads),
      {"data.task", Field{[](RunConfig& c, const std::string& v) {
                            corpus::parse_task(v);
                            c.task = v;
                          },
                          [](const RunConfig& c) { return c.task; }}},
      {"data.corpus_size",
       Field{[](RunConfig& c, const std::string& v) { c.corpus_size = parse_number<std::size_t>("data.corpus_size", v); },
             [](const RunConfig& c) { return std::to_string(c.corpus_size); }}},
      RLP_INT("data.keys", synthetic.keys),
      RLP_INT("data.copy_length", synthetic.copy_length),
      RLP_INT("data.noise_length", synthetic.noise_length),
      {"data.corpus_path", Field{[](RunConfig& c, const std::string& v) { c.corpus_path = v; },
                                 [](const RunConfig& c) { return c.corpus_path; }}},
      {"data.position_policy",
       Field{[](RunConfig& c, const std::string& v) { c.position_policy = corpus::parse_position_policy(v); },
             [](const RunConfig& c) { return std::string(corpus::position_policy_name(c.position_policy)); }}},
      RLP_DBL("baseline.entropy_threshold", entropy_threshold),
      RLP_INT("base.steps", base.steps),
      RLP_INT("base.batch_size", base.batch_size),
      RLP_DBL("base.learning_rate", base.learning_rate),
      RLP_DBL("base.demo_fraction", base.demo_fraction),
      {"base.trace", Field{[](RunConfig& c, const std::string& v) {
                             corpus::parse_trace_kind(v);
                             c.base.trace = v;
                           },
                           [](const RunConfig& c) { return c.base.trace; }}},
      {"base.imitate", Field{[](RunConfig& c, const std::string& v) {
                               if (v != "none" && v != "close" && v != "full") {
                                 throw RunConfigError("base.imitate must be none, close or full, got '" + v + "'");
                               }
                               c.base.imitate = v;
                             },
                             [](const RunConfig& c) { return c.base.imitate; }}},
      {"metrics.record_wall_time",
       Field{[](RunConfig& c, const std::string& v) { c.record_wall_time = parse_bool("metrics.record_wall_time", v); },
             [](const RunConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); }}},
      {"checkpoint.init_checkpoint", Field{[](RunConfig& c, const std::string& v) { c.init_checkpoint = v; },
                                           [](const RunConfig& c) { return c.init_checkpoint; }}},
      RLP_INT("checkpoint.checkpoint_every", checkpoint_every),
  };
  return table;
}

#undef RLP_INT
#undef RLP_U64
#undef RLP_DBL

}  // namespace

RunConfig parse_run_config(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw RunConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig config;
  const auto& table = fields();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw RunConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      auto it = table.find(path);
      if (it == table.end()) throw RunConfigError("unknown config key [" + section + "] " + key);
      try {
        it->second.set(config, value.data());
      } catch (const RunConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw RunConfigError(path + ": " + e.what());
      }
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RunConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& [path, field] : fields()) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << "\n";
      out << "[" << section << "]\n";
      current = section;
    }
    const std::string value = field.get(config);
    if (!value.empty()) out << path.substr(dot + 1) << " = " << value << "\n";
  }
  return out.str();
}

}  // namespace rlp::trainer
