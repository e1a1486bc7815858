#include "rlp/model/config.hpp"

#include "rlp/corpus/vocabulary.hpp"

#include <sstream>

namespace rlp::model {

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid model config: ") + what);
  };
  require(vocab_size > corpus::kReservedCount, "vocab_size must exceed the reserved control tokens");
  require(layers >= 1, "layers must be at least 1");
  require(width >= 1, "width must be at least 1");
  require(heads >= 1, "heads must be at least 1");
  require(width % heads == 0, "width must be divisible by heads");
  require(thought_budget >= 1, "thought_budget must be at least 1");
  require(ff_width >= 0, "ff_width must be non-negative");
  require(context_window >= thought_budget + 3, "context_window must hold a prefix, a full thought and its delimiters");
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  os << "V=" << vocab_size << " ctx=" << context_window << " layers=" << layers << " width=" << width
     << " heads=" << heads << " L_max=" << thought_budget << " ff=" << feed_forward_width();
  return os.str();
}

std::string config_diff(const ModelConfig& expected, const ModelConfig& actual) {
  std::ostringstream os;
  auto field = [&](const char* name, int a, int b) {
    if (a != b) os << (os.tellp() > 0 ? "; " : "") << name << ": expected " << a << ", found " << b;
  };
  field("vocab_size", expected.vocab_size, actual.vocab_size);
  field("context_window", expected.context_window, actual.context_window);
  field("layers", expected.layers, actual.layers);
  field("width", expected.width, actual.width);
  field("heads", expected.heads, actual.heads);
  field("thought_budget", expected.thought_budget, actual.thought_budget);
  field("ff_width", expected.feed_forward_width(), actual.feed_forward_width());
  return os.str();
}

}  // namespace rlp::model
