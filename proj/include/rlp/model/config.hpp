#pragma once

#include <stdexcept>
#include <string>

namespace rlp::model {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  int vocab_size = 64;
  int context_window = 512;
  int layers = 4;
  int width = 128;
  int heads = 4;
  int thought_budget = 64;  // L_max
  int ff_width = 0;         // 0 selects 4 * width

  int feed_forward_width() const { return ff_width > 0 ? ff_width : 4 * width; }
  int head_width() const { return width / heads; }

  /// Longest prefix that still leaves room for THINK_OPEN, a full thought,
  /// THINK_CLOSE and the predicted position.
  int max_prefix() const { return context_window - thought_budget - 2; }

  void validate() const;
  std::string describe() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Field-by-field differences, empty when the configs match.
std::string config_diff(const ModelConfig& expected, const ModelConfig& actual);

}  // namespace rlp::model
