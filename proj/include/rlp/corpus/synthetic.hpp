#pragma once

#include "rlp/corpus/vocabulary.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::corpus {

struct Document {
  std::vector<TokenId> tokens;
  std::string source;
  // Positions whose token is determined by earlier context; empty for
  // documents read from text files.
  std::vector<std::size_t> answer_positions;
};

enum class Task { Lookup, Copy, UniformNoise };

Task parse_task(std::string_view name);
std::string_view task_name(Task task);

struct SyntheticOptions {
  int keys = 4;          // lookup: table entries per document
  int copy_length = 6;   // copy: length of the repeated half
  int noise_length = 12; // uniform-noise: tokens per document
};

inline constexpr std::string_view kKeyAlphabet = "abcdefghijklmnopqrstuvwxyz";
inline constexpr std::string_view kValueAlphabet = "0123456789";

/// lookup:        "k1=v1;k2=v2;...;kn=vn?ki:vi"
/// copy:          "s#s"
/// uniform-noise: i.i.d. uniform draws from the value alphabet
std::vector<Document> make_synthetic_corpus(const Vocabulary& vocab, Task task, std::size_t size, std::uint64_t seed,
                                            const SyntheticOptions& options = {});

/// One document per line, UTF-8 restricted to the vocabulary's charset.
std::vector<Document> load_documents(const std::filesystem::path& path, const Vocabulary& vocab);

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs, const Vocabulary& vocab);

}  // namespace rlp::corpus
