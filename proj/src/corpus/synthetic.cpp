#include "rlp/corpus/synthetic.hpp"

#include "rlp/rng.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace rlp::corpus {

Task parse_task(std::string_view name) {
  if (name == "lookup") return Task::Lookup;
  if (name == "copy") return Task::Copy;
  if (name == "uniform-noise") return Task::UniformNoise;
  throw std::invalid_argument("unknown synthetic task '" + std::string(name) + "'");
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::Lookup: return "lookup";
    case Task::Copy: return "copy";
    case Task::UniformNoise: return "uniform-noise";
  }
  return "unknown";
}

namespace {

Document make_lookup(const Vocabulary& vocab, Rng& rng, const SyntheticOptions& opt) {
  if (opt.keys < 1 || static_cast<std::size_t>(opt.keys) > kKeyAlphabet.size()) {
    throw std::invalid_argument("lookup: key count must be in [1, 26]");
  }
  std::string keys(kKeyAlphabet);
  // Partial Fisher-Yates for distinct keys.
  for (int i = 0; i < opt.keys; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.index(keys.size() - static_cast<std::size_t>(i));
    std::swap(keys[static_cast<std::size_t>(i)], keys[j]);
  }
  std::string text;
  std::string values;
  for (int i = 0; i < opt.keys; ++i) {
    const char v = kValueAlphabet[rng.index(kValueAlphabet.size())];
    values.push_back(v);
    if (i) text.push_back(';');
    text.push_back(keys[static_cast<std::size_t>(i)]);
    text.push_back('=');
    text.push_back(v);
  }
  const auto q = rng.index(static_cast<std::uint64_t>(opt.keys));
  text.push_back('?');
  text.push_back(keys[q]);
  text.push_back(':');
  text.push_back(values[q]);
  Document doc{vocab.tokenize(text), "lookup", {}};
  doc.answer_positions.push_back(doc.tokens.size() - 1);
  return doc;
}

Document make_copy(const Vocabulary& vocab, Rng& rng, const SyntheticOptions& opt) {
  if (opt.copy_length < 1) throw std::invalid_argument("copy: length must be positive");
  std::string half;
  for (int i = 0; i < opt.copy_length; ++i) half.push_back(kKeyAlphabet[rng.index(kKeyAlphabet.size())]);
  Document doc{vocab.tokenize(half + "#" + half), "copy", {}};
  for (std::size_t p = half.size() + 1; p < doc.tokens.size(); ++p) doc.answer_positions.push_back(p);
  return doc;
}

Document make_noise(const Vocabulary& vocab, Rng& rng, const SyntheticOptions& opt) {
  if (opt.noise_length < 2) throw std::invalid_argument("uniform-noise: length must be at least 2");
  std::string text;
  for (int i = 0; i < opt.noise_length; ++i) text.push_back(kValueAlphabet[rng.index(kValueAlphabet.size())]);
  Document doc{vocab.tokenize(text), "uniform-noise", {}};
  for (std::size_t p = 1; p < doc.tokens.size(); ++p) doc.answer_positions.push_back(p);
  return doc;
}

}  // namespace

std::vector<Document> make_synthetic_corpus(const Vocabulary& vocab, Task task, std::size_t size, std::uint64_t seed,
                                            const SyntheticOptions& options) {
  if (size < 1) throw std::invalid_argument("synthetic corpus size must be at least 1");
  Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(task)));
  std::vector<Document> docs;
  docs.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    switch (task) {
      case Task::Lookup: docs.push_back(make_lookup(vocab, rng, options)); break;
      case Task::Copy: docs.push_back(make_copy(vocab, rng, options)); break;
      case Task::UniformNoise: docs.push_back(make_noise(vocab, rng, options)); break;
    }
  }
  return docs;
}

std::vector<Document> load_documents(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      docs.push_back(Document{vocab.tokenize(line), path.string() + ":" + std::to_string(line_no), {}});
    } catch (const TokenizeError& e) {
      throw TokenizeError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), e.character(), e.offset());
    }
  }
  return docs;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
  for (const Document& d : docs) out << vocab.detokenize(d.tokens) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rlp::corpus
