#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "zstag/corpus.hpp"
#include "zstag/model.hpp"
#include "zstag/rng.hpp"
#include "zstag/synth.hpp"

namespace testutil {

// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("zstag-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline zstag::SyntheticSpec tiny_spec(std::uint64_t seed = 1) {
  zstag::SyntheticSpec spec;
  spec.vocab_size = 12;
  spec.trigger_count = 3;
  spec.min_len = 2;
  spec.max_len = 5;
  spec.train_sentences = 24;
  spec.dev_sentences = 8;
  spec.test_sentences = 8;
  spec.seed = seed;
  return spec;
}

inline zstag::DimensionConfig tiny_dims() {
  zstag::DimensionConfig dims;
  dims.word_emb_dim = 6;
  dims.char_emb_dim = 4;
  dims.char_hidden = 4;
  dims.word_hidden = 6;
  dims.combined_h = 6;
  dims.attention_e = 5;
  dims.sentence_d = 4;
  return dims;
}

struct SmallModel {
  zstag::Dataset data;
  zstag::Vocab vocab;
  zstag::ModelParams params;
};

inline SmallModel small_classifier(std::uint64_t seed = 7,
                                   zstag::ModelKind kind = zstag::ModelKind::kSentenceClassifier) {
  SmallModel m{};
  zstag::SyntheticCorpus corpus = zstag::generate_synthetic(tiny_spec(seed));
  m.data = std::move(corpus.train);
  m.vocab = zstag::build_vocab(m.data, 1);
  zstag::Rng rng = zstag::Rng::stream(seed, "init");
  m.params = zstag::ModelParams::init(tiny_dims(), kind, m.vocab.word_rows(), m.vocab.char_rows(),
                                      rng);
  return m;
}

}  // namespace testutil
