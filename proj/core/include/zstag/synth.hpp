#pragma once

#include <cstdint>

#include "zstag/corpus.hpp"

namespace zstag {

// Desk-scale surrogate corpus: positive sentences contain at least one token
// from a trigger set disjoint from the distractor vocabulary, negative
// sentences contain none; token labels mark exactly the trigger tokens.
struct SyntheticSpec {
  int vocab_size = 200;  // distractor words
  int trigger_count = 10;
  int min_len = 5;
  int max_len = 15;
  double positive_rate = 0.5;
  int max_triggers_per_sentence = 3;
  int train_sentences = 2000;
  int dev_sentences = 500;
  int test_sentences = 500;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  Dataset train, dev, test;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace zstag
