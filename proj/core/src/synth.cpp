#include "zstag/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "zstag/errors.hpp"
#include "zstag/rng.hpp"

namespace zstag {

void SyntheticSpec::validate() const {
  if (vocab_size < 1 || trigger_count < 1) {
    throw ContractError("SyntheticSpec: vocabulary and trigger set must be non-empty");
  }
  if (min_len < 1 || max_len < min_len) throw ContractError("SyntheticSpec: bad length range");
  if (positive_rate < 0.0 || positive_rate > 1.0) {
    throw ContractError("SyntheticSpec: positive_rate must be in [0,1]");
  }
  if (max_triggers_per_sentence < 1) {
    throw ContractError("SyntheticSpec: max_triggers_per_sentence must be >= 1");
  }
  if (train_sentences < 1 || dev_sentences < 1 || test_sentences < 1) {
    throw ContractError("SyntheticSpec: all splits must be non-empty");
  }
}

namespace {

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

Dataset generate_split(const SyntheticSpec& spec, int count, const char* split_name, Rng rng) {
  Dataset ds;
  ds.split_name = split_name;
  for (int i = 0; i < count; ++i) {
    Sentence s;
    const int len =
        spec.min_len + static_cast<int>(rng.next_below(spec.max_len - spec.min_len + 1));
    const bool positive = rng.next_double() < spec.positive_rate;
    std::vector<int> trigger_positions;
    if (positive) {
      const int max_k = std::min(spec.max_triggers_per_sentence, len);
      const int k = 1 + static_cast<int>(rng.next_below(max_k));
      std::vector<int> positions(len);
      for (int p = 0; p < len; ++p) positions[p] = p;
      rng.shuffle(positions);
      trigger_positions.assign(positions.begin(), positions.begin() + k);
      std::sort(trigger_positions.begin(), trigger_positions.end());
    }
    s.token_labels.emplace(len, 0);
    for (int p = 0; p < len; ++p) {
      const bool is_trigger = std::binary_search(trigger_positions.begin(),
                                                 trigger_positions.end(), p);
      if (is_trigger) {
        s.tokens.push_back(numbered("trig", static_cast<int>(rng.next_below(spec.trigger_count))));
        (*s.token_labels)[p] = 1;
      } else {
        s.tokens.push_back(numbered("w", static_cast<int>(rng.next_below(spec.vocab_size))));
      }
    }
    s.sentence_label = positive ? 1 : 0;
    ds.sentences.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;
  corpus.train = generate_split(spec, spec.train_sentences, "train",
                                Rng::stream(spec.seed, "synth-train"));
  corpus.dev = generate_split(spec, spec.dev_sentences, "dev", Rng::stream(spec.seed, "synth-dev"));
  corpus.test =
      generate_split(spec, spec.test_sentences, "test", Rng::stream(spec.seed, "synth-test"));
  return corpus;
}

}  // namespace zstag
