#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace zstag {

struct Sentence {
  std::vector<std::string> tokens;
  std::optional<std::vector<int>> token_labels;  // {0,1}, same length as tokens
  std::optional<int> sentence_label;             // {0,1}
};

struct Dataset {
  std::vector<Sentence> sentences;
  std::string split_name;  // "train", "dev" or "test"

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

struct TsvOptions {
  // Label strings mapped to the positive class; anything else maps to 0.
  // Configurable because corpora use different label alphabets.
  std::set<std::string> positive_labels = {"1"};
};

// token<TAB>label lines, blank line between sentences.
Dataset load_token_annotated(const std::filesystem::path& path, const TsvOptions& opts = {},
                             std::string split_name = "train");

// label<TAB>token token token..., one sentence per line (sentence labels only).
Dataset load_sentence_annotated(const std::filesystem::path& path, const TsvOptions& opts = {},
                                std::string split_name = "train");

// Inverse of load_token_annotated; labels written as 1/0.
void write_token_annotated(const Dataset& dataset, const std::filesystem::path& path);

// sentence_label = 1 iff any token label is 1. Requires token labels.
Dataset derive_sentence_labels(Dataset dataset);

std::string lowercase_ascii(std::string_view s);

class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  // Id of a surface form (lowercased before lookup); kUnkId when absent.
  int word_id(std::string_view token) const;
  int char_id(unsigned char c) const { return char_ids_[c]; }

  int word_rows() const { return static_cast<int>(words_.size()) + 2; }
  int char_rows() const { return char_count_ + 2; }

  // Words ordered by id (id 2 first). Used for serialization.
  const std::vector<std::string>& words() const { return words_; }
  const std::array<int, 256>& char_table() const { return char_ids_; }

  std::uint64_t content_hash() const;

  static Vocab from_parts(std::vector<std::string> words, std::array<int, 256> char_table);

  friend Vocab build_vocab(const Dataset& train, int min_count);

 private:
  std::vector<std::string> words_;  // lowercased, id = index + 2
  std::unordered_map<std::string, int> word_ids_;
  std::array<int, 256> char_ids_{};  // byte -> id, kUnkId when unseen
  int char_count_ = 0;
};

// Deterministic ids: sorted by descending count, ties broken lexicographically
// (bytewise for characters). Words with count < min_count are excluded.
Vocab build_vocab(const Dataset& train, int min_count = 1);

struct Batch {
  Eigen::MatrixXi word_ids;                     // B x T_max, PAD-filled
  std::vector<Eigen::MatrixXi> char_ids;        // per sentence: T_max x C_max, PAD-filled
  Eigen::MatrixXi mask;                         // B x T_max, 1 iff t < length
  std::vector<int> lengths;                     // per sentence token count
  std::vector<std::vector<int>> char_lengths;   // per sentence, per token (<= C_max)
  std::vector<int> sentence_labels;             // -1 when absent
  std::vector<std::vector<int>> token_labels;   // empty when absent
  std::vector<int> dataset_indices;             // original sentence positions

  int size() const { return static_cast<int>(lengths.size()); }
};

// Every sentence appears exactly once; padding to the longest sentence per
// batch; character sequences truncated at c_max. With a seed the order is the
// seeded permutation, otherwise dataset order.
std::vector<Batch> make_batches(const Dataset& dataset, const Vocab& vocab, int batch_size,
                                std::optional<std::uint64_t> shuffle_seed = std::nullopt,
                                int c_max = 32);

}  // namespace zstag
