#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "zstag/corpus.hpp"

namespace zstag {

struct EmbeddingLoad {
  Eigen::MatrixXd matrix;        // vocab.word_rows() x dim
  std::vector<bool> pretrained;  // per row: copied from file vs left initialized
  int found = 0;                 // number of vocab words found in the file
};

// Reads `word v1 v2 ... vdim` lines and fills rows for vocab words found in
// the file. Rows for missing words keep the uniform initializer values drawn
// from `init`; the PAD row is zeroed. A vector of the wrong width is a parse
// error carrying the line number.
EmbeddingLoad load_embeddings(const std::filesystem::path& path, const Vocab& vocab, int dim,
                              class Rng& init);

}  // namespace zstag
