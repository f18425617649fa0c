#include "zstag/embeddings.hpp"

#include <fstream>
#include <sstream>

#include "zstag/errors.hpp"
#include "zstag/model.hpp"
#include "zstag/rng.hpp"

namespace zstag {

EmbeddingLoad load_embeddings(const std::filesystem::path& path, const Vocab& vocab, int dim,
                              Rng& init) {
  if (dim < 1) throw ContractError("load_embeddings: dim must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  EmbeddingLoad out;
  out.matrix = glorot_uniform(vocab.word_rows(), dim, init);
  out.pretrained.assign(vocab.word_rows(), false);

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim) {
      throw ParseError("expected " + std::to_string(dim) + "-dimensional vector, got " +
                           std::to_string(vals.size()),
                       line_no);
    }
    const int id = vocab.word_id(word);
    if (id == Vocab::kUnkId) continue;
    for (int j = 0; j < dim; ++j) out.matrix(id, j) = vals[j];
    if (!out.pretrained[id]) {
      out.pretrained[id] = true;
      ++out.found;
    }
  }
  out.matrix.row(Vocab::kPadId).setZero();
  out.pretrained[Vocab::kPadId] = false;
  return out;
}

}  // namespace zstag
