#include "zstag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "zstag/errors.hpp"
#include "zstag/rng.hpp"

namespace zstag {

namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + ('a' - 'A'));
  }
  return out;
}

Dataset load_token_annotated(const std::filesystem::path& path, const TsvOptions& opts,
                             std::string split_name) {
  std::ifstream in = open_or_throw(path);
  Dataset ds;
  ds.split_name = std::move(split_name);

  Sentence cur;
  cur.token_labels.emplace();
  long line_no = 0;
  std::string line;
  auto flush = [&]() {
    if (!cur.tokens.empty()) {
      ds.sentences.push_back(std::move(cur));
      cur = Sentence{};
      cur.token_labels.emplace();
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank(line)) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("expected token<TAB>label", line_no);
    }
    std::string token = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (token.empty()) throw ParseError("empty token field", line_no);
    cur.tokens.push_back(std::move(token));
    cur.token_labels->push_back(opts.positive_labels.count(label) ? 1 : 0);
  }
  flush();
  if (ds.sentences.empty()) throw ParseError("empty dataset: " + path.string());
  return ds;
}

Dataset load_sentence_annotated(const std::filesystem::path& path, const TsvOptions& opts,
                                std::string split_name) {
  std::ifstream in = open_or_throw(path);
  Dataset ds;
  ds.split_name = std::move(split_name);

  long line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected label<TAB>tokens", line_no);
    Sentence s;
    s.sentence_label = opts.positive_labels.count(line.substr(0, tab)) ? 1 : 0;
    std::istringstream toks(line.substr(tab + 1));
    std::string tok;
    while (toks >> tok) s.tokens.push_back(tok);
    if (s.tokens.empty()) throw ParseError("sentence with no tokens", line_no);
    ds.sentences.push_back(std::move(s));
  }
  if (ds.sentences.empty()) throw ParseError("empty dataset: " + path.string());
  return ds;
}

void write_token_annotated(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < dataset.sentences.size(); ++i) {
    const Sentence& s = dataset.sentences[i];
    if (!s.token_labels) throw ContractError("write_token_annotated: sentence lacks token labels");
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const std::string& tok = s.tokens[t];
      if (tok.find_first_of("\t\n") != std::string::npos) {
        throw ContractError("token contains tab or newline");
      }
      out << tok << '\t' << (*s.token_labels)[t] << '\n';
    }
    if (i + 1 < dataset.sentences.size()) out << '\n';
  }
}

Dataset derive_sentence_labels(Dataset dataset) {
  for (Sentence& s : dataset.sentences) {
    if (!s.token_labels) {
      throw ContractError("derive_sentence_labels: sentence lacks token labels");
    }
    int any = 0;
    for (int l : *s.token_labels) any |= (l != 0);
    s.sentence_label = any;
  }
  return dataset;
}

int Vocab::word_id(std::string_view token) const {
  const std::string key = lowercase_ascii(token);
  auto it = word_ids_.find(key);
  return it == word_ids_.end() ? kUnkId : it->second;
}

std::uint64_t Vocab::content_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::string_view s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const std::string& w : words_) mix(w);
  for (int i = 0; i < 256; ++i) {
    h ^= static_cast<std::uint64_t>(char_ids_[i] + 1);
    h *= 1099511628211ull;
  }
  return h;
}

Vocab Vocab::from_parts(std::vector<std::string> words, std::array<int, 256> char_table) {
  Vocab v;
  v.words_ = std::move(words);
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.word_ids_[v.words_[i]] = static_cast<int>(i) + 2;
  }
  v.char_ids_ = char_table;
  int mx = kUnkId;
  for (int id : char_table) mx = std::max(mx, id);
  v.char_count_ = mx - 1;  // ids start at 2
  return v;
}

Vocab build_vocab(const Dataset& train, int min_count) {
  if (train.empty()) throw ContractError("build_vocab: empty training set");

  std::map<std::string, long> word_counts;
  std::array<long, 256> char_counts{};
  for (const Sentence& s : train.sentences) {
    for (const std::string& tok : s.tokens) {
      ++word_counts[lowercase_ascii(tok)];
      for (char c : tok) ++char_counts[static_cast<unsigned char>(c)];
    }
  }

  std::vector<std::pair<std::string, long>> by_count(word_counts.begin(), word_counts.end());
  std::sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  for (auto& [word, count] : by_count) {
    if (count < min_count) continue;
    v.word_ids_[word] = static_cast<int>(v.words_.size()) + 2;
    v.words_.push_back(word);
  }

  std::vector<std::pair<int, long>> chars;
  for (int c = 0; c < 256; ++c) {
    if (char_counts[c] > 0) chars.emplace_back(c, char_counts[c]);
  }
  std::sort(chars.begin(), chars.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  v.char_ids_.fill(Vocab::kUnkId);
  int next = 2;
  for (auto& [c, count] : chars) v.char_ids_[c] = next++;
  v.char_count_ = static_cast<int>(chars.size());
  return v;
}

std::vector<Batch> make_batches(const Dataset& dataset, const Vocab& vocab, int batch_size,
                                std::optional<std::uint64_t> shuffle_seed, int c_max) {
  if (batch_size < 1) throw ContractError("make_batches: batch_size must be >= 1");
  if (c_max < 1) throw ContractError("make_batches: c_max must be >= 1");

  std::vector<int> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(order);
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    int t_max = 0;
    int c_batch = 1;
    for (std::size_t i = start; i < end; ++i) {
      const Sentence& s = dataset.sentences[order[i]];
      t_max = std::max(t_max, static_cast<int>(s.tokens.size()));
      for (const std::string& tok : s.tokens) {
        c_batch = std::max(c_batch, std::min<int>(c_max, static_cast<int>(tok.size())));
      }
    }
    const int rows = static_cast<int>(end - start);
    b.word_ids.setConstant(rows, t_max, Vocab::kPadId);
    b.mask.setZero(rows, t_max);
    for (std::size_t i = start; i < end; ++i) {
      const int r = static_cast<int>(i - start);
      const Sentence& s = dataset.sentences[order[i]];
      const int len = static_cast<int>(s.tokens.size());
      b.dataset_indices.push_back(order[i]);
      b.lengths.push_back(len);
      b.sentence_labels.push_back(s.sentence_label.value_or(-1));
      if (s.token_labels) b.token_labels.push_back(*s.token_labels);

      Eigen::MatrixXi chars = Eigen::MatrixXi::Constant(t_max, c_batch, Vocab::kPadId);
      std::vector<int> clens;
      for (int t = 0; t < len; ++t) {
        const std::string& tok = s.tokens[t];
        b.word_ids(r, t) = vocab.word_id(tok);
        b.mask(r, t) = 1;
        const int n = std::min<int>(c_batch, static_cast<int>(tok.size()));
        for (int c = 0; c < n; ++c) {
          chars(t, c) = vocab.char_id(static_cast<unsigned char>(tok[c]));
        }
        clens.push_back(n);
      }
      b.char_ids.push_back(std::move(chars));
      b.char_lengths.push_back(std::move(clens));
    }
    if (!b.token_labels.empty() && b.token_labels.size() != static_cast<std::size_t>(rows)) {
      // Mixed presence of token labels inside one dataset; treat as absent.
      b.token_labels.clear();
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace zstag
