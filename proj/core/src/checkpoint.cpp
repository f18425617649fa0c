#include "zstag/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zstag/errors.hpp"

namespace zstag {

namespace {

constexpr char kMagic[8] = {'Z', 'S', 'T', 'A', 'G', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated checkpoint");
  return v;
}

nlohmann::json dims_to_json(const DimensionConfig& d) {
  return {{"word_emb_dim", d.word_emb_dim}, {"char_emb_dim", d.char_emb_dim},
          {"char_hidden", d.char_hidden},   {"word_hidden", d.word_hidden},
          {"combined_h", d.combined_h},     {"attention_e", d.attention_e},
          {"sentence_d", d.sentence_d}};
}

DimensionConfig dims_from_json(const nlohmann::json& j) {
  DimensionConfig d;
  d.word_emb_dim = j.at("word_emb_dim");
  d.char_emb_dim = j.at("char_emb_dim");
  d.char_hidden = j.at("char_hidden");
  d.word_hidden = j.at("word_hidden");
  d.combined_h = j.at("combined_h");
  d.attention_e = j.at("attention_e");
  d.sentence_d = j.at("sentence_d");
  return d;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);

  nlohmann::json meta;
  meta["dims"] = dims_to_json(params.dims);
  meta["kind"] = params.kind == ModelKind::kSentenceClassifier ? "classifier" : "tagger";
  meta["words"] = vocab.words();
  nlohmann::json chars = nlohmann::json::array();
  for (int c = 0; c < 256; ++c) {
    if (vocab.char_table()[c] != Vocab::kUnkId) chars.push_back({c, vocab.char_table()[c]});
  }
  meta["chars"] = chars;
  meta["vocab_hash"] = vocab.content_hash();
  const std::string meta_str = meta.dump();
  write_pod(out, static_cast<std::uint64_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  std::uint32_t count = 0;
  params.visit([&count](const char*, const Mat&) { ++count; });
  write_pod(out, count);
  params.visit([&out](const char* name, const Mat& m) {
    const std::uint16_t name_len = static_cast<std::uint16_t>(std::strlen(name));
    write_pod(out, name_len);
    out.write(name, name_len);
    write_pod(out, static_cast<std::uint32_t>(m.rows()));
    write_pod(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  });
  if (!out) throw IoError("failed writing " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }

  const std::uint64_t meta_len = read_pod<std::uint64_t>(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw ParseError("truncated checkpoint metadata");
  const nlohmann::json meta = nlohmann::json::parse(meta_str);

  LoadedModel out;
  out.params.dims = dims_from_json(meta.at("dims"));
  out.params.kind = meta.at("kind") == "classifier" ? ModelKind::kSentenceClassifier
                                                    : ModelKind::kTokenTagger;
  std::array<int, 256> char_table;
  char_table.fill(Vocab::kUnkId);
  for (const auto& pair : meta.at("chars")) {
    char_table[pair.at(0).get<int>()] = pair.at(1).get<int>();
  }
  out.vocab = Vocab::from_parts(meta.at("words").get<std::vector<std::string>>(), char_table);
  if (meta.contains("vocab_hash") &&
      meta.at("vocab_hash").get<std::uint64_t>() != out.vocab.content_hash()) {
    throw ParseError("checkpoint vocabulary hash mismatch");
  }

  const std::uint32_t count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = read_pod<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_pod<std::uint32_t>(in);
    const std::uint32_t cols = read_pod<std::uint32_t>(in);
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw ParseError("truncated tensor " + name);
    bool matched = false;
    out.params.visit([&](const char* n, Mat& target) {
      if (name == n) {
        target = std::move(m);
        matched = true;
      }
    });
    if (!matched) throw ParseError("unknown tensor in checkpoint: " + name);
  }
  return out;
}

void save_relfreq(const std::filesystem::path& path, const RelFreqModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<std::pair<std::string, RelFreqModel::Counts>> sorted(model.counts.begin(),
                                                                   model.counts.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  nlohmann::json j;
  j["format"] = "zstag-relfreq";
  j["version"] = 1;
  j["smoothing_alpha"] = model.smoothing_alpha;
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [feature, c] : sorted) counts.push_back({feature, c.positive, c.negative});
  j["counts"] = counts;
  out << j.dump() << '\n';
}

RelFreqModel load_relfreq(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad relfreq model: ") + e.what());
  }
  if (j.value("format", "") != "zstag-relfreq") {
    throw ParseError("not a relfreq model: " + path.string());
  }
  RelFreqModel model;
  model.smoothing_alpha = j.value("smoothing_alpha", 0.0);
  for (const auto& row : j.at("counts")) {
    model.counts[row.at(0).get<std::string>()] = {row.at(1).get<long>(), row.at(2).get<long>()};
  }
  return model;
}

}  // namespace zstag
