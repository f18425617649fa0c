#include "zstag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zstag/checkpoint.hpp"
#include "zstag/errors.hpp"
#include "zstag/viz.hpp"

namespace zstag::cli {

namespace {

namespace fs = std::filesystem;

TsvOptions tsv_options(const RunConfig& config) {
  TsvOptions opts;
  opts.positive_labels = {config.positive_labels.begin(), config.positive_labels.end()};
  return opts;
}

Dataset load_split(const RunConfig& config, const std::string& path,
                   const std::string& split_name) {
  if (path.empty()) throw IoError("missing data path for split " + split_name);
  if (config.data_format == "sentence") {
    return load_sentence_annotated(path, tsv_options(config), split_name);
  }
  if (config.data_format != "token") {
    throw ContractError("unknown data format: " + config.data_format);
  }
  return derive_sentence_labels(load_token_annotated(path, tsv_options(config), split_name));
}

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.out_dir);
}

std::string seed_suffix(const RunConfig& config, std::uint64_t seed) {
  return config.seeds.size() > 1 ? "-seed" + std::to_string(seed) : "";
}

bool wants(const RunConfig& config, Method m) {
  return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& log) {
  const Dataset train_data = load_split(config, config.train_path, "train");
  const Dataset dev_data = load_split(config, config.dev_path, "dev");
  ensure_out_dir(config);

  const Vocab vocab = build_vocab(train_data, config.min_count);
  EmbeddingLoad embeddings;
  const EmbeddingLoad* pretrained = nullptr;
  if (!config.embeddings_path.empty()) {
    Rng emb_rng = Rng::stream(0, "embedding-init");
    embeddings = load_embeddings(config.embeddings_path, vocab, config.dims.word_emb_dim, emb_rng);
    pretrained = &embeddings;
    log << "loaded embeddings for " << embeddings.found << " of " << vocab.word_rows()
        << " vocabulary rows\n";
  }

  const bool needs_classifier =
      wants(config, Method::kAttention) || wants(config, Method::kBackprop);
  const bool needs_tagger = wants(config, Method::kSupervised);

  for (std::uint64_t seed : config.seeds) {
    const std::string suffix = seed_suffix(config, seed);
    if (needs_classifier) {
      TrainRun run{config.train, config.dims, ModelKind::kSentenceClassifier, seed, pretrained};
      log << "training classifier (seed " << seed << ")\n";
      TrainResult result = train(run, train_data, dev_data, vocab, &log);
      save_checkpoint(fs::path(config.out_dir) / ("checkpoint" + suffix + ".zck"), result.params,
                      vocab);
      write_file(fs::path(config.out_dir) / ("history" + suffix + ".jsonl"),
                 history_to_jsonl(result.history));
      log << "best epoch " << result.history.best_epoch << " dev metric "
          << result.history.best_metric << "\n";
    }
    if (needs_tagger) {
      TrainRun run{config.train, config.dims, ModelKind::kTokenTagger, seed, pretrained};
      log << "training supervised tagger (seed " << seed << ")\n";
      TrainResult result = train(run, train_data, dev_data, vocab, &log);
      save_checkpoint(fs::path(config.out_dir) / ("tagger" + suffix + ".zck"), result.params,
                      vocab);
      write_file(fs::path(config.out_dir) / ("tagger-history" + suffix + ".jsonl"),
                 history_to_jsonl(result.history));
    }
  }
  if (wants(config, Method::kRelFreq)) {
    save_relfreq(fs::path(config.out_dir) / "relfreq.json", relfreq_train(train_data));
    log << "wrote relative-frequency model\n";
  }
}

std::vector<MethodEvaluation> cmd_eval(const RunConfig& config, std::ostream& out,
                                       std::ostream& log) {
  const Dataset test_data = load_split(config, config.test_path, "test");
  ensure_out_dir(config);

  LoadedModel classifier, tagger;
  RelFreqModel relfreq;
  EvalModels models;
  if (!config.checkpoint_path.empty()) {
    classifier = load_checkpoint(config.checkpoint_path);
    models.classifier = &classifier.params;
    models.classifier_vocab = &classifier.vocab;
  }
  if (!config.tagger_checkpoint_path.empty()) {
    tagger = load_checkpoint(config.tagger_checkpoint_path);
    models.tagger = &tagger.params;
    models.tagger_vocab = &tagger.vocab;
  }
  if (!config.relfreq_path.empty()) {
    relfreq = load_relfreq(config.relfreq_path);
    models.relfreq = &relfreq;
  }

  EvalOptions options;
  options.attention = config.train.attention;
  options.map_mode = config.map_mode;
  options.map_global = config.map_global;
  options.batch_size = config.train.batch_size;
  options.c_max = config.train.c_max;

  std::vector<MethodEvaluation> rows =
      evaluate_methods(models, test_data, config.methods, options);

  for (Method m : config.methods) {
    const bool present = std::any_of(rows.begin(), rows.end(),
                                     [m](const MethodEvaluation& r) { return r.method == m; });
    if (!present) {
      log << "warning: method " << method_name(m) << " skipped (no model provided)\n";
    }
  }

  out << "method      sent-F1   MAP       P         R         F1\n";
  char buf[160];
  nlohmann::json machine = nlohmann::json::array();
  for (const MethodEvaluation& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s  %.4f    %.4f    %.4f    %.4f    %.4f\n",
                  method_name(row.method).c_str(), row.report.sentence_f1, row.report.token_map,
                  row.report.token_precision, row.report.token_recall, row.report.token_f1);
    out << buf;
    machine.push_back(nlohmann::json::parse(report_to_json(row.report, method_name(row.method))));
  }
  write_file(fs::path(config.out_dir) / "report.json", machine.dump() + "\n");
  return rows;
}

namespace {

std::vector<std::vector<TokenPrediction>> predict_with_method(const RunConfig& config,
                                                              const Dataset& data,
                                                              Method method) {
  EvalOptions options;
  options.attention = config.train.attention;
  options.batch_size = config.train.batch_size;
  options.c_max = config.train.c_max;

  std::vector<std::vector<TokenPrediction>> predictions;
  switch (method) {
    case Method::kAttention: {
      if (config.checkpoint_path.empty()) throw IoError("attention method needs --checkpoint");
      const LoadedModel model = load_checkpoint(config.checkpoint_path);
      for (const Batch& batch :
           make_batches(data, model.vocab, options.batch_size, std::nullopt, options.c_max)) {
        for (const ForwardTrace& t :
             forward(batch, model.params, Mode::kEval, AttentionKind::kLogistic)) {
          predictions.push_back(label_by_attention(t));
        }
      }
      break;
    }
    case Method::kBackprop: {
      if (config.checkpoint_path.empty()) throw IoError("backprop method needs --checkpoint");
      const LoadedModel model = load_checkpoint(config.checkpoint_path);
      BackpropLabeler labeler(model.params, model.vocab, options.attention, options.c_max);
      for (const Sentence& s : data.sentences) predictions.push_back(labeler.label(s));
      break;
    }
    case Method::kRelFreq: {
      if (config.relfreq_path.empty()) throw IoError("relfreq method needs --relfreq");
      const RelFreqModel model = load_relfreq(config.relfreq_path);
      for (const Sentence& s : data.sentences) predictions.push_back(relfreq_score(model, s));
      break;
    }
    case Method::kSupervised: {
      if (config.tagger_checkpoint_path.empty()) {
        throw IoError("supervised method needs --tagger-checkpoint");
      }
      const LoadedModel model = load_checkpoint(config.tagger_checkpoint_path);
      for (const Batch& batch :
           make_batches(data, model.vocab, options.batch_size, std::nullopt, options.c_max)) {
        for (const Mat& probs : supervised_forward(batch, model.params, Mode::kEval)) {
          predictions.push_back(label_supervised(probs));
        }
      }
      break;
    }
  }
  return predictions;
}

}  // namespace

void cmd_label(const RunConfig& config, std::ostream& log) {
  const Dataset data = load_split(config, config.test_path, "test");
  ensure_out_dir(config);
  const Method method = method_from_name(config.label_method);
  const auto predictions = predict_with_method(config, data, method);
  const fs::path out_path = fs::path(config.out_dir) / "predictions.tsv";
  write_predictions_tsv(out_path, data, predictions);
  log << "wrote " << out_path.string() << "\n";
}

void cmd_visualize(const RunConfig& config, std::ostream& log) {
  const Dataset data = load_split(config, config.test_path, "test");
  ensure_out_dir(config);
  const Method method = method_from_name(config.viz_method);
  if (method != Method::kAttention && method != Method::kBackprop) {
    throw ContractError("visualize supports the attention and backprop methods");
  }
  const auto predictions = predict_with_method(config, data, method);

  std::vector<HeatmapSentence> sentences;
  for (std::size_t j = 0; j < data.size(); ++j) {
    HeatmapSentence hs;
    hs.tokens = data.sentences[j].tokens;
    std::vector<double> scores;
    for (const TokenPrediction& p : predictions[j]) scores.push_back(p.score);
    if (method == Method::kAttention) {
      hs.intensity = scores;  // already in [0,1]
    } else {
      // Gradient magnitudes are unbounded; min-max normalize per sentence.
      const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
      const double span = *mx - *mn;
      for (double s : scores) hs.intensity.push_back(span > 0.0 ? (s - *mn) / span : 0.0);
    }
    sentences.push_back(std::move(hs));
  }
  const fs::path out_path =
      config.viz_out.empty() ? fs::path(config.out_dir) / "heatmap.html" : fs::path(config.viz_out);
  write_heatmap_html(out_path, "token scores (" + method_name(method) + ")", sentences);
  log << "wrote " << out_path.string() << "\n";
}

void cmd_synth(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const SyntheticCorpus corpus = generate_synthetic(config.synth);
  write_token_annotated(corpus.train, fs::path(config.out_dir) / "train.tsv");
  write_token_annotated(corpus.dev, fs::path(config.out_dir) / "dev.tsv");
  write_token_annotated(corpus.test, fs::path(config.out_dir) / "test.tsv");
  log << "wrote synthetic corpus (" << corpus.train.size() << "/" << corpus.dev.size() << "/"
      << corpus.test.size() << " sentences) to " << config.out_dir << "\n";
}

}  // namespace zstag::cli
