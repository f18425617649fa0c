#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zstag/cli.hpp"
#include "zstag/errors.hpp"

namespace {

using zstag::cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<zstag::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<zstag::Method> methods;
  for (const std::string& n : names) methods.push_back(zstag::method_from_name(n));
  return methods;
}

void add_common_flags(CLI::App* app, RunConfig& config, std::vector<std::string>& method_names,
                      std::string& attention) {
  app->add_option("--word-emb-dim", config.dims.word_emb_dim, "Word embedding size");
  app->add_option("--char-emb-dim", config.dims.char_emb_dim, "Character embedding size");
  app->add_option("--char-hidden", config.dims.char_hidden, "Character LSTM size per direction");
  app->add_option("--word-hidden", config.dims.word_hidden, "Word LSTM size per direction");
  app->add_option("--combined-h", config.dims.combined_h, "Combined representation size");
  app->add_option("--attention-e", config.dims.attention_e, "Attention layer size");
  app->add_option("--sentence-d", config.dims.sentence_d, "Sentence hidden layer size");

  app->add_option("--batch-size", config.train.batch_size, "Sentences per batch");
  app->add_option("--dropout", config.train.dropout, "Dropout probability");
  app->add_option("--gamma", config.train.gamma, "Weight of the attention-range losses");
  app->add_option("--learning-rate", config.train.learning_rate, "AdaDelta learning rate");
  app->add_option("--patience", config.train.patience, "Early-stopping patience in epochs");
  app->add_option("--max-epochs", config.train.max_epochs, "Epoch limit");
  app->add_option("--grad-clip", config.train.grad_clip, "Global gradient-norm clip (0 = off)");
  app->add_option("--c-max", config.train.c_max, "Character sequence truncation length");
  app->add_option("--attention", attention, "Attention normalization")
      ->check(CLI::IsMember({"logistic", "exp"}));
  app->add_option_function<std::string>(
         "--selection",
         [&config](const std::string& s) {
           if (s == "f1") {
             config.train.selection = zstag::SelectionMetric::kSentenceF1;
           } else if (s == "accuracy") {
             config.train.selection = zstag::SelectionMetric::kSentenceAccuracy;
           } else {
             config.train.selection = zstag::SelectionMetric::kDevLoss;
           }
         },
         "Model selection metric on dev")
      ->check(CLI::IsMember({"f1", "accuracy", "loss"}));

  app->add_option("--seed,--seeds", config.seeds, "Random seeds");
  app->add_option("--method", method_names, "Labeling methods")
      ->check(CLI::IsMember({"attention", "backprop", "relfreq", "supervised"}));
  app->add_option("--positive-labels", config.positive_labels,
                  "Label strings mapped to the positive class");
  app->add_option("--min-count", config.min_count, "Vocabulary frequency threshold");
  app->add_option("--format", config.data_format, "Data format")
      ->check(CLI::IsMember({"token", "sentence"}));
  app->add_option("--out", config.out_dir, "Output directory");
  app->set_config("--config", "", "Flat key=value configuration file");
}

void apply_common(RunConfig& config, const std::vector<std::string>& method_names,
                  const std::string& attention) {
  if (!method_names.empty()) config.methods = parse_methods(method_names);
  config.train.attention =
      attention == "exp" ? zstag::AttentionKind::kExp : zstag::AttentionKind::kLogistic;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot sequence labeling: sentence classifiers whose attention "
               "weights double as token labels"};
  app.require_subcommand(1);

  RunConfig config;
  std::vector<std::string> method_names;
  std::string attention = "logistic";
  bool map_include_empty = false;

  CLI::App* train = app.add_subcommand("train", "Train models and write checkpoints");
  train->add_option("--train", config.train_path, "Training data")->required();
  train->add_option("--dev", config.dev_path, "Development data")->required();
  train->add_option("--embeddings", config.embeddings_path, "Pretrained embedding text file");
  add_common_flags(train, config, method_names, attention);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate methods against token annotation");
  eval->add_option("--test", config.test_path, "Evaluation data")->required();
  eval->add_option("--checkpoint", config.checkpoint_path, "Classifier checkpoint");
  eval->add_option("--tagger-checkpoint", config.tagger_checkpoint_path, "Tagger checkpoint");
  eval->add_option("--relfreq", config.relfreq_path, "Relative-frequency model");
  eval->add_flag("--map-global", config.map_global, "Rank tokens corpus-wide for MAP");
  eval->add_flag("--map-include-empty", map_include_empty,
                 "Count sentences without positive tokens as AP 0");
  add_common_flags(eval, config, method_names, attention);

  CLI::App* label = app.add_subcommand("label", "Dump per-token predictions as TSV");
  label->add_option("--data", config.test_path, "Input data")->required();
  label->add_option("--checkpoint", config.checkpoint_path, "Classifier checkpoint");
  label->add_option("--tagger-checkpoint", config.tagger_checkpoint_path, "Tagger checkpoint");
  label->add_option("--relfreq", config.relfreq_path, "Relative-frequency model");
  label->add_option("--label-method", config.label_method, "Method to dump")
      ->check(CLI::IsMember({"attention", "backprop", "relfreq", "supervised"}));
  add_common_flags(label, config, method_names, attention);

  CLI::App* viz = app.add_subcommand("visualize", "Export a token-score heatmap as HTML");
  viz->add_option("--data", config.test_path, "Input data")->required();
  viz->add_option("--checkpoint", config.checkpoint_path, "Classifier checkpoint")->required();
  viz->add_option("--viz-method", config.viz_method, "Scores to render")
      ->check(CLI::IsMember({"attention", "backprop"}));
  viz->add_option("--viz-out", config.viz_out, "Output HTML path");
  add_common_flags(viz, config, method_names, attention);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--vocab-size", config.synth.vocab_size, "Distractor vocabulary size");
  synth->add_option("--triggers", config.synth.trigger_count, "Trigger token count");
  synth->add_option("--min-len", config.synth.min_len, "Minimum sentence length");
  synth->add_option("--max-len", config.synth.max_len, "Maximum sentence length");
  synth->add_option("--positive-rate", config.synth.positive_rate, "Positive sentence rate");
  synth->add_option("--train-size", config.synth.train_sentences, "Training sentences");
  synth->add_option("--dev-size", config.synth.dev_sentences, "Development sentences");
  synth->add_option("--test-size", config.synth.test_sentences, "Test sentences");
  synth->add_option("--synth-seed", config.synth.seed, "Corpus seed");
  add_common_flags(synth, config, method_names, attention);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  apply_common(config, method_names, attention);
  if (map_include_empty) config.map_mode = zstag::MapMode::kZeroNoPositive;

  try {
    if (train->parsed()) {
      zstag::cli::cmd_train(config, std::cerr);
    } else if (eval->parsed()) {
      zstag::cli::cmd_eval(config, std::cout, std::cerr);
    } else if (label->parsed()) {
      zstag::cli::cmd_label(config, std::cerr);
    } else if (viz->parsed()) {
      zstag::cli::cmd_visualize(config, std::cerr);
    } else if (synth->parsed()) {
      zstag::cli::cmd_synth(config, std::cerr);
    }
  } catch (const zstag::NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
