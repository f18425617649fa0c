#include "zstag/trainer.hpp"

#include <chrono>
#include <future>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zstag/errors.hpp"
#include "zstag/optimizer.hpp"

namespace zstag {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be >= 1");
  if (patience < 1) throw ContractError("TrainConfig: patience must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("TrainConfig: dropout must be in [0,1)");
  if (gamma < 0.0) throw ContractError("TrainConfig: gamma must be nonnegative");
  if (max_epochs < 1) throw ContractError("TrainConfig: max_epochs must be >= 1");
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_metric_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ContractError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double metric) {
  ++epoch_;
  if (metric > best_metric_) {
    best_metric_ = metric;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

std::vector<int> gold_sentence_labels(const Batch& batch) {
  std::vector<int> gold;
  gold.reserve(batch.size());
  for (int label : batch.sentence_labels) {
    if (label != 0 && label != 1) {
      throw ContractError("training requires gold sentence labels on every sentence");
    }
    gold.push_back(label);
  }
  return gold;
}

LossBreakdown breakdown_of(ad::Tape& tape, const LossVars& loss, double gamma) {
  LossBreakdown out;
  out.l1 = tape.value(loss.l1)(0, 0);
  out.l2 = tape.value(loss.l2)(0, 0);
  out.l3 = tape.value(loss.l3)(0, 0);
  out.gamma = gamma;
  out.total = tape.value(loss.total)(0, 0);
  return out;
}

}  // namespace

BatchGradients classifier_batch_gradients(const Batch& batch, const ModelParams& params,
                                          AttentionKind attention, double gamma,
                                          Reduction reduction, Mode mode, double dropout,
                                          Rng* dropout_rng) {
  BatchGradients out;
  out.grads = ModelParams::zeros_like(params);
  ad::Tape tape;
  ModelGraph graph(tape, params, &out.grads, mode, dropout, dropout_rng);
  std::vector<ModelGraph::SentenceVars> sentences;
  sentences.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) {
    sentences.push_back(graph.build_classifier(batch, b, attention));
  }
  const std::vector<int> gold = gold_sentence_labels(batch);
  LossVars loss = build_combined_loss(tape, sentences, gold, gamma, reduction);
  tape.backward(loss.total);
  out.loss = breakdown_of(tape, loss, gamma);
  out.word_rep_grads.reserve(batch.size());
  for (const auto& s : sentences) {
    std::vector<Eigen::VectorXd> grads;
    grads.reserve(s.word_reps.size());
    for (ad::Var w : s.word_reps) grads.push_back(tape.grad(w).col(0));
    out.word_rep_grads.push_back(std::move(grads));
  }
  return out;
}

LossBreakdown classifier_batch_loss(const Batch& batch, const ModelParams& params,
                                    AttentionKind attention, double gamma, Reduction reduction) {
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr, Mode::kEval);
  std::vector<ModelGraph::SentenceVars> sentences;
  sentences.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) {
    sentences.push_back(graph.build_classifier(batch, b, attention));
  }
  const std::vector<int> gold = gold_sentence_labels(batch);
  LossVars loss = build_combined_loss(tape, sentences, gold, gamma, reduction);
  return breakdown_of(tape, loss, gamma);
}

namespace {

std::vector<std::vector<int>> gold_token_labels(const Batch& batch) {
  if (batch.token_labels.empty()) {
    throw ContractError("tagger training requires gold token labels");
  }
  return batch.token_labels;
}

}  // namespace

BatchGradients tagger_batch_gradients(const Batch& batch, const ModelParams& params, Mode mode,
                                      double dropout, Rng* dropout_rng) {
  BatchGradients out;
  out.grads = ModelParams::zeros_like(params);
  ad::Tape tape;
  ModelGraph graph(tape, params, &out.grads, mode, dropout, dropout_rng);
  std::vector<ModelGraph::TaggerVars> sentences;
  sentences.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) sentences.push_back(graph.build_tagger(batch, b));
  ad::Var loss = build_token_cross_entropy(tape, sentences, gold_token_labels(batch));
  tape.backward(loss);
  out.loss.l1 = tape.value(loss)(0, 0);
  out.loss.total = out.loss.l1;
  out.word_rep_grads.reserve(batch.size());
  for (const auto& s : sentences) {
    std::vector<Eigen::VectorXd> grads;
    grads.reserve(s.word_reps.size());
    for (ad::Var w : s.word_reps) grads.push_back(tape.grad(w).col(0));
    out.word_rep_grads.push_back(std::move(grads));
  }
  return out;
}

double tagger_batch_loss(const Batch& batch, const ModelParams& params) {
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr, Mode::kEval);
  std::vector<ModelGraph::TaggerVars> sentences;
  sentences.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) sentences.push_back(graph.build_tagger(batch, b));
  ad::Var loss = build_token_cross_entropy(tape, sentences, gold_token_labels(batch));
  return tape.value(loss)(0, 0);
}

namespace {

double classifier_dev_metric(const ModelParams& params, const Dataset& dev, const Vocab& vocab,
                             const TrainConfig& config, std::ostream* log) {
  std::vector<int> pred, gold;
  double dev_loss = 0.0;
  for (const Batch& batch :
       make_batches(dev, vocab, config.batch_size, std::nullopt, config.c_max)) {
    const std::vector<ForwardTrace> traces =
        forward(batch, params, Mode::kEval, config.attention);
    if (config.selection == SelectionMetric::kDevLoss) {
      dev_loss += combined_loss(traces, batch.sentence_labels, config.gamma,
                                config.reduction).total;
    }
    for (std::size_t j = 0; j < traces.size(); ++j) {
      pred.push_back(traces[j].y > 0.5 ? 1 : 0);
      gold.push_back(batch.sentence_labels[j]);
    }
  }
  for (int g : gold) {
    if (g != 0 && g != 1) throw ContractError("dev evaluation requires sentence labels");
  }
  if (config.selection == SelectionMetric::kDevLoss) return -dev_loss;
  if (config.selection == SelectionMetric::kSentenceAccuracy) {
    long correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == gold[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
  }
  const Prf prf = binary_prf(pred, gold);
  if (prf.counts.tp == 0 && prf.counts.fp == 0 && prf.counts.fn == 0) {
    if (log) *log << "warning: dev F1 undefined (no positive predictions or gold); using 0\n";
  }
  return prf.f1;
}

double tagger_dev_metric(const ModelParams& params, const Dataset& dev, const Vocab& vocab,
                         const TrainConfig& config) {
  std::vector<int> pred, gold;
  for (const Batch& batch :
       make_batches(dev, vocab, config.batch_size, std::nullopt, config.c_max)) {
    const std::vector<Mat> probs = supervised_forward(batch, params, Mode::kEval);
    for (std::size_t j = 0; j < probs.size(); ++j) {
      for (const TokenPrediction& p : label_supervised(probs[j])) pred.push_back(p.label);
      for (int g : batch.token_labels[j]) gold.push_back(g);
    }
  }
  return binary_prf(pred, gold).f1;
}

}  // namespace

TrainResult train(const TrainRun& run, const Dataset& train_data, const Dataset& dev_data,
                  const Vocab& vocab, std::ostream* log) {
  run.config.validate();
  run.dims.validate();
  if (train_data.empty() || dev_data.empty()) {
    throw ContractError("train: empty train or dev dataset");
  }

  Rng init_rng = Rng::stream(run.seed, "init");
  Rng dropout_rng = Rng::stream(run.seed, "dropout");
  Rng shuffle_rng = Rng::stream(run.seed, "shuffle");

  ModelParams params =
      ModelParams::init(run.dims, run.kind, vocab.word_rows(), vocab.char_rows(), init_rng);
  if (run.pretrained != nullptr) {
    if (run.pretrained->matrix.rows() != params.word_emb.rows() ||
        run.pretrained->matrix.cols() != params.word_emb.cols()) {
      throw ContractError("pretrained embedding shape does not match the vocabulary");
    }
    for (Eigen::Index r = 0; r < params.word_emb.rows(); ++r) {
      if (run.pretrained->pretrained[r]) params.word_emb.row(r) = run.pretrained->matrix.row(r);
    }
  }

  const AdaDelta optimizer(run.config.learning_rate, run.config.adadelta_rho,
                           run.config.adadelta_eps);
  AdaDelta::State state = optimizer.make_state(params);
  EarlyStopper stopper(run.config.patience);

  TrainResult result;
  result.params = params;

  for (int epoch = 1; epoch <= run.config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = shuffle_rng.next_u64();
    LossBreakdown epoch_loss;
    epoch_loss.gamma = run.config.gamma;
    for (const Batch& batch : make_batches(train_data, vocab, run.config.batch_size, epoch_seed,
                                           run.config.c_max)) {
      BatchGradients bg =
          run.kind == ModelKind::kSentenceClassifier
              ? classifier_batch_gradients(batch, params, run.config.attention, run.config.gamma,
                                           run.config.reduction, Mode::kTrain,
                                           run.config.dropout, &dropout_rng)
              : tagger_batch_gradients(batch, params, Mode::kTrain, run.config.dropout,
                                       &dropout_rng);
      clip_gradients(bg.grads, run.config.grad_clip);
      optimizer.update(params, bg.grads, state);
      if (auto bad = params.first_non_finite()) {
        throw NumericalFault("non-finite parameter block after update: " + *bad);
      }
      epoch_loss.l1 += bg.loss.l1;
      epoch_loss.l2 += bg.loss.l2;
      epoch_loss.l3 += bg.loss.l3;
      epoch_loss.total += bg.loss.total;
    }

    const double metric =
        run.kind == ModelKind::kSentenceClassifier
            ? classifier_dev_metric(params, dev_data, vocab, run.config, log)
            : tagger_dev_metric(params, dev_data, vocab, run.config);
    const bool improved = stopper.observe(metric);
    if (improved) result.params = params;

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss;
    record.dev_metric = metric;
    record.improved = improved;
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(record);
    if (log) {
      *log << "epoch " << epoch << " loss " << epoch_loss.total << " dev " << metric
           << (improved ? " *" : "") << " (" << record.seconds << "s)\n";
    }
    if (stopper.should_stop()) break;
  }
  result.history.best_epoch = stopper.best_epoch();
  result.history.best_metric = stopper.best_metric();
  return result;
}

std::string history_to_jsonl(const TrainHistory& history) {
  std::string out;
  for (const EpochRecord& r : history.epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["l1"] = r.train_loss.l1;
    j["l2"] = r.train_loss.l2;
    j["l3"] = r.train_loss.l3;
    j["gamma"] = r.train_loss.gamma;
    j["total"] = r.train_loss.total;
    j["dev_metric"] = r.dev_metric;
    j["improved"] = r.improved;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

SeedOutcome run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                         const Dataset& train_data, const Dataset& dev_data,
                         const Dataset& test_data, const Vocab& vocab,
                         const RelFreqModel* relfreq, std::ostream* log) {
  SeedOutcome outcome;
  outcome.seed = seed;

  const bool needs_classifier =
      std::any_of(config.methods.begin(), config.methods.end(), [](Method m) {
        return m == Method::kAttention || m == Method::kBackprop;
      });
  const bool needs_tagger = std::any_of(config.methods.begin(), config.methods.end(),
                                        [](Method m) { return m == Method::kSupervised; });

  if (needs_classifier) {
    TrainRun run{config.train, config.dims, ModelKind::kSentenceClassifier, seed,
                 config.pretrained};
    if (log) *log << "[seed " << seed << "] training classifier\n";
    outcome.classifier = train(run, train_data, dev_data, vocab, log);
  }
  if (needs_tagger) {
    TrainRun run{config.train, config.dims, ModelKind::kTokenTagger, seed, config.pretrained};
    if (log) *log << "[seed " << seed << "] training supervised tagger\n";
    outcome.tagger = train(run, train_data, dev_data, vocab, log);
  }

  EvalModels models;
  if (outcome.classifier) {
    models.classifier = &outcome.classifier->params;
    models.classifier_vocab = &vocab;
  }
  if (outcome.tagger) {
    models.tagger = &outcome.tagger->params;
    models.tagger_vocab = &vocab;
  }
  models.relfreq = relfreq;

  EvalOptions options;
  options.attention = config.train.attention;
  options.map_mode = config.map_mode;
  options.map_global = config.map_global;
  options.batch_size = config.train.batch_size;
  options.c_max = config.train.c_max;
  for (const MethodEvaluation& ev : evaluate_methods(models, test_data, config.methods, options)) {
    outcome.reports[ev.method] = ev.report;
  }
  return outcome;
}

}  // namespace

ExperimentResult run_seeds(const ExperimentConfig& config, const Dataset& train_data,
                           const Dataset& dev_data, const Dataset& test_data,
                           std::ostream* log) {
  if (config.seeds.empty()) throw ContractError("run_seeds: need at least one seed");
  ExperimentResult result;
  result.vocab = build_vocab(train_data, config.min_count);

  const bool needs_relfreq = std::any_of(config.methods.begin(), config.methods.end(),
                                         [](Method m) { return m == Method::kRelFreq; });
  if (needs_relfreq) result.relfreq = relfreq_train(train_data);
  const RelFreqModel* relfreq = needs_relfreq ? &result.relfreq : nullptr;

  if (config.parallel_seeds && config.seeds.size() > 1) {
    std::vector<std::future<std::pair<SeedOutcome, std::string>>> jobs;
    for (std::uint64_t seed : config.seeds) {
      jobs.push_back(std::async(std::launch::async, [&, seed] {
        std::ostringstream local_log;
        SeedOutcome outcome = run_one_seed(config, seed, train_data, dev_data, test_data,
                                           result.vocab, relfreq, log ? &local_log : nullptr);
        return std::make_pair(std::move(outcome), local_log.str());
      }));
    }
    for (auto& job : jobs) {
      auto [outcome, text] = job.get();
      if (log) *log << text;
      result.seeds.push_back(std::move(outcome));
    }
  } else {
    for (std::uint64_t seed : config.seeds) {
      result.seeds.push_back(
          run_one_seed(config, seed, train_data, dev_data, test_data, result.vocab, relfreq, log));
    }
  }

  for (Method method : config.methods) {
    std::vector<EvalReport> reports;
    for (const SeedOutcome& outcome : result.seeds) {
      auto it = outcome.reports.find(method);
      if (it != outcome.reports.end()) reports.push_back(it->second);
    }
    if (!reports.empty()) result.averaged[method] = average_reports(reports);
  }
  return result;
}

}  // namespace zstag
