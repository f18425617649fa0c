#include "zstag/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "zstag/errors.hpp"

namespace zstag {

Prf binary_prf(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size()) throw ContractError("binary_prf: length mismatch");
  Prf out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && gold[i] == 1) ++out.counts.tp;
    if (pred[i] == 1 && gold[i] == 0) ++out.counts.fp;
    if (pred[i] == 0 && gold[i] == 1) ++out.counts.fn;
  }
  const long tp = out.counts.tp;
  out.precision = (tp + out.counts.fp) > 0 ? double(tp) / double(tp + out.counts.fp) : 0.0;
  out.recall = (tp + out.counts.fn) > 0 ? double(tp) / double(tp + out.counts.fn) : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

double sentence_f1(std::span<const int> pred, std::span<const int> gold) {
  return binary_prf(pred, gold).f1;
}

namespace {

// AP of one ranked list. Ranking: descending score, ties by ascending
// position. AP = mean over gold-positive items of precision at that item's
// rank.
double average_precision(std::span<const double> scores, std::span<const int> gold) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double sum = 0.0;
  long positives = 0;
  long seen_positive = 0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    if (gold[order[rank - 1]] == 1) {
      ++seen_positive;
      sum += static_cast<double>(seen_positive) / static_cast<double>(rank);
      ++positives;
    }
  }
  return positives > 0 ? sum / static_cast<double>(positives) : 0.0;
}

}  // namespace

double mean_average_precision(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::vector<int>>& gold, MapMode mode) {
  if (scores.size() != gold.size()) throw ContractError("mean_average_precision: length mismatch");
  double sum = 0.0;
  long scored = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j].size() != gold[j].size()) {
      throw ContractError("mean_average_precision: token count mismatch");
    }
    const bool has_positive =
        std::any_of(gold[j].begin(), gold[j].end(), [](int g) { return g == 1; });
    if (!has_positive && mode == MapMode::kSkipNoPositive) continue;
    sum += has_positive ? average_precision(scores[j], gold[j]) : 0.0;
    ++scored;
  }
  if (scored == 0) {
    throw ContractError("mean_average_precision: no sentence with a gold-positive token");
  }
  return sum / static_cast<double>(scored);
}

double global_average_precision(const std::vector<std::vector<double>>& scores,
                                const std::vector<std::vector<int>>& gold) {
  if (scores.size() != gold.size()) throw ContractError("global_average_precision: length mismatch");
  std::vector<double> flat_scores;
  std::vector<int> flat_gold;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j].size() != gold[j].size()) {
      throw ContractError("global_average_precision: token count mismatch");
    }
    flat_scores.insert(flat_scores.end(), scores[j].begin(), scores[j].end());
    flat_gold.insert(flat_gold.end(), gold[j].begin(), gold[j].end());
  }
  const bool has_positive =
      std::any_of(flat_gold.begin(), flat_gold.end(), [](int g) { return g == 1; });
  if (!has_positive) {
    throw ContractError("global_average_precision: no gold-positive token");
  }
  return average_precision(flat_scores, flat_gold);
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ContractError("average_reports: no reports");
  EvalReport out;
  for (const EvalReport& r : reports) {
    out.sentence_f1 += r.sentence_f1;
    out.token_map += r.token_map;
    out.token_precision += r.token_precision;
    out.token_recall += r.token_recall;
    out.token_f1 += r.token_f1;
    out.sentence_counts.tp += r.sentence_counts.tp;
    out.sentence_counts.fp += r.sentence_counts.fp;
    out.sentence_counts.fn += r.sentence_counts.fn;
    out.token_counts.tp += r.token_counts.tp;
    out.token_counts.fp += r.token_counts.fp;
    out.token_counts.fn += r.token_counts.fn;
  }
  const double n = static_cast<double>(reports.size());
  out.sentence_f1 /= n;
  out.token_map /= n;
  out.token_precision /= n;
  out.token_recall /= n;
  out.token_f1 /= n;
  return out;
}

std::string report_to_json(const EvalReport& r, const std::string& method) {
  nlohmann::json j;
  j["method"] = method;
  j["sentence_f1"] = r.sentence_f1;
  j["token_map"] = r.token_map;
  j["token_precision"] = r.token_precision;
  j["token_recall"] = r.token_recall;
  j["token_f1"] = r.token_f1;
  j["sentence_counts"] = {{"tp", r.sentence_counts.tp},
                          {"fp", r.sentence_counts.fp},
                          {"fn", r.sentence_counts.fn}};
  j["token_counts"] = {
      {"tp", r.token_counts.tp}, {"fp", r.token_counts.fp}, {"fn", r.token_counts.fn}};
  return j.dump();
}

std::string report_to_text(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "sentence_f1: %.4f\ntoken_map: %.4f\ntoken_precision: %.4f\n"
                "token_recall: %.4f\ntoken_f1: %.4f\n",
                r.sentence_f1, r.token_map, r.token_precision, r.token_recall, r.token_f1);
  return buf;
}

}  // namespace zstag
