#pragma once

#include <span>
#include <string>
#include <vector>

namespace zstag {

struct PrfCounts {
  long tp = 0, fp = 0, fn = 0;
};

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  PrfCounts counts;
};

// Positive class = 1; zero denominators map to 0 by convention.
Prf binary_prf(std::span<const int> pred, std::span<const int> gold);

double sentence_f1(std::span<const int> pred, std::span<const int> gold);

enum class MapMode {
  kSkipNoPositive,  // sentences without gold-positive tokens are not scored
  kZeroNoPositive,  // such sentences contribute AP = 0
};

// Per-sentence average precision of the token ranking induced by the scores,
// averaged over scorable sentences. Ties rank the earlier token first. Throws
// ContractError when no sentence is scorable.
double mean_average_precision(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::vector<int>>& gold,
                              MapMode mode = MapMode::kSkipNoPositive);

// Single AP over one corpus-wide ranking of all tokens (ties by sentence then
// token position). Sensitivity-analysis companion to the per-sentence MAP.
double global_average_precision(const std::vector<std::vector<double>>& scores,
                                const std::vector<std::vector<int>>& gold);

struct EvalReport {
  double sentence_f1 = 0.0;
  double token_map = 0.0;
  double token_precision = 0.0;
  double token_recall = 0.0;
  double token_f1 = 0.0;
  PrfCounts sentence_counts;
  PrfCounts token_counts;
};

// Arithmetic mean of every metric; counts are summed for reference.
EvalReport average_reports(std::span<const EvalReport> reports);

std::string report_to_json(const EvalReport& report, const std::string& method);
std::string report_to_text(const EvalReport& report);  // 4 decimal places

}  // namespace zstag
