#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracles {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-8);
}

// Central finite difference d f / d slot at step h.
template <typename F>
double central_diff(F&& f, double& slot, double h = 1e-5) {
  const double orig = slot;
  slot = orig + h;
  const double fp = f();
  slot = orig - h;
  const double fm = f();
  slot = orig;
  return (fp - fm) / (2.0 * h);
}

// Average precision without sorting: the rank of item i is one plus the
// number of items that beat it (higher score, or equal score and earlier
// position). Precision at that rank counts positives that rank at or above.
inline double brute_force_ap(const std::vector<double>& scores, const std::vector<int>& gold) {
  const std::size_t n = scores.size();
  double sum = 0.0;
  long positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i] != 1) continue;
    ++positives;
    long rank = 1;
    long positives_at_or_above = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool beats = scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
      if (j != i && beats) ++rank;
      if (gold[j] == 1 && (j == i || beats)) ++positives_at_or_above;
    }
    sum += static_cast<double>(positives_at_or_above) / static_cast<double>(rank);
  }
  return positives > 0 ? sum / static_cast<double>(positives) : 0.0;
}

// One AdaDelta coordinate, straight from the accumulator recurrences.
struct ScalarAdaDelta {
  double rho, eps, lr;
  double acc_g = 0.0, acc_x = 0.0;
  double step(double g) {
    acc_g = rho * acc_g + (1.0 - rho) * g * g;
    const double dx = -std::sqrt(acc_x + eps) / std::sqrt(acc_g + eps) * g;
    acc_x = rho * acc_x + (1.0 - rho) * dx * dx;
    return lr * dx;
  }
};

// Relative-frequency counts by direct enumeration: lowercase, pad with
// markers, walk every n-gram with explicit loops, deduplicate per sentence.
struct BruteRelFreq {
  std::map<std::string, std::pair<long, long>> counts;  // feature -> (pos, neg)

  static std::string lower(std::string s) {
    for (char& c : s) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return s;
  }

  static std::vector<std::string> pad(const std::vector<std::string>& tokens) {
    std::vector<std::string> s{"<s>"};
    for (const auto& t : tokens) s.push_back(lower(t));
    s.push_back("</s>");
    return s;
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string key;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) key.push_back('\x1f');
      key += parts[i];
    }
    return key;
  }

  void add_sentence(const std::vector<std::string>& tokens, int label) {
    const auto s = pad(tokens);
    std::set<std::string> features;
    for (std::size_t i = 0; i < s.size(); ++i) {
      features.insert(join({s[i]}));
      if (i + 1 < s.size()) features.insert(join({s[i], s[i + 1]}));
      if (i + 2 < s.size()) features.insert(join({s[i], s[i + 1], s[i + 2]}));
    }
    for (const auto& f : features) {
      if (label == 1) {
        counts[f].first++;
      } else {
        counts[f].second++;
      }
    }
  }

  // Features covering token position p (0-based in the unpadded sentence).
  std::vector<std::string> covering(const std::vector<std::string>& tokens, std::size_t p) const {
    const auto s = pad(tokens);
    const std::size_t sp = p + 1;
    std::vector<std::string> out;
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t i = 0; i + n <= s.size(); ++i) {
        if (sp < i || sp >= i + n) continue;
        std::vector<std::string> parts(s.begin() + i, s.begin() + i + n);
        out.push_back(join(parts));
      }
    }
    return out;
  }

  double score(const std::vector<std::string>& tokens, std::size_t p) const {
    double product = 1.0;
    long seen = 0;
    for (const auto& f : covering(tokens, p)) {
      auto it = counts.find(f);
      if (it == counts.end()) continue;
      const double r = static_cast<double>(it->second.first) /
                       static_cast<double>(it->second.first + it->second.second);
      product *= r;
      ++seen;
    }
    if (seen == 0) return 0.0;
    return std::pow(product, 1.0 / static_cast<double>(seen));
  }
};

}  // namespace oracles
