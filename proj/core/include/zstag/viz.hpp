#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace zstag {

struct HeatmapSentence {
  std::vector<std::string> tokens;
  std::vector<double> intensity;  // [0,1] per token
};

// Self-contained HTML heatmap: each token rendered with a blue background
// whose opacity equals the intensity (0 = white, 1 = full blue). Token text
// is HTML-escaped; no external assets.
void write_heatmap_html(const std::filesystem::path& path, const std::string& title,
                        const std::vector<HeatmapSentence>& sentences);

std::string html_escape(const std::string& text);

}  // namespace zstag
