#include "zstag/viz.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "zstag/errors.hpp"

namespace zstag {

std::string html_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void write_heatmap_html(const std::filesystem::path& path, const std::string& title,
                        const std::vector<HeatmapSentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>"
      << html_escape(title) << "</title>\n"
      << "<style>\nbody { font-family: sans-serif; margin: 2em; }\n"
      << ".sentence { margin: 0.6em 0; line-height: 1.9; }\n"
      << ".tok { padding: 2px 4px; margin: 0 1px; border-radius: 3px; }\n"
      << "</style>\n</head>\n<body>\n<h2>" << html_escape(title) << "</h2>\n";
  char buf[64];
  for (const HeatmapSentence& s : sentences) {
    if (s.tokens.size() != s.intensity.size()) {
      throw ContractError("write_heatmap_html: token/intensity size mismatch");
    }
    out << "<div class=\"sentence\">";
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const double alpha = std::clamp(s.intensity[t], 0.0, 1.0);
      std::snprintf(buf, sizeof(buf), "%.4f", alpha);
      out << "<span class=\"tok\" style=\"background-color: rgba(30,100,200," << buf << ")\">"
          << html_escape(s.tokens[t]) << "</span> ";
    }
    out << "</div>\n";
  }
  out << "</body>\n</html>\n";
}

}  // namespace zstag
