#pragma once

#include <filesystem>

#include "zstag/corpus.hpp"
#include "zstag/labelers.hpp"
#include "zstag/model.hpp"

namespace zstag {

struct LoadedModel {
  ModelParams params;
  Vocab vocab;
};

// Single self-describing file: magic header, version integer, a JSON metadata
// block (dimension config, model kind, vocabulary and its hash) and the named
// parameter tensors as raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocab& vocab);
LoadedModel load_checkpoint(const std::filesystem::path& path);

// Relative-frequency counts as a sorted JSON document.
void save_relfreq(const std::filesystem::path& path, const RelFreqModel& model);
RelFreqModel load_relfreq(const std::filesystem::path& path);

}  // namespace zstag
