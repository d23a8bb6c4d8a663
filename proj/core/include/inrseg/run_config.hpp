#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "inrseg/harness.hpp"
#include "inrseg/meta_learning.hpp"
#include "inrseg/seg_pipeline.hpp"
#include "inrseg/siren.hpp"
#include "inrseg/synthetic.hpp"

namespace inrseg {

enum class Task { kSeg2dCoarse, kSeg2dFine, kSeg3d, kSynthetic2d, kSynthetic3d };

const char* task_name(Task t);
Task parse_task(const std::string& name);  // throws ConfigError

struct SynthCounts {
  std::size_t train = 64;
  std::size_t val = 16;
  std::size_t test = 16;
};

struct EvalConfig {
  std::vector<std::size_t> overfit_checkpoints{2, 10, 100, 1000, 5000};
  SensitivityConfig sensitivity;
  std::size_t pca_components = 3;
  std::size_t upscale = 2;
};

/// Everything that determines a run. A task preset supplies the defaults;
/// a config file may override any field.
struct RunConfig {
  Task task = Task::kSynthetic2d;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: all available cores
  std::filesystem::path out_dir = "out";
  SirenConfig model;
  MetaConfig meta;
  HeadTrainConfig head;
  std::filesystem::path manifest;  // empty: generate the synthetic benchmark in memory
  SynthSpec synth;
  SynthCounts counts;
  EvalConfig eval;

  PipelineConfig pipeline() const;
  void validate() const;  // throws ConfigError
};

RunConfig preset(Task task);

/// Parses a JSON config document. "task" selects the preset the remaining keys
/// override. Unknown keys and ill-typed values raise ConfigError naming the key.
/// Relative paths are kept as written.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON form of a config; parse_run_config(to_json(c)) reproduces c.
std::string to_json(const RunConfig& config);

}  // namespace inrseg
