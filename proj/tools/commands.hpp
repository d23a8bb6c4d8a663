#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "inrseg/run_config.hpp"

namespace inrseg::cli {

struct GlobalOptions {
  std::filesystem::path config;
  std::string task;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::filesystem::path> manifest;
};

// Config file (or the task preset) with the command-line overrides applied.
RunConfig resolve_config(const GlobalOptions& g);

struct GenSynthOptions {
  std::optional<std::size_t> train, val, test;
};

struct MetaTrainOptions {
  std::filesystem::path resume;
};

struct FitHeadOptions {
  std::filesystem::path checkpoint;  // default: <out>/meta_best.ckpt
};

struct SegmentOptions {
  std::filesystem::path checkpoint;  // default: <out>/model.ckpt
  std::filesystem::path image;
  std::optional<std::size_t> steps;
  std::size_t upscale = 1;
  bool probs = false;
};

struct EvalOptions {
  std::filesystem::path checkpoint;  // default: <out>/model.ckpt
  bool ablation = false;
  bool overfit_sweep = false;
  bool sensitivity = false;
  std::size_t pca = 0;
};

int cmd_gen_synth(const RunConfig& c, const GenSynthOptions& o);
int cmd_meta_train(const RunConfig& c, const MetaTrainOptions& o);
int cmd_fit_head(const RunConfig& c, const FitHeadOptions& o);
int cmd_segment(const RunConfig& c, const SegmentOptions& o);
int cmd_eval(const RunConfig& c, const EvalOptions& o);

}  // namespace inrseg::cli
