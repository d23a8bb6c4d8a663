#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>

#include "fixtures.hpp"

namespace cli_runner {

namespace fs = std::filesystem;

inline const char* const kTinyConfig = R"({
  "task": "synthetic2d",
  "model": {"num_layers": 3, "hidden_width": 16},
  "meta": {"epochs": 1, "fit_steps": 5, "val_every": 2, "val_fit_steps": 2, "checkpoint_every": 3},
  "head": {"max_epochs": 3, "batch_rows": 256},
  "data": {"synthetic": {"extent": 16, "train": 4, "val": 2, "test": 2}},
  "eval": {"overfit_checkpoints": [0, 2, 5], "sensitivity": {"trials": 1}}
})";

// Exit status of the CLI with `args`; output goes to `log`.
inline int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(INRSEG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = fixtures::slurp(e.path());
  return files;
}

/// Every command, in pipeline order, into `out` with `<root>/cfg.json`.
/// Returns the first failing command line, or an empty string.
inline std::string run_all(const fs::path& root, const fs::path& out) {
  const std::string g = "--config " + (root / "cfg.json").string() + " --out " + out.string();
  const fs::path log = root / "log.txt";
  for (const std::string& cmd :
       {g + " gen-synth", g + " meta-train", g + " fit-head",
        g + " segment --image " + (out / "synth_0006_image.npy").string() + " --upscale 2 --probs",
        g + " eval --overfit-sweep --sensitivity --pca 5", g + " eval --ablation"})
    if (run(cmd, log) != 0) return cmd;
  return {};
}

}  // namespace cli_runner
