#include <exception>
#include <iostream>

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "commands.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/parallel.hpp"

namespace {

// Keeps large per-step buffers on the heap instead of fresh mmap pages.
void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int fail(int code, const std::exception& e) {
  std::cerr << "inrseg: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace inrseg;
  tune_allocator();

  CLI::App app{"Meta-learned implicit neural representations for segmentation", "inrseg"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions g;
  app.add_option("--config", g.config, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--task", g.task,
                 "task preset when no config is given (seg2d_coarse, seg2d_fine, seg3d, "
                 "synthetic2d, synthetic3d)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads, 0 for all cores");
  app.add_option("--manifest", g.manifest, "dataset manifest instead of generated data");

  cli::GenSynthOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "write the synthetic benchmark as NPY files");
  gen_cmd->add_option("--train", gen.train, "training subjects");
  gen_cmd->add_option("--val", gen.val, "validation subjects");
  gen_cmd->add_option("--test", gen.test, "test subjects");

  cli::MetaTrainOptions meta;
  auto* meta_cmd = app.add_subcommand("meta-train", "meta-learn the initialization");
  meta_cmd->add_option("--resume", meta.resume, "continue from a meta checkpoint");

  cli::FitHeadOptions head;
  auto* head_cmd = app.add_subcommand("fit-head", "refine the segmentation head");
  head_cmd->add_option("--checkpoint", head.checkpoint, "meta checkpoint (default <out>/meta_best.ckpt)");

  cli::SegmentOptions seg;
  auto* seg_cmd = app.add_subcommand("segment", "fit one image and decode its labels");
  seg_cmd->add_option("--checkpoint", seg.checkpoint, "model checkpoint (default <out>/model.ckpt)");
  seg_cmd->add_option("--image", seg.image, "image NPY")->required();
  seg_cmd->add_option("--steps", seg.steps, "fitting steps T_f");
  seg_cmd->add_option("--upscale", seg.upscale, "also decode on a k-times denser grid")
      ->check(CLI::PositiveNumber);
  seg_cmd->add_flag("--probs", seg.probs, "write class probabilities");

  cli::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate on the test split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint (default <out>/model.ckpt)");
  eval_cmd->add_flag("--ablation", ev.ablation, "train and compare all initialization strategies");
  eval_cmd->add_flag("--overfit-sweep", ev.overfit_sweep, "score fits at the overfit checkpoints");
  eval_cmd->add_flag("--sensitivity", ev.sensitivity, "rotation and translation sensitivity");
  eval_cmd->add_option("--pca", ev.pca, "principal component maps of the features");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig c = cli::resolve_config(g);
    if (c.threads > 0) set_num_threads(c.threads);
    if (*gen_cmd) return cli::cmd_gen_synth(c, gen);
    if (*meta_cmd) return cli::cmd_meta_train(c, meta);
    if (*head_cmd) return cli::cmd_fit_head(c, head);
    if (*seg_cmd) return cli::cmd_segment(c, seg);
    if (*eval_cmd) return cli::cmd_eval(c, ev);
  } catch (const ConfigError& e) {
    return fail(2, e);
  } catch (const InputError& e) {
    return fail(2, e);
  } catch (const DataError& e) {
    return fail(3, e);
  } catch (const DivergenceError& e) {
    return fail(4, e);
  } catch (const std::exception& e) {
    return fail(1, e);
  }
  return 1;
}
