#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "admgs/checkpoint.hpp"
#include "admgs/config.hpp"
#include "admgs/dataset.hpp"
#include "admgs/grad_check.hpp"
#include "admgs/io.hpp"
#include "admgs/parallel.hpp"
#include "admgs/synth.hpp"
#include "admgs/trainer.hpp"
#include "admgs/version.hpp"
#include "export_layers.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace admgs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

void write_run_meta(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& argv,
                    const json& effective_config) {
  fs::create_directories(out_dir);
  json meta;
  meta["command"] = command;
  meta["argv"] = argv;
  meta["build_id"] = kBuildId;
  meta["version"] = kVersion;
  meta["config"] = effective_config;
  write_text_file((fs::path(out_dir) / "run_meta.json").string(),
                  meta.dump(2) + "\n");
}

// Leftover "--key.path=value" / "key.path=value" tokens become config
// overrides.
std::vector<std::string> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<std::string> overrides;
  for (std::string tok : extras) {
    if (tok.rfind("--", 0) == 0) tok = tok.substr(2);
    if (tok.find('=') == std::string::npos) {
      throw InvalidArgument("unrecognized argument '" + tok +
                            "' (overrides look like loss.lambda_decomp=0)");
    }
    overrides.push_back(tok);
  }
  return overrides;
}

TrainSession session_from_checkpoint(const std::string& checkpoint_path,
                                     const std::string& dataset_dir) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
  return TrainSession(load_dataset(dataset_dir), ckpt);
}

int cmd_gen_data(const std::string& suite, const std::string& spec_file,
                 const std::string& out_dir, std::int64_t seed_override,
                 const std::vector<std::string>& argv) {
  SyntheticSceneSpec spec;
  if (!spec_file.empty()) {
    spec = spec_from_json_text(read_text_file(spec_file));
  } else {
    spec = suite_by_name(suite);
  }
  if (seed_override >= 0) spec.seed = std::uint64_t(seed_override);
  const DatasetManifest man = generate_dataset(spec, out_dir);
  write_run_meta(out_dir, "gen-data", argv, json::parse(spec_to_json(spec)));
  std::printf("dataset '%s': %zu traversals, %zu frames -> %s\n",
              man.name.c_str(), man.traversals.size(), man.frame_count(),
              out_dir.c_str());
  return kExitOk;
}

int cmd_train(const std::string& dataset_dir, const std::string& config_file,
              const std::string& out_dir,
              const std::vector<std::string>& overrides,
              const std::string& resume_path,
              const std::vector<std::string>& argv) {
  std::unique_ptr<TrainSession> session;
  if (!resume_path.empty()) {
    session = std::make_unique<TrainSession>(
        session_from_checkpoint(resume_path, dataset_dir));
  } else {
    const RunConfig cfg = load_run_config(config_file, overrides);
    set_thread_cap(cfg.threads);
    session = std::make_unique<TrainSession>(load_dataset(dataset_dir), cfg);
  }
  write_run_meta(out_dir, "train", argv,
                 json::parse(run_config_to_json_text(session->config())));
  try {
    session->run(out_dir);
  } catch (const TrainingDivergence& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return kExitDivergence;
  }
  const EvalReport test = session->evaluate("test");
  std::printf("finished %lld iterations; test PSNR %.3f dB, SSIM %.4f\n",
              session->iteration(), test.mean_psnr_db, test.mean_ssim);
  return kExitOk;
}

int cmd_render(const std::string& checkpoint, const std::string& dataset_dir,
               int traversal, int frame, const std::string& out_dir,
               bool decompose, const std::vector<std::string>& argv) {
  TrainSession session = session_from_checkpoint(checkpoint, dataset_dir);
  const ForwardBundle<float>& bundle = session.render(traversal, frame);
  fs::create_directories(out_dir);
  write_run_meta(out_dir, decompose ? "decompose" : "render", argv,
                 json::parse(run_config_to_json_text(session.config())));
  write_png((fs::path(out_dir) / "rgb.png").string(), bundle.affine_rgb);
  if (decompose) {
    export_decomposition(bundle, out_dir);
  }
  std::printf("wrote %s (traversal %d, frame %d)\n", out_dir.c_str(), traversal,
              frame);
  return kExitOk;
}

int cmd_relight(const std::string& checkpoint, const std::string& dataset_dir,
                int material_traversal, int light_traversal, int frame,
                const std::string& out_dir,
                const std::vector<std::string>& argv) {
  TrainSession session = session_from_checkpoint(checkpoint, dataset_dir);
  fs::create_directories(out_dir);
  write_run_meta(out_dir, "relight", argv,
                 json::parse(run_config_to_json_text(session.config())));

  // Panels of the comparison strip: source scene, target illumination,
  // estimated material, relit result.
  const Image<float> source =
      session.render(material_traversal, frame).affine_rgb;
  const ForwardBundle<float>& target_bundle =
      session.render(light_traversal, frame);
  const Image<float> target = target_bundle.affine_rgb;
  const Image<float> material = target_bundle.render.material_map;

  const ForwardBundle<float>& relit_bundle =
      session.relight(material_traversal, light_traversal, frame);
  write_png((fs::path(out_dir) / "relit.png").string(), relit_bundle.affine_rgb);
  write_pfm((fs::path(out_dir) / "relit.pfm").string(), relit_bundle.affine_rgb);
  const Image<float> strip =
      hstrip({source, target, material, relit_bundle.affine_rgb});
  write_png((fs::path(out_dir) / "strip.png").string(), strip);
  std::printf("relit traversal %d with illumination of traversal %d -> %s\n",
              material_traversal, light_traversal, out_dir.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset_dir,
             const std::string& split, const std::string& out_dir,
             const std::vector<std::string>& argv) {
  TrainSession session = session_from_checkpoint(checkpoint, dataset_dir);
  const EvalReport rep = session.evaluate(split);
  const std::string table = eval_report_table(rep);
  std::fputs(table.c_str(), stdout);
  if (!out_dir.empty()) {
    write_run_meta(out_dir, "eval", argv,
                   json::parse(run_config_to_json_text(session.config())));
    write_text_file(
        (fs::path(out_dir) / ("eval_" + split + ".txt")).string(), table);
    write_text_file(
        (fs::path(out_dir) / ("eval_" + split + ".json")).string(),
        eval_report_json(rep));
  }
  return kExitOk;
}

int cmd_grad_check(const std::string& scale, std::uint64_t seed,
                   const std::string& inject_fault) {
  GradCheckOptions opts;
  opts.seed = seed;
  opts.full = scale == "full";
  opts.inject_fault = inject_fault;
  const GradCheckReport rep = run_grad_check(opts);
  std::fputs(format_grad_check_report(rep).c_str(), stdout);
  if (!rep.pass) {
    for (const auto& c : rep.classes) {
      if (c.worst_rel_err >= rep.tolerance) {
        std::fprintf(stderr, "gradient check failed for class '%s' at %s\n",
                     c.name.c_str(), c.worst_param.c_str());
      }
    }
  }
  return rep.pass ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADM-GS: appearance-decomposed Gaussian splatting engine"};
  app.set_version_flag("--version", std::string(kVersion) + " (" + kBuildId + ")");
  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker thread cap (0 = ADMGS_THREADS env or hardware)");

  std::vector<std::string> raw_argv(argv, argv + argc);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string suite, spec_file, out_dir;
  std::int64_t seed_override = -1;
  gen->add_option("--suite", suite,
                  "Built-in suite name (see --list-suites)");
  gen->add_option("--spec", spec_file, "Scene spec JSON file");
  gen->add_option("--out", out_dir, "Output dataset directory")->required();
  gen->add_option("--seed", seed_override, "Override the spec seed");
  bool list_suites = false;
  gen->add_flag("--list-suites", list_suites, "List built-in suites");

  // train
  auto* train = app.add_subcommand("train", "Train on a dataset");
  std::string dataset_dir, config_file, resume_path;
  train->add_option("dataset", dataset_dir, "Dataset directory")->required();
  train->add_option("--out", out_dir, "Run output directory")->required();
  train->add_option("--config", config_file, "JSON config file");
  train->add_option("--resume", resume_path, "Checkpoint to resume from");
  train->allow_extras();  // dotted-key config overrides

  // render / decompose
  auto* render = app.add_subcommand("render", "Render one frame");
  auto* decompose = app.add_subcommand(
      "decompose", "Render one frame and export decomposition layers");
  std::string checkpoint;
  int traversal = 0, frame = 0;
  for (CLI::App* c : {render, decompose}) {
    c->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    c->add_option("--dataset", dataset_dir, "Dataset directory")->required();
    c->add_option("--traversal", traversal, "Traversal id")->required();
    c->add_option("--frame", frame, "Frame index within the traversal")
        ->required();
    c->add_option("--out", out_dir, "Output directory")->required();
  }

  // relight
  auto* relight = app.add_subcommand(
      "relight", "Recompose one traversal's material with another's light");
  int material_traversal = 0, light_traversal = 0;
  relight->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  relight->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  relight->add_option("--material-traversal", material_traversal,
                      "Traversal providing geometry/material conditions")
      ->required();
  relight->add_option("--light-traversal", light_traversal,
                      "Traversal providing illumination")->required();
  relight->add_option("--frame", frame,
                      "Frame index within the light traversal")->required();
  relight->add_option("--out", out_dir, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate PSNR/SSIM on a split");
  std::string split = "test";
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  eval->add_option("--split", split, "train or test");
  eval->add_option("--out", out_dir, "Optional output directory");

  // grad-check
  auto* gc = app.add_subcommand(
      "grad-check", "Verify analytic gradients against finite differences");
  std::string gc_scale = "full";
  std::uint64_t gc_seed = 1;
  std::string inject_fault;
  gc->add_option("--scale", gc_scale, "small or full")
      ->check(CLI::IsMember({"small", "full"}));
  gc->add_option("--seed", gc_seed, "Scene seed");
  gc->add_option("--inject-fault", inject_fault,
                 "Corrupt one gradient class (negative-control fixture)")
      ->group("");  // hidden

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  set_thread_cap(threads);

  try {
    if (gen->parsed()) {
      if (list_suites) {
        for (const auto& n : suite_names()) std::printf("%s\n", n.c_str());
        return kExitOk;
      }
      if (suite.empty() == spec_file.empty()) {
        std::fprintf(stderr, "gen-data: pass exactly one of --suite/--spec\n");
        return kExitUsage;
      }
      return cmd_gen_data(suite, spec_file, out_dir, seed_override, raw_argv);
    }
    if (train->parsed()) {
      return cmd_train(dataset_dir, config_file, out_dir,
                       collect_overrides(train->remaining()), resume_path,
                       raw_argv);
    }
    if (render->parsed()) {
      return cmd_render(checkpoint, dataset_dir, traversal, frame, out_dir,
                        false, raw_argv);
    }
    if (decompose->parsed()) {
      return cmd_render(checkpoint, dataset_dir, traversal, frame, out_dir,
                        true, raw_argv);
    }
    if (relight->parsed()) {
      return cmd_relight(checkpoint, dataset_dir, material_traversal,
                         light_traversal, frame, out_dir, raw_argv);
    }
    if (eval->parsed()) {
      return cmd_eval(checkpoint, dataset_dir, split, out_dir, raw_argv);
    }
    if (gc->parsed()) {
      return cmd_grad_check(gc_scale, gc_seed, inject_fault);
    }
  } catch (const TrainingDivergence& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const MissingTraversal& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerificationFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerificationFailure;
  }
  return kExitUsage;
}
