#pragma once

#include <memory>
#include <string>
#include <vector>

#include "admgs/adam.hpp"
#include "admgs/checkpoint.hpp"
#include "admgs/config.hpp"
#include "admgs/dataset.hpp"
#include "admgs/pipeline.hpp"
#include "admgs/registry.hpp"
#include "admgs/rng.hpp"

namespace admgs {

struct StepRecord {
  long long iteration = 0;  // 0-based index of the completed step
  int traversal = 0;
  int frame = 0;  // frame index within the traversal
  LossBreakdown<float> losses;
  double lambda_decomp_eff = 0;
  std::vector<std::pair<std::string, double>> grad_norms;  // per group
  double timing_ms = 0;
};

struct EvalRow {
  int traversal = 0;
  int frame = 0;  // index within the traversal
  double psnr_db = 0;
  double ssim = 0;
};

struct EvalReport {
  std::string split;
  std::vector<EvalRow> rows;
  double mean_psnr_db = 0;
  double mean_ssim = 0;
};

std::string eval_report_table(const EvalReport& report);
std::string eval_report_json(const EvalReport& report);

// Owns the scene, fields, optimizer, and data cursor for one training run.
class TrainSession {
 public:
  // Fresh session: scene initialized from the dataset's point cloud.
  TrainSession(LoadedDataset dataset, const RunConfig& config);
  // Resume from a checkpoint (dataset must match the one it was trained on).
  TrainSession(LoadedDataset dataset, const LoadedCheckpoint& ckpt);

  TrainSession(const TrainSession&) = delete;
  TrainSession& operator=(const TrainSession&) = delete;

  StepRecord step();

  // Full loop: step-log records, periodic checkpoints, final checkpoint
  // and evaluation tables under out_dir. Throws TrainingDivergence after
  // writing a diagnostic record (the last good checkpoint is retained).
  void run(const std::string& out_dir);

  EvalReport evaluate(const std::string& split);

  // Renders the given frame's camera; plain render when both ids match.
  const ForwardBundle<float>& render(int traversal, int frame_in_traversal);
  const ForwardBundle<float>& relight(int material_traversal,
                                      int light_traversal,
                                      int frame_in_traversal);

  void save(const std::string& path) const;

  long long iteration() const { return iteration_; }
  const RunConfig& config() const { return config_; }
  const LoadedDataset& dataset() const { return dataset_; }
  SceneGraph<float>& scene() { return scene_; }
  FieldSet<float>& fields() { return fields_; }
  PipelineOptions pipeline_options() const { return pipeline_opts_; }
  double lambda_decomp_effective(long long iteration) const;

 private:
  void init_from_cloud();
  void finish_setup();
  double lr_for(const TensorRef<float>& entry) const;
  void renormalize_rotations();
  const Observation<float>& next_observation(int* traversal, int* frame);

  LoadedDataset dataset_;
  RunConfig config_;
  SceneGraph<float> scene_;
  FieldSet<float> fields_;
  ParamRegistry<float> registry_;
  AdamState<float> adam_;
  Rng rng_;
  PipelineOptions pipeline_opts_;
  long long iteration_ = 0;
  int cursor_traversal_ = 0;
  std::vector<long long> cursor_frames_;
  ForwardBundle<float> bundle_;  // reused across steps/renders
};

}  // namespace admgs
