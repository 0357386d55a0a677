#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "admgs/losses.hpp"

namespace admgs {

struct LrConfig {
  double position = 1.6e-4;
  double position_final_scale = 0.01;  // exponential decay target multiplier
  double scale = 5e-3;
  double rotation = 1e-3;
  double opacity = 5e-2;
  double feature = 2.5e-3;
  double mlp = 2.5e-3;
  double embedding = 2.5e-3;
  double affine = 1e-3;
};

struct ModelConfig {
  int d_geo = 16;
  int d_emb = 16;
  int d_obj = 8;
  int sky_count = 384;
  double sky_radius_factor = 4.0;  // × scene radius from the manifest
  double init_jitter = 0.01;       // σ of position noise, scene units
  int max_static_points = 0;       // 0 = use the whole init cloud
  double init_opacity = 0.1;
  double init_scale_factor = 0.8;  // × mean 3-NN distance
  double init_feature_std = 0.1;
  double init_embedding_std = 0.1;
  bool light_geo_inputs = true;    // feed γ₁(n), γ₄(r) into the light field
};

struct TrainSection {
  long long iterations = 3000;
  double warmup_fraction = 0.1;  // decomposition-loss ramp length
  long long checkpoint_interval = 0;  // 0: final checkpoint only
  long long log_interval = 1;
  bool enable_gating = true;
  bool enable_material_supervision = true;
  bool enable_normal_supervision = true;
  bool rigid_objects = false;
  bool save_optimizer = true;
};

struct RasterSection {
  int tile = 16;
  double stop_transmittance = 1e-4;
  double alpha_cap = 0.999;
  double extent_sigma = 3.0;
  double lowpass = 0.3;
  double near_plane = 0.01;
  std::vector<double> background{0, 0, 0};
};

struct RunConfig {
  std::uint64_t seed = 1;
  bool reproducible = true;
  int threads = 0;  // 0 = ADMGS_THREADS env or hardware
  TrainSection train;
  LossWeights loss;
  LrConfig lr;
  ModelConfig model;
  RasterSection raster;

  void validate() const;
};

// Parses JSON text; unknown keys anywhere are rejected.
RunConfig parse_run_config_text(const std::string& text);

// Loads `config_path` (empty: defaults) and applies dotted-key overrides
// of the form "loss.lambda_decomp=0" in order.
RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides);

std::string run_config_to_json_text(const RunConfig& cfg);

}  // namespace admgs
