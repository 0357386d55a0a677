#include "admgs/trainer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "admgs/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace admgs {

namespace {

double json_safe(double v) { return std::isfinite(v) ? v : 0.0; }

// Mean distance to the 3 nearest neighbors, brute force (init-time only).
std::vector<double> knn_mean_distance(const std::vector<Vec3<double>>& pts) {
  const std::size_t n = pts.size();
  std::vector<double> out(n, 0.1);
  for (std::size_t i = 0; i < n; ++i) {
    double best[3] = {1e30, 1e30, 1e30};
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d2 = (pts[i] - pts[j]).squared_norm();
      if (d2 < best[2]) {
        best[2] = d2;
        if (best[2] < best[1]) std::swap(best[1], best[2]);
        if (best[1] < best[0]) std::swap(best[0], best[1]);
      }
    }
    double acc = 0;
    int cnt = 0;
    for (double b : best) {
      if (b < 1e29) {
        acc += std::sqrt(b);
        ++cnt;
      }
    }
    out[i] = cnt ? acc / cnt : 0.1;
  }
  return out;
}

}  // namespace

std::string eval_report_table(const EvalReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "split: %s (%zu views)\n",
                report.split.c_str(), report.rows.size());
  out += line;
  std::snprintf(line, sizeof(line), "%10s %8s %12s %10s\n", "traversal",
                "frame", "psnr_db", "ssim");
  out += line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%10d %8d %12.3f %10.4f\n", r.traversal,
                  r.frame, r.psnr_db, r.ssim);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%10s %8s %12.3f %10.4f\n", "mean", "",
                report.mean_psnr_db, report.mean_ssim);
  out += line;
  return out;
}

std::string eval_report_json(const EvalReport& report) {
  json j;
  j["split"] = report.split;
  j["per_view"] = json::array();
  auto num = [](double v) {
    return std::isfinite(v) ? json(v) : json("inf");
  };
  for (const auto& r : report.rows) {
    j["per_view"].push_back({{"frame", r.frame},
                             {"traversal", r.traversal},
                             {"psnr_db", num(r.psnr_db)},
                             {"ssim", r.ssim}});
  }
  j["aggregate"] = {{"psnr_db", num(report.mean_psnr_db)},
                    {"ssim", report.mean_ssim},
                    {"count", report.rows.size()}};
  return j.dump(2) + "\n";
}

TrainSession::TrainSession(LoadedDataset dataset, const RunConfig& config)
    : dataset_(std::move(dataset)), config_(config),
      rng_(config.seed) {
  config_.validate();
  FieldConfig fc;
  fc.d_geo = config_.model.d_geo;
  fc.d_emb = config_.model.d_emb;
  fc.d_obj = config_.model.d_obj;
  fc.light_geo_inputs = config_.model.light_geo_inputs;
  fields_ = FieldSet<float>::make(fc, rng_);
  init_from_cloud();
  finish_setup();
  registry_ = collect_params(scene_, fields_);
  adam_.init(registry_);
}

TrainSession::TrainSession(LoadedDataset dataset, const LoadedCheckpoint& ckpt)
    : dataset_(std::move(dataset)),
      config_(parse_run_config_text(ckpt.state.config_json)),
      rng_(0) {
  scene_ = ckpt.scene;
  fields_ = ckpt.fields;
  finish_setup();
  registry_ = collect_params(scene_, fields_);
  if (ckpt.has_optimizer) {
    adam_ = ckpt.adam;
  } else {
    adam_.init(registry_);
  }
  iteration_ = ckpt.state.iteration;
  rng_.set_state(ckpt.state.rng_state);
  cursor_traversal_ = ckpt.state.cursor_traversal;
  cursor_frames_ = ckpt.state.cursor_frames;
  cursor_frames_.resize(std::size_t(dataset_.traversal_count()), 0);
  if (scene_.traversals.count() != std::size_t(dataset_.traversal_count())) {
    throw InvalidArgument("resume: checkpoint traversal count differs from dataset");
  }
}

void TrainSession::finish_setup() {
  pipeline_opts_.projection.near_plane = config_.raster.near_plane;
  pipeline_opts_.projection.lowpass = config_.raster.lowpass;
  pipeline_opts_.raster.tile = config_.raster.tile;
  pipeline_opts_.raster.stop_transmittance = config_.raster.stop_transmittance;
  pipeline_opts_.raster.alpha_cap = config_.raster.alpha_cap;
  pipeline_opts_.raster.extent_sigma = config_.raster.extent_sigma;
  pipeline_opts_.raster.background = {config_.raster.background[0],
                                      config_.raster.background[1],
                                      config_.raster.background[2]};
  pipeline_opts_.compose.rigid_objects = config_.train.rigid_objects;
  pipeline_opts_.enable_gating = config_.train.enable_gating;
  pipeline_opts_.supervise_material = config_.train.enable_material_supervision;
  pipeline_opts_.supervise_normal = config_.train.enable_normal_supervision;
  cursor_frames_.resize(std::size_t(dataset_.traversal_count()), 0);
}

void TrainSession::init_from_cloud() {
  const PointCloud& cloud = dataset_.init_points;
  if (cloud.positions.empty()) {
    throw InvalidArgument("trainer: dataset has an empty init point cloud");
  }
  std::vector<std::size_t> picks(cloud.positions.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  const std::size_t want =
      config_.model.max_static_points > 0
          ? std::min<std::size_t>(std::size_t(config_.model.max_static_points),
                                  picks.size())
          : picks.size();
  if (want < picks.size()) {
    // Deterministic Fisher-Yates, then keep the first `want`.
    for (std::size_t i = picks.size() - 1; i > 0; --i) {
      const std::size_t j = std::size_t(rng_.uniform_index(i + 1));
      std::swap(picks[i], picks[j]);
    }
    picks.resize(want);
    std::sort(picks.begin(), picks.end());
  }

  std::vector<Vec3<double>> pos(want);
  for (std::size_t i = 0; i < want; ++i) {
    pos[i] = cloud.positions[picks[i]] +
             Vec3<double>{rng_.normal(0, config_.model.init_jitter),
                          rng_.normal(0, config_.model.init_jitter),
                          rng_.normal(0, config_.model.init_jitter)};
  }
  const std::vector<double> nn = knn_mean_distance(pos);

  auto& prims = scene_.static_node.prims;
  prims.resize(want, std::size_t(config_.model.d_geo));
  const double opacity_logit =
      std::log(config_.model.init_opacity / (1.0 - config_.model.init_opacity));
  for (std::size_t i = 0; i < want; ++i) {
    prims.position.set_vec3(i, {float(pos[i].x), float(pos[i].y),
                                float(pos[i].z)});
    const double s =
        std::clamp(nn[i] * config_.model.init_scale_factor, 1e-4, 1.0);
    const float ls = float(std::log(s));
    prims.log_scale.set_vec3(i, {ls, ls, ls});
    // Scales start isotropic; the rotation frame puts the cloud normal on
    // the first axis, which is also the axis the flatness hinge shrinks
    // first, so the extracted normal starts aligned with the surface.
    Vec3<double> n = cloud.normals[picks[i]];
    if (n.norm() < 1e-9) n = {0, 0, 1};
    n = n.normalized();
    Vec3<double> up = std::abs(n.z) < 0.9 ? Vec3<double>{0, 0, 1}
                                          : Vec3<double>{1, 0, 0};
    const Vec3<double> t1 = n.cross(up).normalized();
    const Vec3<double> t2 = n.cross(t1);
    Mat3<double> frame;
    for (int r = 0; r < 3; ++r) {
      frame.m[r][0] = n[r];
      frame.m[r][1] = t1[r];
      frame.m[r][2] = t2[r];
    }
    const Quat<double> q = quat_from_matrix(frame);
    prims.rotation.set_quat(i, {float(q.w), float(q.x), float(q.y), float(q.z)});
    prims.opacity_logit.v[i] = float(opacity_logit);
    for (int d = 0; d < config_.model.d_geo; ++d) {
      prims.f_geo.at(i, std::size_t(d)) =
          float(rng_.normal(0, config_.model.init_feature_std));
    }
  }

  const double sky_radius =
      std::max(1.0, dataset_.manifest.scene_radius) *
      config_.model.sky_radius_factor;
  scene_.sky_node = sky_placement<float>(float(sky_radius),
                                         config_.model.sky_count, config_.seed,
                                         std::size_t(config_.model.d_geo));

  scene_.traversals.resize(std::size_t(dataset_.traversal_count()),
                           std::size_t(config_.model.d_emb));
  for (auto& v : scene_.traversals.embedding.v) {
    v = float(rng_.normal(0, config_.model.init_embedding_std));
  }
}

double TrainSession::lambda_decomp_effective(long long iteration) const {
  const double warmup =
      config_.train.warmup_fraction * double(config_.train.iterations);
  if (warmup <= 0) return config_.loss.lambda_decomp;
  const double ramp = std::min(1.0, double(iteration) / warmup);
  return config_.loss.lambda_decomp * ramp;
}

double TrainSession::lr_for(const TensorRef<float>& entry) const {
  switch (entry.group) {
    case ParamGroup::Position: {
      const double progress =
          config_.train.iterations > 1
              ? double(iteration_) / double(config_.train.iterations - 1)
              : 1.0;
      return config_.lr.position *
             std::pow(config_.lr.position_final_scale, progress);
    }
    case ParamGroup::Scale: return config_.lr.scale;
    case ParamGroup::Rotation: return config_.lr.rotation;
    case ParamGroup::Opacity: return config_.lr.opacity;
    case ParamGroup::Feature: return config_.lr.feature;
    case ParamGroup::Mlp: return config_.lr.mlp;
    case ParamGroup::Embedding: return config_.lr.embedding;
    case ParamGroup::Affine: return config_.lr.affine;
  }
  return config_.lr.mlp;
}

void TrainSession::renormalize_rotations() {
  auto renorm = [](PrimitiveBlock<float>& b) {
    for (std::size_t i = 0; i < b.count(); ++i) {
      b.rotation.set_quat(i, b.rotation.quat(i).normalized());
    }
  };
  renorm(scene_.static_node.prims);
  for (auto& obj : scene_.objects) renorm(obj.prims);
}

const Observation<float>& TrainSession::next_observation(int* traversal,
                                                         int* frame) {
  const int n_trav = dataset_.traversal_count();
  // Round-robin over traversals, cycling frames within each.
  for (int tries = 0; tries < n_trav; ++tries) {
    const int m = cursor_traversal_;
    cursor_traversal_ = (cursor_traversal_ + 1) % n_trav;
    const auto& pool = dataset_.train_by_traversal[std::size_t(m)];
    if (pool.empty()) continue;
    const long long k = cursor_frames_[std::size_t(m)]++;
    const int idx = pool[std::size_t(k % (long long)pool.size())];
    *traversal = m;
    *frame = dataset_.frame_in_traversal[std::size_t(idx)];
    return dataset_.frames[std::size_t(idx)];
  }
  throw InvalidArgument("trainer: no training frames available");
}

StepRecord TrainSession::step() {
  const auto t0 = std::chrono::steady_clock::now();
  StepRecord rec;
  rec.iteration = iteration_;
  const Observation<float>& obs = next_observation(&rec.traversal, &rec.frame);
  rec.lambda_decomp_eff = lambda_decomp_effective(iteration_);

  registry_.zero_grad();
  render_view(scene_, fields_, obs.camera, obs.traversal, obs.timestamp,
              pipeline_opts_, bundle_);
  LossCaches<float> caches;
  rec.losses = compute_losses(bundle_, scene_, obs, config_.loss,
                              rec.lambda_decomp_eff, &caches, iteration_);
  backward_losses(bundle_, scene_, fields_, obs, config_.loss,
                  rec.lambda_decomp_eff, caches);

  // Gradient norms per group, before the update.
  double norms[8] = {};
  for (const auto& e : registry_.entries) {
    if (!e.trainable) continue;
    double acc = 0;
    for (const float g : e.tensor->g) acc += double(g) * double(g);
    norms[int(e.group)] += acc;
  }
  for (int g = 0; g < 8; ++g) {
    rec.grad_norms.emplace_back(param_group_name(ParamGroup(g)),
                                std::sqrt(norms[g]));
  }

  adam_step(registry_, adam_, [this](const TensorRef<float>& e) {
    return lr_for(e);
  });
  renormalize_rotations();
  ++iteration_;

  rec.timing_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return rec;
}

void TrainSession::save(const std::string& path) const {
  CheckpointState st;
  st.iteration = iteration_;
  st.adam_step = adam_.step;
  st.rng_state = rng_.state();
  st.cursor_traversal = cursor_traversal_;
  st.cursor_frames = cursor_frames_;
  st.config_json = run_config_to_json_text(config_);
  // collect_params takes non-const references but only reads here.
  auto& self = const_cast<TrainSession&>(*this);
  save_checkpoint(path, self.scene_, self.fields_,
                  config_.train.save_optimizer ? &self.adam_ : nullptr, st);
}

void TrainSession::run(const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "config.json").string(),
                  run_config_to_json_text(config_));
  std::ofstream log((fs::path(out_dir) / "train_log.jsonl").string(),
                    std::ios::app);
  if (!log) throw IoError("trainer: cannot open train_log.jsonl");

  const long long total = config_.train.iterations;
  while (iteration_ < total) {
    StepRecord rec;
    try {
      rec = step();
    } catch (const TrainingDivergence& e) {
      json j = {{"iteration", e.iteration()},
                {"component", e.component()},
                {"error", e.what()}};
      write_text_file((fs::path(out_dir) / "divergence.json").string(),
                      j.dump(2) + "\n");
      throw;
    }
    if (config_.train.log_interval > 0 &&
        (rec.iteration % config_.train.log_interval == 0 ||
         rec.iteration + 1 == total)) {
      json j;
      j["iteration"] = rec.iteration;
      j["traversal"] = rec.traversal;
      j["frame"] = rec.frame;
      j["total"] = json_safe(double(rec.losses.total));
      j["photometric"] = json_safe(double(rec.losses.photometric));
      j["ssim"] = json_safe(double(rec.losses.ssim_value));
      j["material"] = json_safe(double(rec.losses.material));
      j["normal"] = json_safe(double(rec.losses.normal));
      j["scale"] = json_safe(double(rec.losses.scale));
      j["lambda_decomp_eff"] = rec.lambda_decomp_eff;
      json jn;
      for (const auto& [name, v] : rec.grad_norms) jn[name] = json_safe(v);
      j["grad_norms"] = std::move(jn);
      if (!config_.reproducible) {
        // Wall-clock timing is omitted under the reproducibility flag so
        // two identical runs produce byte-identical logs.
        j["timing_ms"] = rec.timing_ms;
      }
      log << j.dump() << "\n";
    }
    if (config_.train.checkpoint_interval > 0 &&
        iteration_ % config_.train.checkpoint_interval == 0 &&
        iteration_ < total) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06lld.admg",
                    (long long)iteration_);
      save((fs::path(out_dir) / name).string());
    }
  }
  log.flush();
  save((fs::path(out_dir) / "checkpoint.admg").string());

  for (const char* split : {"train", "test"}) {
    const EvalReport rep = evaluate(split);
    write_text_file(
        (fs::path(out_dir) / (std::string("eval_") + split + ".txt")).string(),
        eval_report_table(rep));
    write_text_file(
        (fs::path(out_dir) / (std::string("eval_") + split + ".json")).string(),
        eval_report_json(rep));
  }
}

EvalReport TrainSession::evaluate(const std::string& split) {
  const auto& indices = dataset_.split_indices(split);
  if (indices.empty()) {
    throw InvalidArgument("evaluate: split '" + split + "' is empty");
  }
  EvalReport rep;
  rep.split = split;
  double acc_psnr = 0, acc_ssim = 0;
  for (const int idx : indices) {
    const Observation<float>& obs = dataset_.frames[std::size_t(idx)];
    render_view(scene_, fields_, obs.camera, obs.traversal, obs.timestamp,
                pipeline_opts_, bundle_);
    EvalRow row;
    row.traversal = obs.traversal;
    row.frame = dataset_.frame_in_traversal[std::size_t(idx)];
    row.psnr_db = psnr(bundle_.affine_rgb, obs.rgb);
    row.ssim = double(ssim(bundle_.affine_rgb, obs.rgb));
    acc_psnr += row.psnr_db;
    acc_ssim += row.ssim;
    rep.rows.push_back(row);
  }
  rep.mean_psnr_db = acc_psnr / double(rep.rows.size());
  rep.mean_ssim = acc_ssim / double(rep.rows.size());
  return rep;
}

const ForwardBundle<float>& TrainSession::render(int traversal,
                                                 int frame_in_traversal) {
  scene_.traversals.require(traversal);
  const auto& frames = dataset_.manifest.traversals[std::size_t(traversal)];
  if (frame_in_traversal < 0 ||
      std::size_t(frame_in_traversal) >= frames.size()) {
    throw InvalidArgument("render: frame index out of range");
  }
  const auto& rec = frames[std::size_t(frame_in_traversal)];
  render_view(scene_, fields_, rec.camera, traversal, rec.timestamp,
              pipeline_opts_, bundle_);
  return bundle_;
}

const ForwardBundle<float>& TrainSession::relight(int material_traversal,
                                                  int light_traversal,
                                                  int frame_in_traversal) {
  scene_.traversals.require(material_traversal);
  scene_.traversals.require(light_traversal);
  const auto& frames =
      dataset_.manifest.traversals[std::size_t(light_traversal)];
  if (frame_in_traversal < 0 ||
      std::size_t(frame_in_traversal) >= frames.size()) {
    throw InvalidArgument("relight: frame index out of range");
  }
  const auto& rec = frames[std::size_t(frame_in_traversal)];
  render_view(scene_, fields_, rec.camera,
              TraversalRoles::relight(material_traversal, light_traversal),
              rec.timestamp, pipeline_opts_, bundle_);
  return bundle_;
}

}  // namespace admgs
