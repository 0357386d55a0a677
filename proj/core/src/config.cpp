#include "admgs/config.hpp"

#include <nlohmann/json.hpp>

#include "admgs/errors.hpp"
#include "admgs/io.hpp"

using json = nlohmann::json;

namespace admgs {

namespace {

// Reads known keys from an object and rejects everything else.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw InvalidArgument("config: '" + path_ + "' must be an object");
    }
  }
  ~Section() = default;

  template <class T>
  void read(const char* key, T* out) {
    known_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        *out = it->get<T>();
      } catch (const json::exception&) {
        throw InvalidArgument("config: bad value type for '" + path_ + key +
                              "'");
      }
    }
  }
  const json* sub(const char* key) {
    known_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) return &*it;
    return nullptr;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const auto& k : known_) ok |= (it.key() == k);
      if (!ok) {
        throw InvalidArgument("config: unknown key '" + path_ + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

RunConfig from_json(const json& j) {
  RunConfig cfg;
  Section root(j, "");
  root.read("seed", &cfg.seed);
  root.read("reproducible", &cfg.reproducible);
  root.read("threads", &cfg.threads);

  if (const json* jt = root.sub("train")) {
    Section s(*jt, "train.");
    s.read("iterations", &cfg.train.iterations);
    s.read("warmup_fraction", &cfg.train.warmup_fraction);
    s.read("checkpoint_interval", &cfg.train.checkpoint_interval);
    s.read("log_interval", &cfg.train.log_interval);
    s.read("enable_gating", &cfg.train.enable_gating);
    s.read("enable_material_supervision",
           &cfg.train.enable_material_supervision);
    s.read("enable_normal_supervision", &cfg.train.enable_normal_supervision);
    s.read("rigid_objects", &cfg.train.rigid_objects);
    s.read("save_optimizer", &cfg.train.save_optimizer);
    s.finish();
  }
  if (const json* jl = root.sub("loss")) {
    Section s(*jl, "loss.");
    s.read("lambda_ssim", &cfg.loss.lambda_ssim);
    s.read("lambda_decomp", &cfg.loss.lambda_decomp);
    s.read("lambda_scale", &cfg.loss.lambda_scale);
    s.read("delta", &cfg.loss.delta);
    s.finish();
  }
  if (const json* jl = root.sub("lr")) {
    Section s(*jl, "lr.");
    s.read("position", &cfg.lr.position);
    s.read("position_final_scale", &cfg.lr.position_final_scale);
    s.read("scale", &cfg.lr.scale);
    s.read("rotation", &cfg.lr.rotation);
    s.read("opacity", &cfg.lr.opacity);
    s.read("feature", &cfg.lr.feature);
    s.read("mlp", &cfg.lr.mlp);
    s.read("embedding", &cfg.lr.embedding);
    s.read("affine", &cfg.lr.affine);
    s.finish();
  }
  if (const json* jm = root.sub("model")) {
    Section s(*jm, "model.");
    s.read("d_geo", &cfg.model.d_geo);
    s.read("d_emb", &cfg.model.d_emb);
    s.read("d_obj", &cfg.model.d_obj);
    s.read("sky_count", &cfg.model.sky_count);
    s.read("sky_radius_factor", &cfg.model.sky_radius_factor);
    s.read("init_jitter", &cfg.model.init_jitter);
    s.read("max_static_points", &cfg.model.max_static_points);
    s.read("init_opacity", &cfg.model.init_opacity);
    s.read("init_scale_factor", &cfg.model.init_scale_factor);
    s.read("init_feature_std", &cfg.model.init_feature_std);
    s.read("init_embedding_std", &cfg.model.init_embedding_std);
    s.read("light_geo_inputs", &cfg.model.light_geo_inputs);
    s.finish();
  }
  if (const json* jr = root.sub("raster")) {
    Section s(*jr, "raster.");
    s.read("tile", &cfg.raster.tile);
    s.read("stop_transmittance", &cfg.raster.stop_transmittance);
    s.read("alpha_cap", &cfg.raster.alpha_cap);
    s.read("extent_sigma", &cfg.raster.extent_sigma);
    s.read("lowpass", &cfg.raster.lowpass);
    s.read("near_plane", &cfg.raster.near_plane);
    s.read("background", &cfg.raster.background);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["reproducible"] = c.reproducible;
  j["threads"] = c.threads;
  j["train"] = {{"iterations", c.train.iterations},
                {"warmup_fraction", c.train.warmup_fraction},
                {"checkpoint_interval", c.train.checkpoint_interval},
                {"log_interval", c.train.log_interval},
                {"enable_gating", c.train.enable_gating},
                {"enable_material_supervision",
                 c.train.enable_material_supervision},
                {"enable_normal_supervision", c.train.enable_normal_supervision},
                {"rigid_objects", c.train.rigid_objects},
                {"save_optimizer", c.train.save_optimizer}};
  j["loss"] = {{"lambda_ssim", c.loss.lambda_ssim},
               {"lambda_decomp", c.loss.lambda_decomp},
               {"lambda_scale", c.loss.lambda_scale},
               {"delta", c.loss.delta}};
  j["lr"] = {{"position", c.lr.position},
             {"position_final_scale", c.lr.position_final_scale},
             {"scale", c.lr.scale},
             {"rotation", c.lr.rotation},
             {"opacity", c.lr.opacity},
             {"feature", c.lr.feature},
             {"mlp", c.lr.mlp},
             {"embedding", c.lr.embedding},
             {"affine", c.lr.affine}};
  j["model"] = {{"d_geo", c.model.d_geo},
                {"d_emb", c.model.d_emb},
                {"d_obj", c.model.d_obj},
                {"sky_count", c.model.sky_count},
                {"sky_radius_factor", c.model.sky_radius_factor},
                {"init_jitter", c.model.init_jitter},
                {"max_static_points", c.model.max_static_points},
                {"init_opacity", c.model.init_opacity},
                {"init_scale_factor", c.model.init_scale_factor},
                {"init_feature_std", c.model.init_feature_std},
                {"init_embedding_std", c.model.init_embedding_std},
                {"light_geo_inputs", c.model.light_geo_inputs}};
  j["raster"] = {{"tile", c.raster.tile},
                 {"stop_transmittance", c.raster.stop_transmittance},
                 {"alpha_cap", c.raster.alpha_cap},
                 {"extent_sigma", c.raster.extent_sigma},
                 {"lowpass", c.raster.lowpass},
                 {"near_plane", c.raster.near_plane},
                 {"background", c.raster.background}};
  return j;
}

}  // namespace

void RunConfig::validate() const {
  loss.validate();
  if (train.iterations < 1) {
    throw InvalidArgument("config: train.iterations must be >= 1");
  }
  if (train.warmup_fraction < 0 || train.warmup_fraction > 1) {
    throw InvalidArgument("config: train.warmup_fraction must be in [0, 1]");
  }
  for (double v : {lr.position, lr.scale, lr.rotation, lr.opacity, lr.feature,
                   lr.mlp, lr.embedding, lr.affine}) {
    if (!(v > 0)) throw InvalidArgument("config: learning rates must be > 0");
  }
  if (model.d_geo < 4 || model.d_emb < 1 || model.d_obj < 1) {
    throw InvalidArgument("config: model dimensions out of range");
  }
  if (model.sky_count < 1 || model.sky_radius_factor <= 1) {
    throw InvalidArgument("config: sky placement parameters out of range");
  }
  if (raster.background.size() != 3) {
    throw InvalidArgument("config: raster.background must have 3 components");
  }
}

RunConfig parse_run_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: JSON parse error: ") + e.what());
  }
  return from_json(j);
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!config_path.empty()) {
    try {
      j = json::parse(read_text_file(config_path));
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("config: JSON parse error: ") +
                            e.what());
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument("config override must look like key.path=value: '" +
                            ov + "'");
    }
    std::string path = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;  // bare string
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) {
        throw InvalidArgument("config override has an empty key segment: '" +
                              ov + "'");
      }
      if (dot == std::string::npos) {
        (*node)[key] = parsed;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  return from_json(j);
}

std::string run_config_to_json_text(const RunConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

}  // namespace admgs
