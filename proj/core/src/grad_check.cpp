#include "admgs/grad_check.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "admgs/adam.hpp"
#include "admgs/pipeline.hpp"
#include "admgs/registry.hpp"
#include "admgs/rng.hpp"

namespace admgs {

namespace {

// The parameter classes reported: per-node groups plus one class per MLP.
std::string class_of(const TensorRef<double>& e) {
  if (e.name.rfind("mlp.", 0) == 0) {
    const auto second_dot = e.name.find('.', 4);
    return e.name.substr(0, second_dot);  // e.g. "mlp.light"
  }
  if (e.name.rfind("traversal.affine", 0) == 0) return "affine";
  if (e.name == "traversal.embedding") return "e_m";
  if (e.group == ParamGroup::Feature) return "f_geo";
  return param_group_name(e.group);
}

struct CheckScene {
  SceneGraph<double> scene;
  FieldSet<double> fields;
  Observation<double> obs;
  PipelineOptions opts;
  LossWeights weights;
  double lambda_decomp_eff = 0.05;
};

CheckScene build_scene(const GradCheckOptions& o) {
  CheckScene cs;
  Rng rng(o.seed * 7919 + 13);

  FieldConfig fc;
  cs.fields = FieldSet<double>::make(fc, rng);
  // Give the gate nonzero final weights so its gradients are exercised.
  for (auto& w : cs.fields.gate.layers.back().weight.v) {
    w = rng.normal(0.0, 0.05);
  }

  cs.scene.traversals.resize(2, std::size_t(fc.d_emb));
  for (auto& v : cs.scene.traversals.embedding.v) v = rng.normal(0.0, 0.5);
  for (std::size_t t = 0; t < 2; ++t) {
    cs.scene.traversals.affine_scale.set_vec3(
        t, {1.0 + 0.1 * rng.normal(), 1.0 + 0.1 * rng.normal(),
            1.0 + 0.1 * rng.normal()});
    cs.scene.traversals.affine_bias.set_vec3(
        t, {0.05 * rng.normal(), 0.05 * rng.normal(), 0.05 * rng.normal()});
  }

  // Static splats scattered in front of the camera.
  auto& prims = cs.scene.static_node.prims;
  prims.resize(std::size_t(o.n_static), std::size_t(fc.d_geo));
  for (int i = 0; i < o.n_static; ++i) {
    prims.position.set_vec3(std::size_t(i),
                            {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                             rng.uniform(-0.4, 0.4)});
    prims.log_scale.set_vec3(std::size_t(i),
                             {rng.normal(-1.4, 0.25), rng.normal(-1.4, 0.25),
                              rng.normal(-1.4, 0.25)});
    const Quat<double> q = Quat<double>{rng.normal(), rng.normal(),
                                        rng.normal(), rng.normal()}
                               .normalized();
    prims.rotation.set_quat(std::size_t(i), q);
    prims.opacity_logit.v[std::size_t(i)] = rng.normal(-0.5, 0.8);
    for (int d = 0; d < fc.d_geo; ++d) {
      prims.f_geo.at(std::size_t(i), std::size_t(d)) = rng.normal(0.0, 0.5);
    }
  }

  cs.scene.sky_node = sky_placement<double>(30.0, o.n_sky, o.seed,
                                            std::size_t(fc.d_geo));

  // Camera on the -y axis looking at the splat cloud.
  cs.obs.camera = Camera<double>::look_at({0.0, -4.0, 0.6}, {0.0, 0.0, 0.0},
                                          {0.0, 0.0, 1.0}, 18.0, 18.0,
                                          o.image_size, o.image_size);
  cs.obs.traversal = 0;
  cs.obs.timestamp = 0.0;
  cs.obs.rgb = Image<double>(o.image_size, o.image_size, 3);
  cs.obs.gt_material = Image<double>(o.image_size, o.image_size, 3);
  cs.obs.gt_normal = Image<double>(o.image_size, o.image_size, 3);
  cs.obs.mask_material = Image<double>(o.image_size, o.image_size, 1);
  cs.obs.mask_normal = Image<double>(o.image_size, o.image_size, 1);
  for (auto& v : cs.obs.rgb.data) v = rng.uniform();
  for (auto& v : cs.obs.gt_material.data) v = rng.uniform();
  for (auto& v : cs.obs.gt_normal.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : cs.obs.mask_material.data) v = rng.uniform() < 0.7 ? 1.0 : 0.0;
  for (auto& v : cs.obs.mask_normal.data) v = rng.uniform() < 0.7 ? 1.0 : 0.0;

  cs.weights.lambda_ssim = 0.2;
  cs.weights.lambda_decomp = 0.05;
  cs.weights.lambda_scale = 0.01;
  cs.weights.delta = 1.0;
  cs.lambda_decomp_eff = 0.05;
  cs.opts.shade_chunk = 8;
  return cs;
}

double eval_loss(CheckScene& cs, ForwardBundle<double>& bundle) {
  render_view(cs.scene, cs.fields, cs.obs.camera, cs.obs.traversal,
              cs.obs.timestamp, cs.opts, bundle);
  const auto parts = compute_losses(bundle, cs.scene, cs.obs, cs.weights,
                                    cs.lambda_decomp_eff);
  return parts.total;
}

}  // namespace

GradCheckReport run_grad_check(const GradCheckOptions& opts) {
  CheckScene cs = build_scene(opts);
  auto reg = collect_params(cs.scene, cs.fields);

  // Analytic gradients.
  reg.zero_grad();
  ForwardBundle<double> bundle;
  render_view(cs.scene, cs.fields, cs.obs.camera, cs.obs.traversal,
              cs.obs.timestamp, cs.opts, bundle);
  LossCaches<double> caches;
  const auto parts = compute_losses(bundle, cs.scene, cs.obs, cs.weights,
                                    cs.lambda_decomp_eff, &caches);
  (void)parts;
  backward_losses(bundle, cs.scene, cs.fields, cs.obs, cs.weights,
                  cs.lambda_decomp_eff, caches);

  // Optional fault injection (negative-control test fixture).
  if (!opts.inject_fault.empty()) {
    for (auto& e : reg.entries) {
      if (!e.trainable) continue;
      if (class_of(e) == opts.inject_fault ||
          e.name.rfind(opts.inject_fault, 0) == 0) {
        for (auto& gv : e.tensor->g) gv = gv * 1.5 + 0.37;
        break;
      }
    }
  }

  std::map<std::string, GradCheckClassReport> by_class;
  ForwardBundle<double> fd_bundle;

  for (auto& e : reg.entries) {
    if (!e.trainable) continue;
    const std::string cls = class_of(e);
    auto& rep = by_class[cls];
    rep.name = cls;

    const std::size_t n = e.tensor->size();
    std::vector<std::size_t> indices;
    if (opts.full || n <= std::size_t(opts.max_per_tensor)) {
      indices.resize(n);
      for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    } else {
      // Deterministic spread across the tensor.
      for (int k = 0; k < opts.max_per_tensor; ++k) {
        indices.push_back(std::size_t(k) * (n - 1) /
                          std::size_t(opts.max_per_tensor - 1));
      }
      std::sort(indices.begin(), indices.end());
      indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    }

    for (const std::size_t i : indices) {
      const double analytic = e.tensor->g[i];
      const double orig = e.tensor->v[i];
      e.tensor->v[i] = orig + opts.fd_step;
      const double fp = eval_loss(cs, fd_bundle);
      e.tensor->v[i] = orig - opts.fd_step;
      const double fm = eval_loss(cs, fd_bundle);
      e.tensor->v[i] = orig;
      const double fd = (fp - fm) / (2.0 * opts.fd_step);
      const double denom =
          std::max({std::abs(analytic), std::abs(fd), opts.rel_floor});
      const double err = std::abs(analytic - fd) / denom;
      ++rep.checked;
      if (err > rep.worst_rel_err) {
        rep.worst_rel_err = err;
        rep.worst_param = e.name + "[" + std::to_string(i) + "]";
      }
    }
  }

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  report.pass = true;
  for (auto& [name, rep] : by_class) {
    if (rep.checked == 0) continue;
    if (rep.worst_rel_err >= opts.tolerance) report.pass = false;
    report.classes.push_back(rep);
  }
  return report;
}

std::string format_grad_check_report(const GradCheckReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %8s %14s  %s\n", "class", "checked",
                "worst_rel_err", "worst_param");
  out += line;
  for (const auto& c : report.classes) {
    std::snprintf(line, sizeof(line), "%-14s %8zu %14.3e  %s%s\n",
                  c.name.c_str(), c.checked, c.worst_rel_err,
                  c.worst_param.c_str(),
                  c.worst_rel_err >= report.tolerance ? "  [FAIL]" : "");
    out += line;
  }
  std::snprintf(line, sizeof(line), "gradient check: %s (tolerance %.1e)\n",
                report.pass ? "PASS" : "FAIL", report.tolerance);
  out += line;
  return out;
}

}  // namespace admgs
