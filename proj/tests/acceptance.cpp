// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
// The heavy criteria share work: the decomp-3trav dataset is generated
// once, the full model trained on it serves criteria 5, 6, and the
// geometry arm of 7; two ablation arms are trained for criterion 7.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "admgs/adam.hpp"
#include "admgs/dataset.hpp"
#include "admgs/io.hpp"
#include "admgs/losses.hpp"
#include "admgs/raster.hpp"
#include "admgs/rng.hpp"
#include "admgs/sh.hpp"
#include "admgs/trainer.hpp"

using namespace admgs;
namespace fs = std::filesystem;
using V3 = Vec3<double>;

namespace {

// Training budget for the decomposition runs (criterion 5 allows up to
// 5000 iterations).
constexpr long long kDecompIterations = 3000;
constexpr long long kTransientIterations = 1600;

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

struct Harness {
  fs::path work;
  int failures = 0;
  std::unique_ptr<TrainSession> full_session;  // decomp-3trav, full model
  std::string decomp_dataset;
  double full_test_psnr = 0;
  double full_matdiff = 0;  // criterion 5(b) metric of the full model

  void report(int id, const char* name, const CriterionResult& r,
              double seconds) {
    std::printf("[%2d/10] %s %-22s %s [%.1f s]\n", id,
                r.pass ? "PASS" : "FAIL", name, r.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }

  void run(int id, const char* name,
           const std::function<CriterionResult()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    report(id, name, r, secs);
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

RunConfig decomp_config(bool explicit_decomp, bool geometry) {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.reproducible = true;
  cfg.train.iterations = kDecompIterations;
  cfg.train.log_interval = 50;
  cfg.train.enable_material_supervision = explicit_decomp;
  cfg.train.enable_normal_supervision = geometry;
  cfg.model.light_geo_inputs = geometry;
  if (!explicit_decomp) cfg.loss.lambda_decomp = 0.0;
  if (!geometry) cfg.loss.lambda_scale = 0.0;
  return cfg;
}

// Pearson correlation.
double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(std::max(1e-30, saa * sbb));
}

// Criterion 5(b) metric: mean absolute difference between material maps
// exported at the same pose under each traversal condition, over pixels
// with static coverage in every rendering.
double material_cross_traversal_diff(TrainSession& session, int frame) {
  const int m_count = session.dataset().traversal_count();
  std::vector<Image<float>> maps;
  std::vector<Image<float>> coverage;
  for (int m = 0; m < m_count; ++m) {
    // Same camera pose for every traversal condition: reuse traversal 0's
    // frame camera via the relight roles (light/gate from m).
    const auto& rec = session.dataset().manifest.traversals[0][std::size_t(frame)];
    ForwardBundle<float> bundle;
    render_view(session.scene(), session.fields(), rec.camera,
                TraversalRoles::uniform(m), rec.timestamp,
                session.pipeline_options(), bundle);
    maps.push_back(bundle.render.material_map);
    coverage.push_back(bundle.render.static_mask);
  }
  double acc = 0;
  long long count = 0;
  for (int a = 0; a < m_count; ++a) {
    for (int b = a + 1; b < m_count; ++b) {
      for (int y = 0; y < maps[0].height; ++y) {
        for (int x = 0; x < maps[0].width; ++x) {
          bool covered = true;
          for (int m = 0; m < m_count; ++m) {
            covered &= coverage[std::size_t(m)].at(y, x) > 0.5f;
          }
          if (!covered) continue;
          for (int c = 0; c < 3; ++c) {
            acc += std::abs(double(maps[std::size_t(a)].at(y, x, c)) -
                            double(maps[std::size_t(b)].at(y, x, c)));
            ++count;
          }
        }
      }
    }
  }
  return count ? acc / double(count) : 1.0;
}

double masked_psnr(const Image<float>& pred, const Image<float>& gt,
                   const Image<float>& mask) {
  double mse = 0;
  long long n = 0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      if (mask.at(y, x) < 0.5f) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = double(pred.at(y, x, c)) - double(gt.at(y, x, c));
        mse += d * d;
        ++n;
      }
    }
  }
  return psnr_from_mse(n ? mse / double(n) : 0.0);
}

int subprocess(const std::string& command) {
  const int rc = std::system(command.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

int main() {
  Harness h;
  h.work = fs::absolute("acceptance_work");
  fs::remove_all(h.work);
  fs::create_directories(h.work);
  std::printf("acceptance suite, work dir: %s\n", h.work.string().c_str());

  // ---------------------------------------------------------------- 1
  h.run(1, "gradient-integrity", [&] {
    const char* cli = std::getenv("ADMGS_CLI");
    CriterionResult r;
    if (!cli) {
      r.detail = "ADMGS_CLI not set";
      return r;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = subprocess(std::string(cli) + " grad-check --scale full --seed 1 > " +
                              (h.work / "grad_check.txt").string() + " 2>&1");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    r.pass = rc == 0 && secs < 300.0;
    r.detail = fmt("cmd_grad_check exit %d in %.0f s (limit 300 s), "
                   "rel err < 1e-4 across all classes",
                   rc, secs);
    return r;
  });

  // ---------------------------------------------------------------- 2
  h.run(2, "rasterizer-oracle", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    double worst = 0;
    for (int scene = 0; scene < 100; ++scene) {
      const int count = 1 + int(rng.uniform_index(50));
      std::vector<ShadedSplat<double>> splats;
      for (int i = 0; i < count; ++i) {
        ShadedSplat<double> s;
        s.mean = {rng.uniform(-4, 68), rng.uniform(-4, 68)};
        const double a = rng.normal(0, 2.5), b = rng.normal(0, 2.5);
        const double c = rng.normal(0, 2.5), d = rng.normal(0, 2.5);
        s.cov2d = {a * a + b * b + 0.3, a * c + b * d, c * c + d * d + 0.3};
        s.depth = rng.uniform(0.5, 10.0);
        s.eff_opacity = rng.uniform(0.05, 0.95);
        s.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        s.is_static = rng.uniform() < 0.5;
        if (s.is_static) {
          V3 n{rng.normal(), rng.normal(), rng.normal()};
          s.normal = n.normalized();
          s.material = {rng.uniform(), rng.uniform(), rng.uniform()};
        }
        s.source = i;
        splats.push_back(s);
      }
      const auto tiled = rasterize_forward(splats, 64, 64);
      const auto ref = reference_render(splats, 64, 64);
      for (const auto* pair :
           {&std::pair<const Image<double>&, const Image<double>&>(tiled.rgb, ref.rgb)}) {
        (void)pair;
      }
      auto cmp = [&](const Image<double>& x, const Image<double>& y) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
          worst = std::max(worst, std::abs(x.data[i] - y.data[i]));
        }
      };
      cmp(tiled.rgb, ref.rgb);
      cmp(tiled.alpha, ref.alpha);
      cmp(tiled.depth, ref.depth);
      cmp(tiled.normal_map, ref.normal_map);
      cmp(tiled.material_map, ref.material_map);
      cmp(tiled.static_mask, ref.static_mask);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    CriterionResult r;
    r.pass = worst <= 1e-6 && secs < 120.0;
    r.detail = fmt("100 scenes, max |tiled - reference| = %.2e (limit 1e-6), %.0f s",
                   worst, secs);
    return r;
  });

  // ---------------------------------------------------------------- 3
  h.run(3, "sh-orthonormality", [&] {
    CriterionResult r;
    const bool sizes_ok = sh_basis_size(1) == 4 && sh_basis_size(3) == 16 &&
                          sh_basis_size(4) == 25;
    Rng rng(3);
    const int n = 25;
    std::vector<double> gram(n * n, 0.0);
    const int samples = 1000000;
    double b[25];
    for (int s = 0; s < samples; ++s) {
      V3 d{rng.normal(), rng.normal(), rng.normal()};
      while (d.norm() < 1e-9) d = {rng.normal(), rng.normal(), rng.normal()};
      sh_basis_unchecked(d.normalized(), 4, b);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) gram[std::size_t(i * n + j)] += b[i] * b[j];
      }
    }
    const double norm = 4.0 * 3.14159265358979323846 / samples;
    double worst = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double target = i == j ? 1.0 : 0.0;
        worst = std::max(worst,
                         std::abs(gram[std::size_t(i * n + j)] * norm - target));
      }
    }
    r.pass = sizes_ok && worst < 5e-3;
    r.detail = fmt("1e6-sample Gram deviation %.2e (limit 5e-3); "
                   "lengths 4/16/25 %s",
                   worst, sizes_ok ? "ok" : "WRONG");
    return r;
  });

  // ---------------------------------------------------------------- 4
  h.run(4, "flatness-regularizer", [&] {
    Tensor<double> ls(1000, 3);  // exactly isotropic start
    AdamSlot<double> slot;
    for (int it = 1; it <= 500; ++it) {
      ls.zero_grad();
      scale_flatness_loss_backward(ls, 1.0, 1.0);
      adam_update(ls.v.data(), ls.g.data(), ls.size(), slot, it, 5e-3);
    }
    int flat = 0;
    for (std::size_t i = 0; i < ls.rows; ++i) {
      const double* row = ls.row(i);
      const double gap = std::max({row[0], row[1], row[2]}) -
                         std::min({row[0], row[1], row[2]});
      if (gap >= 1.0) ++flat;
    }
    CriterionResult r;
    r.pass = flat >= 950;
    r.detail = fmt("%d/1000 splats reached log(s_max/s_min) >= 1 in 500 steps "
                   "(need >= 950)",
                   flat);
    return r;
  });

  // ------------------------------------------------- shared training
  // Criterion 5 also prepares state for 6 and 7.
  h.run(5, "decomposition-recovery", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    h.decomp_dataset = (h.work / "decomp-3trav").string();
    generate_dataset(suite_by_name("decomp-3trav"), h.decomp_dataset);
    h.full_session = std::make_unique<TrainSession>(
        load_dataset(h.decomp_dataset), decomp_config(true, true));
    h.full_session->run((h.work / "run_full").string());

    const EvalReport test = h.full_session->evaluate("test");
    h.full_test_psnr = test.mean_psnr_db;

    // (b) material maps across the 3 traversal conditions at one pose.
    int test_frame = 0;
    const auto& t0_frames = h.full_session->dataset().manifest.traversals[0];
    for (std::size_t i = 0; i < t0_frames.size(); ++i) {
      if (t0_frames[i].split == "test") test_frame = int(i);
    }
    h.full_matdiff = material_cross_traversal_diff(*h.full_session, test_frame);

    // (c) correlation between the exported material and the albedo.
    std::vector<double> pred[3], gt[3];
    const auto& ds = h.full_session->dataset();
    for (const int idx : ds.test_indices) {
      const auto& obs = ds.frames[std::size_t(idx)];
      ForwardBundle<float> bundle;
      render_view(h.full_session->scene(), h.full_session->fields(), obs.camera,
                  obs.traversal, obs.timestamp,
                  h.full_session->pipeline_options(), bundle);
      for (int y = 0; y < obs.rgb.height; ++y) {
        for (int x = 0; x < obs.rgb.width; ++x) {
          if (obs.mask_material.at(y, x) < 0.5f) continue;
          if (bundle.render.static_mask.at(y, x) < 0.5f) continue;
          for (int c = 0; c < 3; ++c) {
            pred[c].push_back(double(bundle.render.material_map.at(y, x, c)));
            gt[c].push_back(double(obs.gt_material.at(y, x, c)));
          }
        }
      }
    }
    double min_corr = 1.0;
    for (int c = 0; c < 3; ++c) {
      min_corr = std::min(min_corr, correlation(pred[c], gt[c]));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    CriterionResult r;
    r.pass = h.full_test_psnr > 30.0 && h.full_matdiff < 0.05 &&
             min_corr > 0.95 && secs < 1800.0;
    r.detail = fmt("held-out PSNR %.2f dB (>30), material cross-traversal "
                   "diff %.4f (<0.05), min channel corr %.3f (>0.95), %.0f s",
                   h.full_test_psnr, h.full_matdiff, min_corr, secs);
    return r;
  });

  // ---------------------------------------------------------------- 6
  h.run(6, "relighting-oracle", [&] {
    CriterionResult r;
    if (!h.full_session) {
      r.detail = "skipped: criterion 5 setup failed";
      return r;
    }
    auto& session = *h.full_session;
    const auto& ds = session.dataset();
    const auto& manifest = ds.manifest;
    // Relight material of T0 with the light of T1 at a T1 test frame.
    const int m_mat = 0, m_light = 1;
    int frame = 0;
    for (std::size_t i = 0; i < manifest.traversals[1].size(); ++i) {
      if (manifest.traversals[1][i].split == "test") frame = int(i);
    }
    const Image<float> relit = session.relight(m_mat, m_light, frame).affine_rgb;
    const LoadedFrame gt_frame =
        load_frame(ds.root, manifest.traversals[std::size_t(m_light)][std::size_t(frame)]);
    Image<float> static_mask(gt_frame.rgb.width, gt_frame.rgb.height, 1);
    for (std::size_t i = 0; i < static_mask.data.size(); ++i) {
      static_mask.data[i] = gt_frame.static_mask.data[i] > 0.5f ? 1.f : 0.f;
    }
    const double relit_psnr = masked_psnr(relit, gt_frame.rgb, static_mask);

    // Shadow mask IoU on sun-facing static pixels: ground truth shadows
    // have light exactly equal to the ambient term.
    const TraversalLighting& light = manifest.lighting[std::size_t(m_light)];
    const V3 sun = light.sun_direction.normalized();
    long long inter = 0, uni = 0;
    for (int y = 0; y < relit.height; ++y) {
      for (int x = 0; x < relit.width; ++x) {
        if (static_mask.at(y, x) < 0.5f) continue;
        const V3 n{double(gt_frame.gt_normal.at(y, x, 0)),
                   double(gt_frame.gt_normal.at(y, x, 1)),
                   double(gt_frame.gt_normal.at(y, x, 2))};
        const double ndotl = n.dot(sun);
        if (ndotl < 0.15) continue;  // cast-shadow domain only
        const bool gt_shadow =
            std::abs(double(gt_frame.gt_light.at(y, x, 0)) - light.ambient.x) <
                1e-3 &&
            std::abs(double(gt_frame.gt_light.at(y, x, 1)) - light.ambient.y) <
                1e-3;
        // Midpoint luminance threshold between shadowed and lit shading.
        double lum_relit = 0, lum_thresh = 0;
        for (int c = 0; c < 3; ++c) {
          const double albedo = double(gt_frame.gt_material.at(y, x, c));
          const double amb = c == 0 ? light.ambient.x
                                    : (c == 1 ? light.ambient.y : light.ambient.z);
          const double sunc = c == 0 ? light.sun_intensity.x
                                     : (c == 1 ? light.sun_intensity.y
                                               : light.sun_intensity.z);
          lum_relit += double(relit.at(y, x, c));
          lum_thresh += albedo * (amb + 0.5 * ndotl * sunc);
        }
        const bool pred_shadow = lum_relit < lum_thresh;
        inter += gt_shadow && pred_shadow;
        uni += gt_shadow || pred_shadow;
      }
    }
    const double iou = uni ? double(inter) / double(uni) : 0.0;
    r.pass = relit_psnr > 25.0 && iou > 0.6;
    r.detail = fmt("relight(T0 material, T1 light): static PSNR %.2f dB (>25), "
                   "shadow IoU %.3f (>0.6)",
                   relit_psnr, iou);
    return r;
  });

  // ---------------------------------------------------------------- 7
  h.run(7, "ablation-direction", [&] {
    CriterionResult r;
    if (!h.full_session) {
      r.detail = "skipped: criterion 5 setup failed";
      return r;
    }
    // Arm A: implicit appearance (photometric only).
    TrainSession arm_a(load_dataset(h.decomp_dataset),
                       decomp_config(false, false));
    arm_a.run((h.work / "run_implicit").string());
    const double psnr_a = arm_a.evaluate("test").mean_psnr_db;

    // Arm B: explicit decomposition with material supervision.
    TrainSession arm_b(load_dataset(h.decomp_dataset),
                       decomp_config(true, false));
    arm_b.run((h.work / "run_explicit").string());
    const double psnr_b = arm_b.evaluate("test").mean_psnr_db;

    int test_frame = 0;
    const auto& t0_frames = arm_b.dataset().manifest.traversals[0];
    for (std::size_t i = 0; i < t0_frames.size(); ++i) {
      if (t0_frames[i].split == "test") test_frame = int(i);
    }
    const double matdiff_b = material_cross_traversal_diff(arm_b, test_frame);

    const double psnr_c = h.full_test_psnr;
    const double matdiff_c = h.full_matdiff;
    r.pass = psnr_b >= psnr_a && psnr_c >= psnr_b - 0.1 &&
             matdiff_c < matdiff_b;
    r.detail = fmt("PSNR implicit %.2f <= explicit %.2f; +geometry %.2f "
                   "(>= explicit - 0.1); matdiff %.4f -> %.4f (must shrink)",
                   psnr_a, psnr_b, psnr_c, matdiff_b, matdiff_c);
    return r;
  });

  // ---------------------------------------------------------------- 8
  h.run(8, "transient-gating", [&] {
    const std::string data_dir = (h.work / "transient-2trav").string();
    const SyntheticSceneSpec spec = suite_by_name("transient-2trav");
    generate_dataset(spec, data_dir);
    RunConfig cfg;
    cfg.seed = 1;
    cfg.train.iterations = kTransientIterations;
    cfg.train.log_interval = 50;
    TrainSession session(load_dataset(data_dir), cfg);
    session.run((h.work / "run_transient").string());

    // Transient splats: inside the transient box volume (with margin).
    const SurfacePrimitive* transient = nullptr;
    for (const auto& p : spec.primitives) {
      if (p.transient()) transient = &p;
    }
    const double margin = 0.15;
    auto& prims = session.scene().static_node.prims;
    const auto& fields = session.fields();
    double sum_present = 0, sum_absent = 0;
    int count = 0;
    for (std::size_t i = 0; i < prims.count(); ++i) {
      const auto pos = prims.position.vec3(i);
      bool inside = true;
      for (int k = 0; k < 3; ++k) {
        inside &= std::abs(double(pos[k]) - transient->center[k]) <=
                  transient->half_extent[k] + margin;
      }
      if (!inside) continue;
      if (sigmoid(prims.opacity_logit.v[i]) < 0.1f) continue;  // dead splat
      for (int m = 0; m < 2; ++m) {
        MlpTape<float> tape;
        const float a = gate_forward(
            fields, prims.f_geo.row(i),
            session.scene().traversals.embedding.row(std::size_t(m)), tape);
        (m == 0 ? sum_present : sum_absent) += double(a);
      }
      ++count;
    }
    CriterionResult r;
    if (count == 0) {
      r.detail = "no live transient splats found";
      return r;
    }
    const double mean_present = sum_present / count;
    const double mean_absent = sum_absent / count;
    r.pass = mean_absent < 0.1 && mean_present > 0.5;
    r.detail = fmt("gate attenuation over %d transient splats: %.3f where "
                   "present (>0.5), %.3f where absent (<0.1)",
                   count, mean_present, mean_absent);
    return r;
  });

  // ---------------------------------------------------------------- 9
  h.run(9, "metric-correctness", [&] {
    Rng rng(9);
    // Independent sliding-window SSIM oracle.
    auto oracle = [](const Image<double>& a, const Image<double>& b) {
      const int win = 11;
      double kernel[11][11];
      double ksum = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double dy = i - 5.0, dx = j - 5.0;
          kernel[i][j] = std::exp(-(dx * dx + dy * dy) / 4.5);
          ksum += kernel[i][j];
        }
      }
      for (auto& row : kernel) {
        for (auto& v : row) v /= ksum;
      }
      double total = 0;
      int count = 0;
      for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y + win <= a.height; ++y) {
          for (int x = 0; x + win <= a.width; ++x) {
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int i = 0; i < win; ++i) {
              for (int j = 0; j < win; ++j) {
                const double w = kernel[i][j];
                const double va = a.at(y + i, x + j, c);
                const double vb = b.at(y + i, x + j, c);
                mx += w * va;
                my += w * vb;
                xx += w * va * va;
                yy += w * vb * vb;
                xy += w * va * vb;
              }
            }
            const double sx = xx - mx * mx, sy = yy - my * my,
                         sxy = xy - mx * my;
            total += ((2 * mx * my + 1e-4) * (2 * sxy + 9e-4)) /
                     ((mx * mx + my * my + 1e-4) * (sx + sy + 9e-4));
            ++count;
          }
        }
      }
      return total / count;
    };
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      Image<double> a(32, 32, 3), b(32, 32, 3);
      for (auto& v : a.data) v = rng.uniform();
      for (auto& v : b.data) v = rng.uniform();
      worst = std::max(worst, std::abs(ssim(a, b) - oracle(a, b)));
    }
    Image<double> x(8, 8, 3, 0.25), y(8, 8, 3, 0.35);
    const double p20 = psnr(x, y);
    const bool psnr_ok = std::abs(p20 - 20.0) < 1e-12 &&
                         psnr_from_mse(0.01) == 20.0 && std::isinf(psnr(x, x));
    CriterionResult r;
    r.pass = worst < 1e-6 && psnr_ok;
    r.detail = fmt("SSIM vs oracle max |diff| %.2e (<1e-6); PSNR(MSE=0.01) "
                   "= %.12f dB",
                   worst, p20);
    return r;
  });

  // --------------------------------------------------------------- 10
  h.run(10, "determinism", [&] {
    const std::string data_dir = (h.work / "sanity").string();
    generate_dataset(suite_by_name("sanity-1splat"), data_dir);
    RunConfig cfg;
    cfg.seed = 7;
    cfg.reproducible = true;
    cfg.train.iterations = 150;
    cfg.model.max_static_points = 160;
    cfg.model.sky_count = 64;
    for (const char* run_name : {"det_a", "det_b"}) {
      TrainSession session(load_dataset(data_dir), cfg);
      session.run((h.work / run_name).string());
    }
    const bool ckpt_same =
        read_binary_file((h.work / "det_a" / "checkpoint.admg").string()) ==
        read_binary_file((h.work / "det_b" / "checkpoint.admg").string());
    const bool log_same =
        read_binary_file((h.work / "det_a" / "train_log.jsonl").string()) ==
        read_binary_file((h.work / "det_b" / "train_log.jsonl").string());
    CriterionResult r;
    r.pass = ckpt_same && log_same;
    r.detail = fmt("checkpoints byte-identical: %s; loss logs byte-identical: %s",
                   ckpt_same ? "yes" : "NO", log_same ? "yes" : "NO");
    return r;
  });

  std::printf("%s: %d/10 criteria passed\n",
              h.failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              10 - h.failures);
  return h.failures == 0 ? 0 : 1;
}
