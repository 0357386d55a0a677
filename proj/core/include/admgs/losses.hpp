#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "admgs/errors.hpp"
#include "admgs/image.hpp"
#include "admgs/tensor.hpp"

namespace admgs {

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_decomp = 0.05;
  double lambda_scale = 0.01;
  double delta = 1.0;  // flatness threshold on log(s_max/s_min)

  void validate() const {
    if (!(delta > 0)) throw InvalidArgument("loss weights: delta must be > 0");
    if (lambda_ssim < 0 || lambda_ssim > 1 || lambda_decomp < 0 ||
        lambda_scale < 0) {
      throw InvalidArgument("loss weights: weights must be non-negative "
                            "(lambda_ssim in [0,1])");
    }
  }
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;  // unit dynamic range
inline constexpr double kSsimC2 = 0.03 * 0.03;

template <class T>
std::array<T, kSsimWindow> ssim_kernel() {
  std::array<T, kSsimWindow> k;
  T sum = T(0);
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - (kSsimWindow - 1) / 2.0;
    k[i] = T(std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma)));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Windowed statistics over the valid region (no padding); one map per
// channel laid out as Image with the valid size.
template <class T>
struct SsimCache {
  int vw = 0, vh = 0;
  Image<T> mu_x, mu_y, ex2, ey2, exy;  // vh×vw×C
};

namespace detail {

// Separable valid-mode window average. src is H×W×C, dst is (H-10)×(W-10)×C.
template <class T, class F>
void window_average(const Image<T>& a, const Image<T>& b, F&& value,
                    Image<T>& dst) {
  const auto k = ssim_kernel<T>();
  const int vw = a.width - kSsimWindow + 1;
  const int vh = a.height - kSsimWindow + 1;
  const int ch = a.channels;
  // Horizontal pass.
  Image<T> tmp(vw, a.height, ch);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < vw; ++x) {
      for (int c = 0; c < ch; ++c) {
        T acc = T(0);
        for (int i = 0; i < kSsimWindow; ++i) {
          acc += k[std::size_t(i)] * value(a.at(y, x + i, c), b.at(y, x + i, c));
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  dst = Image<T>(vw, vh, ch);
  for (int y = 0; y < vh; ++y) {
    for (int x = 0; x < vw; ++x) {
      for (int c = 0; c < ch; ++c) {
        T acc = T(0);
        for (int i = 0; i < kSsimWindow; ++i) {
          acc += k[std::size_t(i)] * tmp.at(y + i, x, c);
        }
        dst.at(y, x, c) = acc;
      }
    }
  }
}

}  // namespace detail

// Mean local SSIM over an 11×11 Gaussian window (σ = 1.5), valid-region
// windows only, computed per channel and averaged. Symmetric in (a, b).
template <class T>
T ssim_forward(const Image<T>& a, const Image<T>& b, SsimCache<T>* cache) {
  require_same_shape(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw InvalidArgument("ssim: images smaller than the 11x11 window");
  }
  SsimCache<T> local;
  SsimCache<T>& cc = cache ? *cache : local;
  cc.vw = a.width - kSsimWindow + 1;
  cc.vh = a.height - kSsimWindow + 1;
  detail::window_average(a, b, [](T x, T) { return x; }, cc.mu_x);
  detail::window_average(a, b, [](T, T y) { return y; }, cc.mu_y);
  detail::window_average(a, b, [](T x, T) { return x * x; }, cc.ex2);
  detail::window_average(a, b, [](T, T y) { return y * y; }, cc.ey2);
  detail::window_average(a, b, [](T x, T y) { return x * y; }, cc.exy);

  T total = T(0);
  const std::size_t n = cc.mu_x.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T mx = cc.mu_x.data[i], my = cc.mu_y.data[i];
    const T sx2 = cc.ex2.data[i] - mx * mx;
    const T sy2 = cc.ey2.data[i] - my * my;
    const T sxy = cc.exy.data[i] - mx * my;
    const T a1 = T(2) * mx * my + T(kSsimC1);
    const T a2 = T(2) * sxy + T(kSsimC2);
    const T b1 = mx * mx + my * my + T(kSsimC1);
    const T b2 = sx2 + sy2 + T(kSsimC2);
    total += (a1 * a2) / (b1 * b2);
  }
  return total / T(n);
}

template <class T>
T ssim(const Image<T>& a, const Image<T>& b) {
  return ssim_forward<T>(a, b, nullptr);
}

// Adjoint of ssim_forward with respect to the first image; accumulates
// ssim_bar · ∂SSIM/∂a into a_bar.
template <class T>
void ssim_backward(const Image<T>& a, const Image<T>& b,
                   const SsimCache<T>& cc, T ssim_bar, Image<T>& a_bar) {
  const auto k = ssim_kernel<T>();
  const std::size_t n = cc.mu_x.data.size();
  const T coeff = ssim_bar / T(n);
  // Per-position partials with respect to (μx, Ex2, Exy).
  Image<T> g_mu(cc.vw, cc.vh, a.channels);
  Image<T> g_ex2(cc.vw, cc.vh, a.channels);
  Image<T> g_exy(cc.vw, cc.vh, a.channels);
  for (std::size_t i = 0; i < n; ++i) {
    const T mx = cc.mu_x.data[i], my = cc.mu_y.data[i];
    const T sx2 = cc.ex2.data[i] - mx * mx;
    const T sy2 = cc.ey2.data[i] - my * my;
    const T sxy = cc.exy.data[i] - mx * my;
    const T a1 = T(2) * mx * my + T(kSsimC1);
    const T a2 = T(2) * sxy + T(kSsimC2);
    const T b1 = mx * mx + my * my + T(kSsimC1);
    const T b2 = sx2 + sy2 + T(kSsimC2);
    const T inv_b1b2 = T(1) / (b1 * b2);
    const T s = a1 * a2 * inv_b1b2;
    const T ds_da1 = a2 * inv_b1b2;
    const T ds_da2 = a1 * inv_b1b2;
    const T ds_db1 = -s / b1;
    const T ds_db2 = -s / b2;
    // σx² = Ex2 − μx², σxy = Exy − μx μy.
    const T ds_dmu = ds_da1 * T(2) * my + ds_da2 * T(2) * (-my) +
                     ds_db1 * T(2) * mx + ds_db2 * T(-2) * mx;
    g_mu.data[i] = coeff * ds_dmu;
    g_ex2.data[i] = coeff * ds_db2;
    g_exy.data[i] = coeff * ds_da2 * T(2);
  }
  // Scatter through the windowed averages.
  for (int y = 0; y < cc.vh; ++y) {
    for (int x = 0; x < cc.vw; ++x) {
      for (int c = 0; c < a.channels; ++c) {
        const T gm = g_mu.at(y, x, c);
        const T g2 = g_ex2.at(y, x, c);
        const T g3 = g_exy.at(y, x, c);
        if (gm == T(0) && g2 == T(0) && g3 == T(0)) continue;
        for (int j = 0; j < kSsimWindow; ++j) {
          const T kj = k[std::size_t(j)];
          for (int i = 0; i < kSsimWindow; ++i) {
            const T w = kj * k[std::size_t(i)];
            const T xa = a.at(y + j, x + i, c);
            const T yb = b.at(y + j, x + i, c);
            a_bar.at(y + j, x + i, c) += w * (gm + g2 * T(2) * xa + g3 * yb);
          }
        }
      }
    }
  }
}

// (1−λ_ssim)·mean|pred−gt| + λ_ssim·(1 − SSIM). Inputs in [0, 1].
template <class T>
T photometric_loss(const Image<T>& pred, const Image<T>& gt, T lambda_ssim,
                   SsimCache<T>* ssim_cache = nullptr, T* ssim_out = nullptr) {
  require_same_shape(pred, gt, "photometric_loss");
  T l1 = T(0);
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    l1 += std::abs(pred.data[i] - gt.data[i]);
  }
  l1 /= T(pred.data.size());
  T s = T(0);
  if (lambda_ssim != T(0)) {
    s = ssim_forward(pred, gt, ssim_cache);
  } else if (ssim_cache) {
    ssim_cache->vw = ssim_cache->vh = 0;
  }
  if (ssim_out) *ssim_out = s;
  return (T(1) - lambda_ssim) * l1 + lambda_ssim * (T(1) - s);
}

template <class T>
void photometric_loss_backward(const Image<T>& pred, const Image<T>& gt,
                               T lambda_ssim, const SsimCache<T>& ssim_cache,
                               T loss_bar, Image<T>& pred_bar) {
  const T c = loss_bar * (T(1) - lambda_ssim) / T(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const T d = pred.data[i] - gt.data[i];
    pred_bar.data[i] += d > T(0) ? c : (d < T(0) ? -c : T(0));
  }
  if (lambda_ssim != T(0)) {
    ssim_backward(pred, gt, ssim_cache, -loss_bar * lambda_ssim, pred_bar);
  }
}

// Masked mean absolute error, normalized by the mask mass so the scale is
// independent of coverage. An all-zero mask yields 0.
template <class T>
T masked_l1_loss(const Image<T>& pred, const Image<T>& target,
                 const Image<T>& mask, T* mass_out = nullptr) {
  require_same_shape(pred, target, "masked_l1_loss");
  if (mask.width != pred.width || mask.height != pred.height ||
      mask.channels != 1) {
    throw InvalidArgument("masked_l1_loss: mask must be H×W×1");
  }
  T mass = T(0);
  for (const T m : mask.data) mass += m;
  if (mass_out) *mass_out = mass;
  if (mass <= T(0)) return T(0);
  T acc = T(0);
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      const T m = mask.at(y, x);
      if (m == T(0)) continue;
      for (int c = 0; c < pred.channels; ++c) {
        acc += m * std::abs(pred.at(y, x, c) - target.at(y, x, c));
      }
    }
  }
  return acc / mass;
}

template <class T>
void masked_l1_loss_backward(const Image<T>& pred, const Image<T>& target,
                             const Image<T>& mask, T loss_bar,
                             Image<T>& pred_bar) {
  T mass = T(0);
  for (const T m : mask.data) mass += m;
  if (mass <= T(0)) return;
  const T c0 = loss_bar / mass;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      const T m = mask.at(y, x);
      if (m == T(0)) continue;
      for (int c = 0; c < pred.channels; ++c) {
        const T d = pred.at(y, x, c) - target.at(y, x, c);
        pred_bar.at(y, x, c) += d > T(0) ? c0 * m : (d < T(0) ? -c0 * m : T(0));
      }
    }
  }
}

// Indices used by the flatness hinge; at exact ties max resolves to the
// highest index and min to the lowest so an isotropic splat still gets a
// descent direction.
template <class T>
void flatness_extrema(const T* ls, int* arg_min, int* arg_max) {
  int lo = 0, hi = 0;
  for (int k = 1; k < 3; ++k) {
    if (ls[k] < ls[lo]) lo = k;
    if (ls[k] >= ls[hi]) hi = k;
  }
  *arg_min = lo;
  *arg_max = hi;
}

// (1/|G|) Σ_k max(0, δ − (log s_max − log s_min)) on the stored log scales.
template <class T>
T scale_flatness_loss(const Tensor<T>& log_scale, T delta) {
  if (log_scale.rows == 0) {
    throw InvalidArgument("scale_flatness_loss: empty primitive list");
  }
  T acc = T(0);
  for (std::size_t i = 0; i < log_scale.rows; ++i) {
    const T* ls = log_scale.row(i);
    int lo, hi;
    flatness_extrema(ls, &lo, &hi);
    const T gap = ls[hi] - ls[lo];
    if (gap < delta) acc += delta - gap;
  }
  return acc / T(log_scale.rows);
}

template <class T>
void scale_flatness_loss_backward(Tensor<T>& log_scale, T delta, T loss_bar) {
  const T c = loss_bar / T(log_scale.rows);
  for (std::size_t i = 0; i < log_scale.rows; ++i) {
    const T* ls = log_scale.row(i);
    int lo, hi;
    flatness_extrema(ls, &lo, &hi);
    if (ls[hi] - ls[lo] < delta) {
      log_scale.grad_row(i)[hi] -= c;
      log_scale.grad_row(i)[lo] += c;
    }
  }
}

inline double psnr_from_mse(double mse) {
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

// 10·log10(1/MSE) over unit dynamic range; +inf when the images agree.
template <class T>
double psnr(const Image<T>& pred, const Image<T>& gt) {
  require_same_shape(pred, gt, "psnr");
  double mse = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = double(pred.data[i]) - double(gt.data[i]);
    mse += d * d;
  }
  mse /= double(pred.data.size());
  return psnr_from_mse(mse);
}

// Loss components before weighting.
template <class T>
struct LossBreakdown {
  T photometric{};
  T ssim_value{};
  T material{};
  T normal{};
  T scale{};
  T total{};
};

template <class T>
T total_loss(const LossBreakdown<T>& parts, const LossWeights& w,
             double lambda_decomp_effective, long long iteration = -1) {
  auto check = [&](T v, const char* name) {
    if (!std::isfinite(double(v))) throw TrainingDivergence(name, iteration);
  };
  check(parts.photometric, "photometric");
  check(parts.material, "material");
  check(parts.normal, "normal");
  check(parts.scale, "scale");
  return parts.photometric +
         T(lambda_decomp_effective) * (parts.material + parts.normal) +
         T(w.lambda_scale) * parts.scale;
}

}  // namespace admgs
