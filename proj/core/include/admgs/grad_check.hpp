#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace admgs {

// Full-pipeline gradient verification: analytic reverse-mode gradients of
// the total loss against central finite differences on a random small
// scene, in 64-bit.
struct GradCheckOptions {
  std::uint64_t seed = 1;
  bool full = true;      // check every parameter; false: capped subsample
  int max_per_tensor = 12;  // cap when full == false
  int n_static = 18;
  int n_sky = 24;
  int image_size = 16;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error; below it the comparison is
  // effectively absolute at floor·tolerance.
  double rel_floor = 1e-5;
  // Test fixture: corrupt the analytic gradient of this class (registry
  // group or tensor-name prefix) to prove the check catches it.
  std::string inject_fault;
};

struct GradCheckClassReport {
  std::string name;          // parameter class (e.g. "position", "mlp.light")
  std::size_t checked = 0;   // number of scalars compared
  double worst_rel_err = 0;
  std::string worst_param;   // tensor[index] of the worst scalar
};

struct GradCheckReport {
  std::vector<GradCheckClassReport> classes;
  bool pass = false;
  double tolerance = 0;
};

GradCheckReport run_grad_check(const GradCheckOptions& opts);

// Formats the per-class table exactly as the CLI prints it.
std::string format_grad_check_report(const GradCheckReport& report);

}  // namespace admgs
