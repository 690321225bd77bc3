#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace tpsgeom {

struct GradcheckOptions {
  std::uint64_t seed = 7;
  int trials = 1000;
  /// Central difference step in pixels.
  double step = 1e-5;
  double tolerance = 1e-3;
  /// Points this close (in cells) to a bilinear cell edge are skipped.
  double edge_exclusion = 1e-3;
  /// Negative control: scales every analytic gradient by 1.5.
  bool corrupt = false;
};

struct GradcheckReport {
  int trials = 0;
  std::size_t ba_checked = 0;
  std::size_t ba_excluded = 0;
  std::size_t corner_checked = 0;
  std::size_t corner_excluded = 0;
  double ba_max_rel_error = 0.0;
  double corner_max_rel_error = 0.0;
  std::size_t failures = 0;

  bool passed() const { return failures == 0 && ba_checked > 0 && corner_checked > 0; }
  std::string summary() const;
};

/// Compares the analytic gradients of ba_loss and corner_loss with central
/// differences on random synthetic instances. The relative error of one point
/// is |g - g_fd| / max(|g|, |g_fd|, 1e-6). Throws ConfigError when trials < 1.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace tpsgeom
