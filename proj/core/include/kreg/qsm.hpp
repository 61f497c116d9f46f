#pragma once

#include <span>
#include <vector>

#include "kreg/forward.hpp"
#include "kreg/volume.hpp"

namespace kreg::qsm {

struct FieldFitResult {
  ScalarVolume field;     ///< ppm
  ScalarVolume residual;  ///< rms phase residual over echoes (rad); -1 where no echo has weight
};

/// Magnitude-squared weighted least-squares slope through the origin of
/// phase against echo time, converted to ppm.
FieldFitResult fit_field(std::span<const ScalarVolume> unwrapped_phase,
                         std::span<const ScalarVolume> magnitude, std::span<const double> echo_times_s,
                         const forward::PhysicsConstants& constants);

struct TkdConfig {
  double threshold = 0.2;
  void validate() const;
};

/// Thresholded k-space division: chi(k) = F(k) / D(k) where |D| > delta,
/// F(k) / (delta * sign(D)) elsewhere with sign(0) = +1. Real part returned.
ScalarVolume tkd_invert(const ScalarVolume& field_ppm, const Vec3& b0_img, const TkdConfig& cfg);

/// ||x - ref|| / ||ref|| over the mask, optionally after removing each
/// volume's mean within the mask.
double nrmse(const ScalarVolume& x, const ScalarVolume& ref, const Mask& mask, bool demean = true);

/// Settings for the complete phase-to-susceptibility chain.
struct ChainConfig {
  TkdConfig tkd;
  forward::PhysicsConstants constants;
  /// Voxels whose first-echo magnitude is below this fraction of the maximum
  /// are excluded (phase zeroed before unwrapping, zero fit weight).
  double support_fraction = 0.3;
};

/// Magnitude-threshold support of a volume.
Mask magnitude_support(const ScalarVolume& magnitude, double fraction);

/// Fit + TKD from already unwrapped phase and magnitude on one grid.
ScalarVolume susceptibility_from_phase(std::span<const ScalarVolume> unwrapped_phase,
                                       std::span<const ScalarVolume> magnitude,
                                       std::span<const double> echo_times_s, const Vec3& b0_img,
                                       const ChainConfig& cfg);

/// Per-echo unwrapped phase (support-masked) and magnitude of complex images.
struct UnwrappedEchoes {
  std::vector<ScalarVolume> phase;
  std::vector<ScalarVolume> magnitude;
  Mask support;
};
UnwrappedEchoes unwrap_echoes(std::span<const ComplexVolume> echoes, double support_fraction);

/// Full chain from complex multi-echo images.
ScalarVolume susceptibility_from_complex(std::span<const ComplexVolume> echoes,
                                         std::span<const double> echo_times_s, const Vec3& b0_img,
                                         const ChainConfig& cfg);

}  // namespace kreg::qsm
