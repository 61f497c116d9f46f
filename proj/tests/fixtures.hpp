#pragma once
// Test objects and error measures shared by the unit tests and the
// acceptance driver.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kreg/fft.hpp"
#include "kreg/forward.hpp"
#include "kreg/registration.hpp"
#include "oracles.hpp"

namespace kreg::fixture {

using oracle::kPi;

// Smooth test object, well inside a 48 mm field of view and band-limited at
// 1 mm sampling (smallest sigma 2.5 mm).
inline const std::vector<oracle::Blob> kBlobs{
    {{0.0, 0.0, 0.0}, 7.0, 1.0},
    {{6.0, -4.0, 3.0}, 3.0, 0.8},
    {{-7.0, 5.0, -2.0}, 2.5, -0.6},
    {{2.0, 8.0, -6.0}, 3.5, 0.5},
};

inline geometry::ProtocolDescriptor protocol_for(const geometry::RotationMatrix& r, const Vec3& voxel,
                                          const Dims3& dims, double fov) {
  geometry::ProtocolDescriptor p;
  p.rotation = r;
  p.voxel_sizes = voxel;
  p.matrix_dims = dims;
  p.fov_mm = fov;
  p.echo_times_s = {0.01};
  return p;
}

// The object as the protocol sees it: acquisition voxel p_acq (mm, centered)
// sits at scanner position R p_acq.
inline ScalarVolume acquire_blobs(const geometry::ProtocolDescriptor& p) {
  const Dims3& d = p.matrix_dims;
  ScalarVolume out(d, p.voxel_sizes);
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        const Vec3 pa{p.voxel_sizes[0] * geometry::centered_index(i, d[0]),
                      p.voxel_sizes[1] * geometry::centered_index(j, d[1]),
                      p.voxel_sizes[2] * geometry::centered_index(k, d[2])};
        out(i, j, k) = oracle::blobs_at(kBlobs, p.rotation.apply(pa));
      }
  return out;
}

inline double masked_rel_error(const ScalarVolume& x, const ScalarVolume& ref, const Mask& m) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < ref.size(); ++n) {
    if (!m[n]) continue;
    num += (x[n] - ref[n]) * (x[n] - ref[n]);
    den += ref[n] * ref[n];
  }
  return std::sqrt(num / den);
}

// Max |a - b| after removing the single 2 pi k offset closest to the mean
// difference, over voxels at least `margin` from every face.
inline double interior_max_error_mod_2pi(const ScalarVolume& a, const ScalarVolume& b, std::size_t margin) {
  const Dims3& d = a.dims();
  double mean = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) mean += a[n] - b[n];
  mean /= static_cast<double>(a.size());
  const double shift = 2.0 * kPi * std::round(mean / (2.0 * kPi));
  double worst = 0.0;
  for (std::size_t k = margin; k + margin < d[2]; ++k)
    for (std::size_t j = margin; j + margin < d[1]; ++j)
      for (std::size_t i = margin; i + margin < d[0]; ++i)
        worst = std::max(worst, std::abs(a(i, j, k) - b(i, j, k) - shift));
  return worst;
}

inline ScalarVolume wrapped(const ScalarVolume& v) {
  ScalarVolume w = v;
  for (auto& x : w.values()) x = registration::wrap_phase(x);
  return w;
}

inline double tukey(double t, double alpha) {
  // t in [0, 1]
  if (t < alpha / 2) return 0.5 * (1 - std::cos(2 * kPi * t / alpha));
  if (t > 1 - alpha / 2) return 0.5 * (1 - std::cos(2 * kPi * (1 - t) / alpha));
  return 1.0;
}

// Phase ramp 0 -> 4 pi along x, Tukey-windowed (alpha 0.5) on every axis so
// it is smooth across the periodic boundary.
inline ScalarVolume tukey_ramp(std::size_t n) {
  ScalarVolume truth({n, n, n});
  const double last = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / last;
        truth(i, j, k) = 4 * kPi * t * tukey(t, 0.5) * tukey(static_cast<double>(j) / last, 0.5) *
                         tukey(static_cast<double>(k) / last, 0.5);
      }
  return truth;
}

// Centered Gaussian phase blob, peak 3 pi, sigma 8 voxels.
inline ScalarVolume gaussian_phase_blob(std::size_t n) {
  ScalarVolume truth({n, n, n});
  const double c = 0.5 * static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const double r2 = std::pow(i - c, 2) + std::pow(j - c, 2) + std::pow(k - c, 2);
        truth(i, j, k) = 3 * kPi * std::exp(-r2 / (2 * 8.0 * 8.0));
      }
  return truth;
}

inline forward::Primitive sphere(const Vec3& c, double r, double chi) {
  forward::Primitive p;
  p.center = c;
  p.radii = {r, r, r};
  p.chi_ppm = chi;
  return p;
}

// 48^3 sphere phantom: a neutral sphere holding three inclusions.
inline forward::Phantom sphere_phantom() {
  forward::SusceptibilityPhantomSpec spec;
  spec.primitives = {sphere({24, 24, 24}, 18, 0.0), sphere({17, 25, 24}, 5, 0.3),
                     sphere({31, 21, 21}, 4, -0.15), sphere({27, 30, 29}, 3, 0.1)};
  return forward::build_phantom(spec, {48, 48, 48});
}

inline ScalarVolume band_restricted(const ScalarVolume& v, const ScalarVolume& d, double delta) {
  ComplexVolume k = fft::centered_fft(volume::to_complex(v));
  for (std::size_t n = 0; n < k.size(); ++n)
    if (!(std::abs(d[n]) > delta)) k[n] = 0.0;
  return volume::real_part(fft::centered_ifft(k));
}

}  // namespace kreg::fixture
