#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kreg/geometry.hpp"
#include "kreg/nufft.hpp"
#include "kreg/volume.hpp"

namespace kreg::forward {

enum class PrimitiveKind { sphere, ellipsoid, cylinder };

/// Geometric primitive in voxel coordinates of the grid it is drawn on.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::sphere;
  Vec3 center{0.0, 0.0, 0.0};
  /// sphere: radii[0]; ellipsoid: semi-axes along x, y, z; cylinder: radii[0] is the radius.
  Vec3 radii{1.0, 1.0, 1.0};
  Vec3 axis{0.0, 0.0, 1.0};  ///< cylinder direction
  double half_length = 1.0;  ///< cylinder half length
  double chi_ppm = 0.0;
  double magnitude = 1.0;

  bool contains(const Vec3& p) const;
  void validate() const;
};

struct SusceptibilityPhantomSpec {
  std::vector<Primitive> primitives;  ///< later entries override earlier ones
  double background_chi_ppm = 0.0;
  double background_magnitude = 0.0;

  /// Spec for a grid `factor` times finer: voxel coordinates and lengths scale by `factor`.
  SusceptibilityPhantomSpec scaled(double factor) const;
};

struct Phantom {
  ScalarVolume chi;        ///< ppm
  ScalarVolume magnitude;
  Mask mask;               ///< union of primitives
  std::vector<std::string> warnings;
};

/// Voxelizes the spec at voxel centres. Requires dims >= 16 per axis.
Phantom build_phantom(const SusceptibilityPhantomSpec& spec, const Dims3& dims,
                      const Vec3& voxel_sizes = {1.0, 1.0, 1.0});

/// D(k) = 1/3 - (k.b0)^2 / |k|^2 on the centered lattice of `dims`, with
/// k_i = (index_i - N_i/2) / (N_i v_i) and D(0) = 0. On even-size axes the
/// Nyquist planes are symmetrized so that D(k) = D(-k) holds on the
/// periodic lattice. Throws if |b0| differs from 1 by more than 1e-9.
ScalarVolume dipole_kernel(const Dims3& dims, const Vec3& voxel_sizes, const Vec3& b0_img);

/// Field perturbation (ppm) of a susceptibility map: IFFT(D * FFT(chi)).
ScalarVolume field_from_chi(const ScalarVolume& chi_ppm, const Vec3& b0_img);

struct PhysicsConstants {
  double gamma_bar_hz_per_T = 42.576e6;
  double field_strength_T = 3.0;

  /// Phase accrual rate in rad/s per ppm of field: 2 pi gamma_bar B0 1e-6.
  double rad_per_s_per_ppm() const;
  void validate() const;
};

/// signal_j = magnitude * exp(i phi_j), phi_j = 2 pi gamma_bar B0 field 1e-6 TE_j.
std::vector<ComplexVolume> synth_echoes(const ScalarVolume& field_ppm, const ScalarVolume& magnitude,
                                        std::span<const double> echo_times_s,
                                        const PhysicsConstants& constants);

/// Simulates the protocol's Cartesian acquisition of a master-grid signal.
/// Lattice sample l of the protocol measures the object's spectrum at the
/// reference-frame location R diag(s) l (see geometry::to_reference_frame),
/// evaluated with nufft_type2 on the master grid and scaled to acquisition
/// voxel units. Noise is circular Gaussian with E|n|^2 = sigma^2, drawn per
/// (echo, sample index) from CounterNormal(seed). The master grid must be
/// isotropic.
std::vector<nufft::KSpaceSamples> simulate_acquisition(std::span<const ComplexVolume> master_signal,
                                                       const geometry::ProtocolDescriptor& protocol,
                                                       const geometry::ReferenceProtocol& ref,
                                                       double noise_sigma, std::uint64_t seed,
                                                       const nufft::GriddingConfig& cfg = {});

/// Lattice-ordered k-space samples as a volume with the protocol's dims and voxel sizes.
ComplexVolume samples_to_volume(const nufft::KSpaceSamples& samples,
                                const geometry::ProtocolDescriptor& protocol);

}  // namespace kreg::forward
