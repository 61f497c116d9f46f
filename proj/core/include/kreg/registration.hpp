#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kreg/geometry.hpp"
#include "kreg/nufft.hpp"
#include "kreg/volume.hpp"

namespace kreg::registration {

/// Reduces x modulo 2 pi into [-pi, pi). Non-finite input throws.
double wrap_phase(double x);

/// Laplacian phase unwrapping with an FFT-diagonalized (spectral) Laplacian:
///   lap(psi) = cos(phi) lap(sin(phi)) - sin(phi) lap(cos(phi)).
/// Voxel sizes enter the Laplacian. The free constant is fixed so that
/// wrap(psi) matches the input in the circular-mean sense, then shifted by a
/// multiple of 2 pi to sit as close as possible to the input's mean.
/// Requires at least 4 voxels per axis.
ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped);

/// Geometry of one k-space registration: where each acquired lattice sample
/// lands in the reference frame and which ones are kept.
struct RegistrationPlan {
  geometry::ProtocolDescriptor source;
  geometry::ReferenceProtocol reference;
  Vec3 scaling;                     ///< s_i = v_r / v_i
  geometry::RotationMatrix rotation;
  geometry::KSpaceLocations mapped;  ///< reference-frame location of every lattice sample
  std::vector<std::uint8_t> retained;  ///< 1 where the mapped location is inside [-pi, pi)^3
  std::size_t retained_count = 0;
  /// Constant density-compensation weight for retained samples,
  /// (reference voxel count) / (acquisition voxel count).
  double density_weight = 1.0;
};

RegistrationPlan make_plan(const geometry::ProtocolDescriptor& protocol,
                           const geometry::ReferenceProtocol& ref);

/// k-space registration: every echo's lattice samples are moved by the same
/// scale + rotation, samples leaving the reference band are dropped, and the
/// reference-grid image is reconstructed with the adjoint NUFFT. Missing
/// reference-band content stays zero.
/// `acquired[e].values` must follow cartesian_kspace_lattice(protocol.matrix_dims).
std::vector<ComplexVolume> kspace_register(std::span<const nufft::KSpaceSamples> acquired,
                                           const geometry::ProtocolDescriptor& protocol,
                                           const geometry::ReferenceProtocol& ref,
                                           const nufft::GriddingConfig& cfg);

/// Same, with each echo's k-space given as a volume in lattice order.
std::vector<ComplexVolume> kspace_register(std::span<const ComplexVolume> acquired_kspace,
                                           const geometry::ProtocolDescriptor& protocol,
                                           const geometry::ReferenceProtocol& ref,
                                           const nufft::GriddingConfig& cfg);

/// Trilinear interpolation at continuous array coordinates. Returns false
/// (and leaves `value` untouched) outside [0, N-1] on any axis.
bool trilinear_sample(const ScalarVolume& v, const Vec3& coord, double& value);

struct Resampled {
  ScalarVolume volume;
  Mask inside;  ///< voxels whose source position fell inside the acquisition grid
};

/// Resamples an acquisition-grid volume onto the reference grid under the
/// inverse of the acquisition geometry (rotation plus anisotropic spacing).
/// Reference voxels mapping outside the source are zero and not in `inside`.
Resampled resample_to_reference(const ScalarVolume& acquisition,
                                const geometry::ProtocolDescriptor& protocol,
                                const geometry::ReferenceProtocol& ref);

struct ImageRegistration {
  std::vector<ScalarVolume> phase;
  std::vector<ScalarVolume> magnitude;
  Mask inside;
};

/// Image-space baseline: trilinear resampling of unwrapped phase and
/// magnitude (per echo) from the acquisition grid to the reference grid.
ImageRegistration image_register_baseline(std::span<const ScalarVolume> unwrapped_phase,
                                          std::span<const ScalarVolume> magnitude,
                                          const geometry::ProtocolDescriptor& protocol,
                                          const geometry::ReferenceProtocol& ref);

}  // namespace kreg::registration
