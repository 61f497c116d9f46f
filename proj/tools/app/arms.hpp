#pragma once

#include <vector>

#include "config.hpp"
#include "kreg/nufft.hpp"
#include "kreg/volume.hpp"

namespace kreg::app {

/// Echoes after one registration method. kreg fills `complex` on the
/// reference grid; none fills `complex` with the plain inverse-FFT images on
/// the acquisition grid; ireg fills the unwrapped `phase` and `magnitude`
/// resampled to the reference grid.
struct RegisteredEchoes {
  std::vector<ComplexVolume> complex;
  std::vector<ScalarVolume> phase;
  std::vector<ScalarVolume> magnitude;
};

RegisteredEchoes register_echoes(Method method, const std::vector<nufft::KSpaceSamples>& acquired,
                                 const geometry::ProtocolDescriptor& protocol, const PipelineConfig& cfg);

/// QSM on the reference grid for one method.
///   none: reconstruct on the acquisition grid with the oblique B0 direction,
///         then move chi to the reference grid by k-space resampling.
///   ireg: unwrap on the acquisition grid, trilinearly resample phase and
///         magnitude, invert with B0 along z.
///   kreg: register the complex echoes in k-space, invert with B0 along z.
ScalarVolume reconstruct_arm(Method method, const std::vector<nufft::KSpaceSamples>& acquired,
                             const geometry::ProtocolDescriptor& protocol, const PipelineConfig& cfg);

}  // namespace kreg::app
