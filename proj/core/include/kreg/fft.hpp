#pragma once

#include <complex>
#include <span>

#include "kreg/geometry.hpp"
#include "kreg/volume.hpp"

namespace kreg::fft {

enum class Direction { forward, backward };

/// Unnormalized in-place 3D DFT of x-fastest data. Forward uses exp(-i...).
/// Plans are created with FFTW_ESTIMATE so results are reproducible.
void transform(std::span<std::complex<double>> data, const Dims3& dims, Direction direction);

/// DFT with centered indices on both sides:
///   S(k) = sum_x f(x) exp(-i 2 pi k.x / N), x and k in [-N/2, N/2).
/// Output is ordered like cartesian_kspace_lattice(dims).
ComplexVolume centered_fft(const ComplexVolume& image);

/// Inverse of centered_fft, carrying the 1/(Nx Ny Nz) factor.
ComplexVolume centered_ifft(const ComplexVolume& kspace);

/// Moves centered index c = n - N/2 to FFT storage position c mod N
/// (and back with `inverse`).
void center_to_origin(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                      const Dims3& dims, bool inverse = false);

}  // namespace kreg::fft
