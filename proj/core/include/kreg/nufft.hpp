#pragma once

#include <complex>
#include <span>
#include <vector>

#include "kreg/geometry.hpp"
#include "kreg/volume.hpp"

namespace kreg::nufft {

/// Beatty's Kaiser-Bessel shape parameter
///   beta = pi * sqrt((W/osf)^2 (osf - 1/2)^2 - 0.8).
double beatty_beta(int kernel_width, double oversampling);

/// I0(beta sqrt(1 - (2u/W)^2)) / I0(beta) for |u| < W/2, zero outside.
double kb_kernel(double u, int kernel_width, double beta);

struct GriddingConfig {
  int kernel_width = 6;
  double oversampling = 2.0;
  double beta = beatty_beta(6, 2.0);

  GriddingConfig() = default;
  GriddingConfig(int width, double osf) : kernel_width(width), oversampling(osf), beta(beatty_beta(width, osf)) {}
  GriddingConfig(int width, double osf, double kb_beta) : kernel_width(width), oversampling(osf), beta(kb_beta) {}

  void validate() const;
};

struct KSpaceSamples {
  geometry::KSpaceLocations locations;
  std::vector<std::complex<double>> values;

  std::size_t size() const { return values.size(); }
  void validate() const;
};

/// Oversampled grid size per axis: ceil(osf * N) rounded up to even, at least W.
Dims3 oversampled_dims(const Dims3& dims, const GriddingConfig& cfg);

/// Image-domain transform of the normalized kernel at centered positions
/// x = n - N/2 of an N-point axis embedded in an M-point oversampled grid.
/// Evaluated by Simpson quadrature of the kernel's Fourier integral; the
/// centre value is 1.
std::vector<double> deapodization_profile(std::size_t n, std::size_t m, const GriddingConfig& cfg);

/// Divides `image` by the separable deapodization profile for its dims.
/// Throws NumericalError if any profile value is below 1e-12.
ComplexVolume deapodize(const ComplexVolume& image, const GriddingConfig& cfg);

/// Largest |l_i| accepted by the transforms (pi, plus rounding slack).
double band_limit();

/// Type-2 operator with the oversampled spectrum precomputed, so one image
/// can be sampled at several location sets:
///   s_j = sum_x image(x) exp(-i l_j . x),  x = centered integer offsets.
class Type2Plan {
 public:
  Type2Plan(const ComplexVolume& image, const GriddingConfig& cfg);

  /// Throws OutOfBandError if any |l_i| exceeds band_limit().
  std::vector<std::complex<double>> evaluate(const geometry::KSpaceLocations& locations) const;

  const Dims3& image_dims() const { return dims_; }

 private:
  GriddingConfig cfg_;
  Dims3 dims_;
  Dims3 grid_dims_;
  double kernel_scale_;
  std::vector<std::complex<double>> spectrum_;
};

KSpaceSamples nufft_type2(const ComplexVolume& image, const geometry::KSpaceLocations& locations,
                          const GriddingConfig& cfg);

/// image(x) = 1/(Nx Ny Nz) * sum_j w_j s_j exp(+i l_j . x).
/// With the full Cartesian lattice and unit weights this inverts nufft_type2.
ComplexVolume nufft_adjoint_type1(const KSpaceSamples& samples, const Dims3& dims,
                                  const GriddingConfig& cfg, std::span<const double> density_weights,
                                  const Vec3& voxel_sizes = {1.0, 1.0, 1.0});

/// Same with one weight shared by every sample.
ComplexVolume nufft_adjoint_type1(const KSpaceSamples& samples, const Dims3& dims,
                                  const GriddingConfig& cfg, double density_weight,
                                  const Vec3& voxel_sizes = {1.0, 1.0, 1.0});

}  // namespace kreg::nufft
