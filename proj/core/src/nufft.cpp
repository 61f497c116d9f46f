#include "kreg/nufft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kreg/error.hpp"
#include "kreg/fft.hpp"
#include "kreg/parallel.hpp"

namespace kreg::nufft {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kQuadratureIntervals = 2048;
constexpr double kMinCorrection = 1e-12;

long wrap_index(long k, long m) {
  const long r = k % m;
  return r < 0 ? r + m : r;
}

/// Simpson nodes/weights on [-W/2, W/2] with the kernel pre-evaluated.
struct KernelQuadrature {
  std::vector<double> u;
  std::vector<double> weighted_kernel;

  explicit KernelQuadrature(const GriddingConfig& cfg) {
    const double half = 0.5 * cfg.kernel_width;
    const double h = 2.0 * half / kQuadratureIntervals;
    u.resize(kQuadratureIntervals + 1);
    weighted_kernel.resize(kQuadratureIntervals + 1);
    for (int i = 0; i <= kQuadratureIntervals; ++i) {
      u[i] = -half + h * i;
      const double simpson = (i == 0 || i == kQuadratureIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      // Evaluate just inside the support so the closed interval is integrated.
      const double ui = std::clamp(u[i], -half * (1 - 1e-15), half * (1 - 1e-15));
      weighted_kernel[i] = simpson * h / 3.0 * kb_kernel(ui, cfg.kernel_width, cfg.beta);
    }
  }

  /// integral of kernel(u) cos(2 pi u xi) du
  double transform(double xi) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += weighted_kernel[i] * std::cos(2.0 * kPi * u[i] * xi);
    return acc;
  }
};

/// Kernel weights along one axis for a sample at grid coordinate t.
struct AxisWeights {
  long start;
  std::array<double, 32> w;
};

AxisWeights axis_weights(double t, const GriddingConfig& cfg, double scale) {
  AxisWeights out{};
  const int width = cfg.kernel_width;
  out.start = static_cast<long>(std::ceil(t - 0.5 * width));
  for (int a = 0; a < width; ++a)
    out.w[a] = scale * kb_kernel(t - static_cast<double>(out.start + a), width, cfg.beta);
  return out;
}

void check_band(const geometry::KSpaceLocations& locations) {
  const double limit = band_limit();
  std::size_t bad = 0;
  for (const auto& l : locations)
    if (!(std::abs(l[0]) <= limit && std::abs(l[1]) <= limit && std::abs(l[2]) <= limit)) ++bad;
  if (bad > 0) throw OutOfBandError("k-space locations outside [-pi, pi]", bad);
}

double kernel_integral(const GriddingConfig& cfg) { return KernelQuadrature(cfg).transform(0.0); }

struct Profiles {
  std::array<std::vector<double>, 3> axis;
};

Profiles profiles_for(const Dims3& dims, const Dims3& grid, const GriddingConfig& cfg) {
  Profiles p;
  for (int a = 0; a < 3; ++a) {
    p.axis[a] = deapodization_profile(dims[a], grid[a], cfg);
    for (double v : p.axis[a])
      if (!(v >= kMinCorrection))
        throw NumericalError("deapodization correction below 1e-12; kernel too wide for this grid");
  }
  return p;
}

}  // namespace

double beatty_beta(int kernel_width, double oversampling) {
  if (kernel_width < 2) throw InvalidArgument("kernel width must be >= 2");
  if (!(oversampling > 1.0)) throw InvalidArgument("oversampling factor must be > 1");
  const double ratio = kernel_width / oversampling;
  const double arg = ratio * ratio * (oversampling - 0.5) * (oversampling - 0.5) - 0.8;
  if (!(arg > 0.0)) throw InvalidArgument("Beatty beta undefined for this width/oversampling");
  return kPi * std::sqrt(arg);
}

double kb_kernel(double u, int kernel_width, double beta) {
  const double x = 2.0 * u / kernel_width;
  if (!(std::abs(x) < 1.0)) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

void GriddingConfig::validate() const {
  if (kernel_width < 2 || kernel_width > 32) throw InvalidArgument("kernel width must be in [2, 32]");
  if (!(oversampling > 1.0)) throw InvalidArgument("oversampling factor must be > 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("kernel beta must be positive");
}

void KSpaceSamples::validate() const {
  if (locations.size() != values.size())
    throw InvalidArgument("k-space locations and values differ in length");
}

double band_limit() { return kPi * (1.0 + 1e-9); }

Dims3 oversampled_dims(const Dims3& dims, const GriddingConfig& cfg) {
  Dims3 out{};
  for (int a = 0; a < 3; ++a) {
    auto m = static_cast<std::size_t>(std::ceil(cfg.oversampling * static_cast<double>(dims[a]) - 1e-9));
    m += m % 2;
    out[a] = std::max<std::size_t>(m, static_cast<std::size_t>(cfg.kernel_width));
  }
  return out;
}

std::vector<double> deapodization_profile(std::size_t n, std::size_t m, const GriddingConfig& cfg) {
  cfg.validate();
  const KernelQuadrature quad(cfg);
  const double centre = quad.transform(0.0);
  std::vector<double> profile(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(geometry::centered_index(i, n));
    profile[i] = quad.transform(x / static_cast<double>(m)) / centre;
  }
  return profile;
}

ComplexVolume deapodize(const ComplexVolume& image, const GriddingConfig& cfg) {
  const Dims3& dims = image.dims();
  const Profiles p = profiles_for(dims, oversampled_dims(dims, cfg), cfg);
  ComplexVolume out = image;
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i)
        out(i, j, k) /= p.axis[0][i] * p.axis[1][j] * p.axis[2][k];
  return out;
}

Type2Plan::Type2Plan(const ComplexVolume& image, const GriddingConfig& cfg)
    : cfg_(cfg), dims_(image.dims()), grid_dims_(oversampled_dims(image.dims(), cfg)) {
  cfg_.validate();
  kernel_scale_ = 1.0 / kernel_integral(cfg_);
  const ComplexVolume corrected = deapodize(image, cfg_);

  const Dims3& m = grid_dims_;
  spectrum_.assign(voxel_count(m), {0.0, 0.0});
  parallel_for(dims_[2], [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const auto gz = static_cast<std::size_t>(wrap_index(geometry::centered_index(k, dims_[2]), m[2]));
      for (std::size_t j = 0; j < dims_[1]; ++j) {
        const auto gy = static_cast<std::size_t>(wrap_index(geometry::centered_index(j, dims_[1]), m[1]));
        for (std::size_t i = 0; i < dims_[0]; ++i) {
          const auto gx = static_cast<std::size_t>(wrap_index(geometry::centered_index(i, dims_[0]), m[0]));
          spectrum_[gx + m[0] * (gy + m[1] * gz)] = corrected(i, j, k);
        }
      }
    }
  });
  fft::transform(spectrum_, m, fft::Direction::forward);
}

std::vector<std::complex<double>> Type2Plan::evaluate(const geometry::KSpaceLocations& locations) const {
  check_band(locations);
  const Dims3& m = grid_dims_;
  const int width = cfg_.kernel_width;
  std::vector<std::complex<double>> out(locations.size());
  parallel_for(locations.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto& l = locations[s];
      std::array<AxisWeights, 3> aw;
      for (int a = 0; a < 3; ++a)
        aw[a] = axis_weights(l[a] * static_cast<double>(m[a]) / (2.0 * kPi), cfg_, kernel_scale_);
      std::complex<double> acc{0.0, 0.0};
      for (int c = 0; c < width; ++c) {
        const auto gz = static_cast<std::size_t>(wrap_index(aw[2].start + c, static_cast<long>(m[2])));
        std::complex<double> plane{0.0, 0.0};
        for (int b = 0; b < width; ++b) {
          const auto gy = static_cast<std::size_t>(wrap_index(aw[1].start + b, static_cast<long>(m[1])));
          const std::size_t row = m[0] * (gy + m[1] * gz);
          std::complex<double> line{0.0, 0.0};
          for (int a = 0; a < width; ++a) {
            const auto gx = static_cast<std::size_t>(wrap_index(aw[0].start + a, static_cast<long>(m[0])));
            line += aw[0].w[a] * spectrum_[row + gx];
          }
          plane += aw[1].w[b] * line;
        }
        acc += aw[2].w[c] * plane;
      }
      out[s] = acc;
    }
  });
  return out;
}

KSpaceSamples nufft_type2(const ComplexVolume& image, const geometry::KSpaceLocations& locations,
                          const GriddingConfig& cfg) {
  check_band(locations);
  Type2Plan plan(image, cfg);
  return {locations, plan.evaluate(locations)};
}

ComplexVolume nufft_adjoint_type1(const KSpaceSamples& samples, const Dims3& dims,
                                  const GriddingConfig& cfg, std::span<const double> density_weights,
                                  const Vec3& voxel_sizes) {
  samples.validate();
  cfg.validate();
  if (density_weights.size() != samples.size())
    throw InvalidArgument("density weights and samples differ in length");
  for (std::size_t n : dims)
    if (n == 0) throw InvalidArgument("output dimensions must be positive");
  check_band(samples.locations);

  const Dims3 m = oversampled_dims(dims, cfg);
  const int width = cfg.kernel_width;
  const double kernel_scale = 1.0 / kernel_integral(cfg);
  const std::size_t count = samples.size();

  // Per-sample kernel footprint.
  std::vector<std::array<AxisWeights, 3>> footprint(count);
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s)
      for (int a = 0; a < 3; ++a)
        footprint[s][a] = axis_weights(samples.locations[s][a] * static_cast<double>(m[a]) / (2.0 * kPi),
                                       cfg, kernel_scale);
  });

  // Bucket samples by their first z plane (stable, so index order is kept).
  const long mz = static_cast<long>(m[2]);
  std::vector<std::size_t> bucket_start(m[2] + 1, 0);
  for (std::size_t s = 0; s < count; ++s)
    ++bucket_start[static_cast<std::size_t>(wrap_index(footprint[s][2].start, mz)) + 1];
  for (std::size_t p = 0; p < m[2]; ++p) bucket_start[p + 1] += bucket_start[p];
  std::vector<std::size_t> order(count);
  {
    std::vector<std::size_t> fill(bucket_start.begin(), bucket_start.end() - 1);
    for (std::size_t s = 0; s < count; ++s)
      order[fill[static_cast<std::size_t>(wrap_index(footprint[s][2].start, mz))]++] = s;
  }

  // Each thread owns whole z planes of the oversampled grid and visits the
  // contributing samples in a fixed order, so the sums do not depend on the
  // thread count.
  std::vector<std::complex<double>> grid(voxel_count(m), {0.0, 0.0});
  parallel_for(m[2], [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) {
      for (int c = 0; c < width; ++c) {
        const auto bucket = static_cast<std::size_t>(wrap_index(static_cast<long>(p) - c, mz));
        for (std::size_t q = bucket_start[bucket]; q < bucket_start[bucket + 1]; ++q) {
          const std::size_t s = order[q];
          const auto& fp = footprint[s];
          const std::complex<double> v = density_weights[s] * samples.values[s] * fp[2].w[c];
          for (int b = 0; b < width; ++b) {
            const auto gy = static_cast<std::size_t>(wrap_index(fp[1].start + b, static_cast<long>(m[1])));
            const std::complex<double> vy = v * fp[1].w[b];
            const std::size_t row = m[0] * (gy + m[1] * p);
            for (int a = 0; a < width; ++a) {
              const auto gx = static_cast<std::size_t>(wrap_index(fp[0].start + a, static_cast<long>(m[0])));
              grid[row + gx] += vy * fp[0].w[a];
            }
          }
        }
      }
    }
  });

  fft::transform(grid, m, fft::Direction::backward);

  const Profiles prof = profiles_for(dims, m, cfg);
  const double norm = 1.0 / static_cast<double>(voxel_count(dims));
  ComplexVolume out(dims, voxel_sizes);
  parallel_for(dims[2], [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const auto gz = static_cast<std::size_t>(wrap_index(geometry::centered_index(k, dims[2]), mz));
      for (std::size_t j = 0; j < dims[1]; ++j) {
        const auto gy = static_cast<std::size_t>(
            wrap_index(geometry::centered_index(j, dims[1]), static_cast<long>(m[1])));
        for (std::size_t i = 0; i < dims[0]; ++i) {
          const auto gx = static_cast<std::size_t>(
              wrap_index(geometry::centered_index(i, dims[0]), static_cast<long>(m[0])));
          out(i, j, k) = grid[gx + m[0] * (gy + m[1] * gz)] * norm /
                         (prof.axis[0][i] * prof.axis[1][j] * prof.axis[2][k]);
        }
      }
    }
  });
  return out;
}

ComplexVolume nufft_adjoint_type1(const KSpaceSamples& samples, const Dims3& dims,
                                  const GriddingConfig& cfg, double density_weight,
                                  const Vec3& voxel_sizes) {
  const std::vector<double> weights(samples.size(), density_weight);
  return nufft_adjoint_type1(samples, dims, cfg, weights, voxel_sizes);
}

}  // namespace kreg::nufft
