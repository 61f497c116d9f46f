#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kreg/error.hpp"
#include "kreg/fft.hpp"
#include "kreg/forward.hpp"
#include "kreg/parallel.hpp"
#include "kreg/random.hpp"
#include "oracles.hpp"

namespace kreg {
namespace {

using oracle::kPi;

forward::Primitive sphere(const Vec3& c, double r, double chi, double mag = 1.0) {
  forward::Primitive p;
  p.kind = forward::PrimitiveKind::sphere;
  p.center = c;
  p.radii = {r, r, r};
  p.chi_ppm = chi;
  p.magnitude = mag;
  return p;
}

geometry::ProtocolDescriptor make_protocol(const geometry::RotationMatrix& r, const Vec3& voxel,
                                           const Dims3& dims, double fov) {
  geometry::ProtocolDescriptor p;
  p.rotation = r;
  p.voxel_sizes = voxel;
  p.matrix_dims = dims;
  p.fov_mm = fov;
  p.echo_times_s = {0.01};
  return p;
}

double rel(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
  return oracle::rel_l2(a, b);
}

TEST(BuildPhantom, EmptySpec) {
  const forward::Phantom ph = forward::build_phantom({}, {16, 16, 16});
  for (double x : ph.chi.values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(ph.mask.count(), 0u);
  EXPECT_FALSE(ph.warnings.empty());
  EXPECT_THROW(forward::build_phantom({}, {16, 15, 16}), InvalidArgument);
}

TEST(BuildPhantom, SphereMatchesBruteForce) {
  forward::SusceptibilityPhantomSpec spec;
  spec.primitives.push_back(sphere({15.5, 15.5, 15.5}, 5.0, 0.1, 0.8));
  const forward::Phantom ph = forward::build_phantom(spec, {32, 32, 32});
  std::size_t count = 0;
  for (std::size_t k = 0; k < 32; ++k)
    for (std::size_t j = 0; j < 32; ++j)
      for (std::size_t i = 0; i < 32; ++i) {
        const double r2 = std::pow(i - 15.5, 2) + std::pow(j - 15.5, 2) + std::pow(k - 15.5, 2);
        const bool in = r2 <= 25.0;
        count += in;
        ASSERT_EQ(ph.mask[ph.chi.index(i, j, k)], in);
        ASSERT_EQ(ph.chi(i, j, k), in ? 0.1 : 0.0);
        ASSERT_EQ(ph.magnitude(i, j, k), in ? 0.8 : 0.0);
      }
  EXPECT_EQ(ph.mask.count(), count);
  EXPECT_TRUE(ph.warnings.empty());
}

TEST(BuildPhantom, LaterPrimitiveWinsAndOutsideWarns) {
  forward::SusceptibilityPhantomSpec spec;
  spec.primitives.push_back(sphere({8, 8, 8}, 4.0, 0.1));
  spec.primitives.push_back(sphere({11, 8, 8}, 3.0, -0.2));
  spec.primitives.push_back(sphere({100, 100, 100}, 2.0, 0.3));
  const forward::Phantom ph = forward::build_phantom(spec, {16, 16, 16});
  EXPECT_EQ(ph.chi(10, 8, 8), -0.2);
  EXPECT_EQ(ph.chi(6, 8, 8), 0.1);
  EXPECT_EQ(ph.warnings.size(), 1u);
}

TEST(BuildPhantom, CylinderMatchesBruteForce) {
  forward::Primitive c;
  c.kind = forward::PrimitiveKind::cylinder;
  c.center = {10, 9, 11};
  c.radii = {2.5, 2.5, 2.5};
  c.axis = {0.3, 0.0, 1.0};
  c.half_length = 6.0;
  c.chi_ppm = 0.45;
  forward::SusceptibilityPhantomSpec spec;
  spec.primitives.push_back(c);
  const forward::Phantom ph = forward::build_phantom(spec, {20, 20, 24});
  const double an = std::sqrt(0.09 + 1.0);
  const Vec3 u{0.3 / an, 0.0, 1.0 / an};
  std::size_t count = 0;
  for (std::size_t k = 0; k < 24; ++k)
    for (std::size_t j = 0; j < 20; ++j)
      for (std::size_t i = 0; i < 20; ++i) {
        const Vec3 d{i - 10.0, j - 9.0, k - 11.0};
        const double t = dot(d, u);
        const double r2 = dot(d, d) - t * t;
        count += (std::abs(t) <= 6.0 && r2 <= 6.25);
      }
  EXPECT_EQ(ph.mask.count(), count);
}

TEST(DipoleKernel, ClosedFormCases) {
  const Dims3 d{8, 8, 8};
  const ScalarVolume k = forward::dipole_kernel(d, {1, 1, 1}, {0, 0, 1});
  auto at = [&](long x, long y, long z) { return k(x + 4, y + 4, z + 4); };
  EXPECT_EQ(at(0, 0, 0), 0.0);
  EXPECT_NEAR(at(0, 0, 2), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(at(3, 0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(at(1, 2, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(at(1, 1, 1), 0.0, 1e-15);  // magic angle
  EXPECT_THROW(forward::dipole_kernel(d, {1, 1, 1}, {0, 0, 1.01}), InvalidArgument);
}

TEST(DipoleKernel, VoxelSizesEnterFrequencies) {
  // k = (1/(8*1), 0, 1/(8*2)) with b0 along z: cos^2 = (1/16)^2 / ((1/8)^2 + (1/16)^2) = 1/5.
  const ScalarVolume k = forward::dipole_kernel({8, 8, 8}, {1, 1, 2}, {0, 0, 1});
  EXPECT_NEAR(k(5, 4, 5), 1.0 / 3.0 - 0.2, 1e-15);
}

TEST(DipoleKernel, RangeAndSymmetry) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 5; ++t) {
    Vec3 b{g(rng), g(rng), g(rng)};
    const double n = norm(b);
    for (double& c : b) c /= n;
    const Dims3 d{8, 10, 6};
    const ScalarVolume k = forward::dipole_kernel(d, {1.0, 0.8, 1.5}, b);
    for (double v : k.values()) {
      EXPECT_GE(v, -2.0 / 3.0 - 1e-15);
      EXPECT_LE(v, 1.0 / 3.0 + 1e-15);
    }
    // D(k) = D(-k) on the periodic lattice.
    for (std::size_t z = 0; z < d[2]; ++z)
      for (std::size_t y = 0; y < d[1]; ++y)
        for (std::size_t x = 0; x < d[0]; ++x) {
          const std::size_t xm = (d[0] - x) % d[0], ym = (d[1] - y) % d[1], zm = (d[2] - z) % d[2];
          EXPECT_NEAR(k(x, y, z), k(xm, ym, zm), 1e-15);
        }
  }
}

TEST(FieldFromChi, UniformChiGivesZeroField) {
  ScalarVolume chi({16, 16, 16});
  for (auto& x : chi.values()) x = 0.7;
  const ScalarVolume field = forward::field_from_chi(chi, {0, 0, 1});
  for (double f : field.values()) EXPECT_NEAR(f, 0.0, 1e-14);
}

TEST(FieldFromChi, DcFreeAndLinear) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  ScalarVolume chi({16, 12, 10}, {1.0, 1.0, 2.0});
  for (auto& x : chi.values()) x = g(rng);
  const Vec3 b0 = geometry::b0_in_image_frame(geometry::rotation_from_euler(20, 10, 0));
  const ScalarVolume f = forward::field_from_chi(chi, b0);
  double mean = 0.0;
  for (double x : f.values()) mean += x;
  EXPECT_LE(std::abs(mean / f.size()), 1e-10);

  ScalarVolume chi2 = chi;
  for (auto& x : chi2.values()) x *= 2.0;
  const ScalarVolume f2 = forward::field_from_chi(chi2, b0);
  for (std::size_t n = 0; n < f.size(); ++n) EXPECT_NEAR(f2[n], 2.0 * f[n], 1e-12);
}

// Spatial dipole (3 cos^2 - 1) / (4 pi r^3) sampled on the lattice, summed
// over periodic images inside a sphere of radius `boxes` periods. Spherical
// summation of the conditionally convergent lattice sum matches D(0) = 0.
std::vector<double> periodic_dipole(long n, int boxes) {
  std::vector<double> g(static_cast<std::size_t>(n * n * n), 0.0);
  const double rc2 = std::pow(boxes * n, 2);
  for (long dz = -n / 2; dz < n / 2; ++dz)
    for (long dy = -n / 2; dy < n / 2; ++dy)
      for (long dx = -n / 2; dx < n / 2; ++dx) {
        double acc = 0.0;
        for (long a = -boxes - 1; a <= boxes + 1; ++a)
          for (long b = -boxes - 1; b <= boxes + 1; ++b)
            for (long c = -boxes - 1; c <= boxes + 1; ++c) {
              const double x = dx + a * n, y = dy + b * n, z = dz + c * n;
              const double r2 = x * x + y * y + z * z;
              if (r2 == 0.0 || r2 > rc2) continue;
              acc += (3.0 * z * z / r2 - 1.0) / (4.0 * kPi * r2 * std::sqrt(r2));
            }
        g[static_cast<std::size_t>(((dz + n) % n) * n * n + ((dy + n) % n) * n + (dx + n) % n)] = acc;
      }
  return g;
}

double spatial_oracle_error(const ScalarVolume& chi, const std::vector<double>& kernel) {
  const long n = static_cast<long>(chi.dims()[0]);
  ScalarVolume direct(chi.dims());
  for (long s = 0; s < static_cast<long>(chi.size()); ++s) {
    if (std::abs(chi[s]) < 1e-12) continue;
    const long si = s % n, sj = (s / n) % n, sk = s / (n * n);
    for (long k = 0; k < n; ++k)
      for (long j = 0; j < n; ++j)
        for (long i = 0; i < n; ++i)
          direct(i, j, k) += chi[s] * kernel[static_cast<std::size_t>(
                                          ((k - sk + n) % n) * n * n + ((j - sj + n) % n) * n + (i - si + n) % n)];
  }
  const ScalarVolume f = forward::field_from_chi(chi, {0, 0, 1});
  double mf = 0.0, md = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mf += f[i];
    md += direct[i];
  }
  mf /= f.size();
  md /= f.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += std::pow((f[i] - mf) - (direct[i] - md), 2);
    den += std::pow(f[i] - mf, 2);
  }
  return std::sqrt(num / den);
}

TEST(FieldFromChi, MatchesSpatialDipoleConvolution) {
  const long n = 32;
  const std::vector<double> kernel = periodic_dipole(n, 3);
  ScalarVolume soft({32, 32, 32}), hard({32, 32, 32});
  for (std::size_t k = 0; k < 32; ++k)
    for (std::size_t j = 0; j < 32; ++j)
      for (std::size_t i = 0; i < 32; ++i) {
        const double r = std::sqrt(std::pow(i - 16.0, 2) + std::pow(j - 16.0, 2) + std::pow(k - 16.0, 2));
        soft(i, j, k) = 0.5 * std::erfc((r - 5.0) / std::sqrt(2.0));
        hard(i, j, k) = r <= 5.0 ? 1.0 : 0.0;
      }
  // One-voxel soft edge: the sampled spatial kernel and the lattice D agree
  // at the frequencies the object occupies.
  EXPECT_LE(spatial_oracle_error(soft, kernel), 2e-2);
  // A hard edge puts energy where the sampled spatial kernel aliases;
  // measured 4.9e-2 here.
  EXPECT_LE(spatial_oracle_error(hard, kernel), 6e-2);
}

TEST(SynthEchoes, PhaseAccrual) {
  ScalarVolume field({4, 4, 4}), mag({4, 4, 4});
  for (auto& x : field.values()) x = 1.0;
  for (auto& x : mag.values()) x = 2.0;
  const std::vector<double> tes{0.00794, 0.01594, 0.02394};
  const auto echoes = forward::synth_echoes(field, mag, tes, {});
  ASSERT_EQ(echoes.size(), 3u);
  // 2 pi * 42.576e6 * 3 * 1e-6 * 7.94e-3, wrapped.
  const double phi0 = 6.372157221748547;
  EXPECT_NEAR(std::arg(echoes[0][0]), phi0 - 2 * kPi, 1e-12);
  EXPECT_NEAR(std::abs(echoes[0][0]), 2.0, 1e-14);
  for (std::size_t e = 0; e < 3; ++e) {
    const double expect = phi0 * tes[e] / tes[0];
    EXPECT_NEAR(std::remainder(std::arg(echoes[e][5]) - expect, 2 * kPi), 0.0, 1e-12);
    EXPECT_EQ(echoes[e].echo_times_s(), std::vector<double>{tes[e]});
  }
  for (auto& x : field.values()) x = 0.0;
  for (const auto& e : forward::synth_echoes(field, mag, tes, {}))
    for (const auto& z : e.values()) EXPECT_EQ(z.imag(), 0.0);
  const std::vector<double> bad{0.02, 0.01};
  EXPECT_THROW(forward::synth_echoes(field, mag, bad, {}), InvalidArgument);
}

TEST(SimulateAcquisition, ReferenceProtocolOnReferenceGridIsFft) {
  std::mt19937_64 rng(21);
  const Dims3 d{16, 16, 16};
  const ComplexVolume img = oracle::random_complex_volume(d, rng);
  const auto p = make_protocol(geometry::RotationMatrix(), {1, 1, 1}, d, 16);
  const auto s = forward::simulate_acquisition(std::span<const ComplexVolume>(&img, 1), p, {1.0, 16}, 0.0, 1);
  ASSERT_EQ(s.size(), 1u);
  // Integer lattice positions are the W = 6 kernel's worst case (measured
  // 1.7e-5 here); random locations stay below 1e-5.
  EXPECT_LE(rel(s[0].values, fft::centered_fft(img).values()), 3e-5);
  EXPECT_EQ(forward::samples_to_volume(s[0], p).dims(), d);
}

class ObliqueSimulation : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g;
    master_ = ComplexVolume({32, 32, 32}, {0.5, 0.5, 0.5});
    // Smooth real object.
    const std::vector<oracle::Blob> blobs{{{0, 0, 0}, 3.0, 1.0}, {{2, -1, 1}, 1.5, 0.5}};
    const ScalarVolume b = oracle::sample_blobs(blobs, {32, 32, 32}, 0.5);
    for (std::size_t n = 0; n < b.size(); ++n) master_[n] = b[n];
    protocol_ = make_protocol(geometry::rotation_from_euler(20, 10, 0), {1, 1, 2}, {16, 16, 8}, 16);
  }
  ComplexVolume master_;
  geometry::ProtocolDescriptor protocol_;
  geometry::ReferenceProtocol ref_{1.0, 16};
};

TEST_F(ObliqueSimulation, RealObjectGivesHermitianSamples) {
  const auto s = forward::simulate_acquisition(std::span<const ComplexVolume>(&master_, 1), protocol_, ref_, 0.0, 1);
  const Dims3& d = protocol_.matrix_dims;
  const auto& v = s[0].values;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < d[2]; ++k)
    for (std::size_t j = 1; j < d[1]; ++j)
      for (std::size_t i = 1; i < d[0]; ++i) {
        const std::size_t a = i + d[0] * (j + d[1] * k);
        const std::size_t b = (d[0] - i) + d[0] * ((d[1] - j) + d[1] * (d[2] - k));
        num += std::norm(v[a] - std::conj(v[b]));
        den += std::norm(v[a]);
      }
  EXPECT_LE(std::sqrt(num / den), 1e-6);
}

TEST_F(ObliqueSimulation, DeterministicAcrossRunsAndThreads) {
  const std::vector<ComplexVolume> two{master_, master_};
  const std::size_t saved = thread_count();
  set_thread_count(1);
  const auto a = forward::simulate_acquisition(two, protocol_, ref_, 0.3, 77);
  const auto b = forward::simulate_acquisition(two, protocol_, ref_, 0.3, 77);
  set_thread_count(3);
  const auto c = forward::simulate_acquisition(two, protocol_, ref_, 0.3, 77);
  set_thread_count(saved);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a[e].values, b[e].values);
    EXPECT_EQ(a[e].values, c[e].values);
  }
  // Echoes draw from distinct noise streams.
  EXPECT_NE(a[0].values, a[1].values);
}

TEST_F(ObliqueSimulation, NoiseCalibration) {
  const double sigma = 0.25;
  ComplexVolume big({32, 32, 32}, {0.5, 0.5, 0.5});
  const auto p = make_protocol(geometry::RotationMatrix(), {1, 1, 1}, {16, 16, 16}, 16);
  const auto a = forward::simulate_acquisition(std::span<const ComplexVolume>(&big, 1), p, ref_, sigma, 1);
  const auto b = forward::simulate_acquisition(std::span<const ComplexVolume>(&big, 1), p, ref_, sigma, 2);
  double acc = 0.0, own = 0.0;
  for (std::size_t n = 0; n < a[0].size(); ++n) {
    acc += std::norm(a[0].values[n] - b[0].values[n]);
    own += std::norm(a[0].values[n]);
  }
  const double count = static_cast<double>(a[0].size());
  EXPECT_NEAR(std::sqrt(acc / count), sigma * std::sqrt(2.0), 0.05 * sigma * std::sqrt(2.0));
  EXPECT_NEAR(std::sqrt(own / count), sigma, 0.05 * sigma);
}

TEST_F(ObliqueSimulation, Superposition) {
  std::mt19937_64 rng(23);
  const ComplexVolume x = oracle::random_complex_volume({32, 32, 32}, rng);
  ComplexVolume y = master_;
  ComplexVolume mix({32, 32, 32}, {0.5, 0.5, 0.5});
  ComplexVolume xs({32, 32, 32}, {0.5, 0.5, 0.5}, x.values());
  const std::complex<double> ca{1.5, 0.2}, cb{-0.7, 0.0};
  for (std::size_t n = 0; n < mix.size(); ++n) mix[n] = ca * xs[n] + cb * y[n];
  const std::vector<ComplexVolume> in{xs, y, mix};
  const auto s = forward::simulate_acquisition(in, protocol_, ref_, 0.0, 5);
  std::vector<std::complex<double>> combined(s[0].size());
  for (std::size_t n = 0; n < combined.size(); ++n) combined[n] = ca * s[0].values[n] + cb * s[1].values[n];
  EXPECT_LE(rel(s[2].values, combined), 1e-8);
}

TEST_F(ObliqueSimulation, RejectsBadInputs) {
  EXPECT_THROW(forward::simulate_acquisition(std::span<const ComplexVolume>(&master_, 1), protocol_, ref_, -1.0, 1),
               InvalidArgument);
  const ComplexVolume aniso({32, 32, 32}, {0.5, 0.5, 1.0});
  EXPECT_THROW(forward::simulate_acquisition(std::span<const ComplexVolume>(&aniso, 1), protocol_, ref_, 0.0, 1),
               InvalidArgument);
  // A master grid coarser than the protocol cannot supply its band.
  const ComplexVolume coarse({16, 16, 16}, {2.0, 2.0, 2.0});
  EXPECT_THROW(forward::simulate_acquisition(std::span<const ComplexVolume>(&coarse, 1), protocol_, ref_, 0.0, 1),
               OutOfBandError);
}

TEST(CounterNormal, PureFunctionOfCounter) {
  const CounterNormal a(42), b(42), c(43);
  EXPECT_EQ(a.bits(0, 10), b.bits(0, 10));
  EXPECT_NE(a.bits(0, 10), c.bits(0, 10));
  EXPECT_NE(a.bits(0, 10), a.bits(1, 10));
  // SplitMix64 reference value for state 0.
  EXPECT_EQ(CounterNormal::mix(0), 0xE220A8397B1DCDAFull);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(3, i);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  double m = 0.0, v = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto z = a.normal_pair(0, static_cast<std::uint64_t>(i));
    m += z.real() + z.imag();
    v += z.real() * z.real() + z.imag() * z.imag();
  }
  EXPECT_NEAR(m / (2 * n), 0.0, 0.01);
  EXPECT_NEAR(v / (2 * n), 1.0, 0.01);
}

}  // namespace
}  // namespace kreg
