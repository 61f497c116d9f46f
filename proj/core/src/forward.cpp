#include "kreg/forward.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kreg/error.hpp"
#include "kreg/fft.hpp"
#include "kreg/parallel.hpp"
#include "kreg/random.hpp"

namespace kreg {

std::uint64_t CounterNormal::mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterNormal::bits(std::uint64_t stream, std::uint64_t index) const {
  return mix(mix(mix(seed_) ^ stream) ^ index);
}

double CounterNormal::uniform(std::uint64_t stream, std::uint64_t index) const {
  return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
}

std::complex<double> CounterNormal::normal_pair(std::uint64_t stream, std::uint64_t index) const {
  const double u1 = uniform(stream, 2 * index);
  const double u2 = uniform(stream, 2 * index + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

std::complex<double> CounterNormal::circular(std::uint64_t stream, std::uint64_t index,
                                             double sigma) const {
  return normal_pair(stream, index) * (sigma / std::numbers::sqrt2);
}

namespace forward {
namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

bool Primitive::contains(const Vec3& p) const {
  const Vec3 d{p[0] - center[0], p[1] - center[1], p[2] - center[2]};
  switch (kind) {
    case PrimitiveKind::sphere:
      return dot(d, d) <= radii[0] * radii[0];
    case PrimitiveKind::ellipsoid: {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a) acc += (d[a] / radii[a]) * (d[a] / radii[a]);
      return acc <= 1.0;
    }
    case PrimitiveKind::cylinder: {
      const double n = norm(axis);
      const Vec3 u{axis[0] / n, axis[1] / n, axis[2] / n};
      const double along = dot(d, u);
      if (std::abs(along) > half_length) return false;
      const double radial2 = dot(d, d) - along * along;
      return radial2 <= radii[0] * radii[0];
    }
  }
  return false;
}

void Primitive::validate() const {
  const int used = kind == PrimitiveKind::ellipsoid ? 3 : 1;
  for (int a = 0; a < used; ++a)
    if (!(radii[a] > 0.0)) throw InvalidArgument("primitive radii must be positive");
  if (kind == PrimitiveKind::cylinder) {
    if (!(half_length > 0.0)) throw InvalidArgument("cylinder half length must be positive");
    if (!(norm(axis) > 0.0)) throw InvalidArgument("cylinder axis must be non-zero");
  }
  if (!std::isfinite(chi_ppm) || !std::isfinite(magnitude))
    throw InvalidArgument("primitive values must be finite");
}

SusceptibilityPhantomSpec SusceptibilityPhantomSpec::scaled(double factor) const {
  SusceptibilityPhantomSpec out = *this;
  for (auto& p : out.primitives) {
    for (int a = 0; a < 3; ++a) {
      p.center[a] *= factor;
      p.radii[a] *= factor;
    }
    p.half_length *= factor;
  }
  return out;
}

Phantom build_phantom(const SusceptibilityPhantomSpec& spec, const Dims3& dims, const Vec3& voxel_sizes) {
  for (std::size_t n : dims)
    if (n < 16) throw InvalidArgument("phantom grid must be at least 16 voxels per axis");
  for (const auto& p : spec.primitives) p.validate();

  Phantom out{ScalarVolume(dims, voxel_sizes), ScalarVolume(dims, voxel_sizes), Mask(dims), {}};
  std::vector<std::size_t> hits(spec.primitives.size(), 0);
  std::size_t n = 0;
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i, ++n) {
        const Vec3 p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
        double chi = spec.background_chi_ppm;
        double mag = spec.background_magnitude;
        bool inside = false;
        for (std::size_t q = 0; q < spec.primitives.size(); ++q) {
          const auto& prim = spec.primitives[q];
          if (prim.contains(p)) {
            chi = prim.chi_ppm;
            mag = prim.magnitude;
            inside = true;
            ++hits[q];
          }
        }
        out.chi[n] = chi;
        out.magnitude[n] = mag;
        out.mask.set(n, inside);
      }

  if (spec.primitives.empty()) out.warnings.push_back("phantom has no primitives");
  for (std::size_t q = 0; q < hits.size(); ++q)
    if (hits[q] == 0) {
      std::ostringstream msg;
      msg << "primitive " << q << " covers no voxel of the " << dims[0] << "x" << dims[1] << "x"
          << dims[2] << " grid";
      out.warnings.push_back(msg.str());
    }
  return out;
}

ScalarVolume dipole_kernel(const Dims3& dims, const Vec3& voxel_sizes, const Vec3& b0_img) {
  if (std::abs(norm(b0_img) - 1.0) > 1e-9) throw InvalidArgument("b0 direction must be a unit vector");
  for (double v : voxel_sizes)
    if (!(v > 0.0)) throw InvalidArgument("voxel sizes must be positive");

  const auto raw = [&](const std::array<long, 3>& c) {
    Vec3 k{};
    for (int a = 0; a < 3; ++a) k[a] = static_cast<double>(c[a]) / (static_cast<double>(dims[a]) * voxel_sizes[a]);
    const double k2 = dot(k, k);
    if (k2 == 0.0) return 0.0;
    const double kb = dot(k, b0_img);
    return 1.0 / 3.0 - kb * kb / k2;
  };

  ScalarVolume d(dims, voxel_sizes);
  std::size_t n = 0;
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i, ++n) {
        const std::array<std::size_t, 3> idx{i, j, k};
        std::array<long, 3> c{};
        std::array<long, 3> neg{};
        for (int a = 0; a < 3; ++a) {
          c[a] = geometry::centered_index(idx[a], dims[a]);
          const long half = static_cast<long>(dims[a] / 2);
          // -c wraps back onto itself at the Nyquist index of an even axis.
          neg[a] = (dims[a] % 2 == 0 && c[a] == -half) ? c[a] : -c[a];
        }
        d[n] = 0.5 * (raw(c) + raw(neg));
      }
  return d;
}

ScalarVolume field_from_chi(const ScalarVolume& chi_ppm, const Vec3& b0_img) {
  const ScalarVolume d = dipole_kernel(chi_ppm.dims(), chi_ppm.voxel_sizes(), b0_img);
  ComplexVolume spectrum = fft::centered_fft(volume::to_complex(chi_ppm));
  for (std::size_t n = 0; n < spectrum.size(); ++n) spectrum[n] *= d[n];
  ScalarVolume field = volume::real_part(fft::centered_ifft(spectrum));
  field.set_echo_times_s({});
  return field;
}

double PhysicsConstants::rad_per_s_per_ppm() const {
  return 2.0 * kPi * gamma_bar_hz_per_T * field_strength_T * 1e-6;
}

void PhysicsConstants::validate() const {
  if (!(gamma_bar_hz_per_T > 0.0)) throw InvalidArgument("gyromagnetic ratio must be positive");
  if (!(field_strength_T > 0.0)) throw InvalidArgument("field strength must be positive");
}

std::vector<ComplexVolume> synth_echoes(const ScalarVolume& field_ppm, const ScalarVolume& magnitude,
                                        std::span<const double> echo_times_s,
                                        const PhysicsConstants& constants) {
  constants.validate();
  if (field_ppm.dims() != magnitude.dims()) throw InvalidArgument("field and magnitude dims differ");
  for (std::size_t e = 0; e < echo_times_s.size(); ++e) {
    if (!(echo_times_s[e] > 0.0)) throw InvalidArgument("echo times must be positive");
    if (e > 0 && !(echo_times_s[e] > echo_times_s[e - 1]))
      throw InvalidArgument("echo times must be strictly increasing");
  }
  const double rate = constants.rad_per_s_per_ppm();
  std::vector<ComplexVolume> echoes;
  for (double te : echo_times_s) {
    ComplexVolume s(field_ppm.dims(), field_ppm.voxel_sizes());
    for (std::size_t n = 0; n < s.size(); ++n) s[n] = std::polar(magnitude[n], rate * field_ppm[n] * te);
    s.set_echo_times_s({te});
    echoes.push_back(std::move(s));
  }
  return echoes;
}

std::vector<nufft::KSpaceSamples> simulate_acquisition(std::span<const ComplexVolume> master_signal,
                                                       const geometry::ProtocolDescriptor& protocol,
                                                       const geometry::ReferenceProtocol& ref,
                                                       double noise_sigma, std::uint64_t seed,
                                                       const nufft::GriddingConfig& cfg) {
  protocol.validate();
  ref.validate();
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");

  const geometry::KSpaceLocations lattice = geometry::cartesian_kspace_lattice(protocol, ref);
  std::vector<nufft::KSpaceSamples> out;
  if (master_signal.empty()) return out;

  const Vec3& mv = master_signal.front().voxel_sizes();
  if (std::abs(mv[0] - mv[1]) > 1e-12 * mv[0] || std::abs(mv[0] - mv[2]) > 1e-12 * mv[0])
    throw InvalidArgument("master grid must be isotropic");
  const double to_master = mv[0] / ref.iso_voxel_mm;
  geometry::KSpaceLocations master_locations = geometry::to_reference_frame(lattice, protocol, ref);
  for (auto& l : master_locations)
    for (double& c : l) c *= to_master;

  const double acq_volume = protocol.voxel_sizes[0] * protocol.voxel_sizes[1] * protocol.voxel_sizes[2];
  const double value_scale = mv[0] * mv[1] * mv[2] / acq_volume;
  const CounterNormal noise(seed);

  for (std::size_t e = 0; e < master_signal.size(); ++e) {
    if (master_signal[e].dims() != master_signal.front().dims())
      throw InvalidArgument("echo volumes differ in dims");
    const nufft::Type2Plan plan(master_signal[e], cfg);
    nufft::KSpaceSamples s;
    s.locations = lattice;
    s.values = plan.evaluate(master_locations);
    parallel_for(s.values.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        s.values[j] *= value_scale;
        if (noise_sigma > 0.0) s.values[j] += noise.circular(e, j, noise_sigma);
      }
    });
    out.push_back(std::move(s));
  }
  return out;
}

ComplexVolume samples_to_volume(const nufft::KSpaceSamples& samples,
                                const geometry::ProtocolDescriptor& protocol) {
  return ComplexVolume(protocol.matrix_dims, protocol.voxel_sizes, samples.values);
}

}  // namespace forward
}  // namespace kreg
