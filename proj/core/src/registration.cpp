#include "kreg/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kreg/error.hpp"
#include "kreg/fft.hpp"
#include "kreg/parallel.hpp"

namespace kreg::registration {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Spectral Laplacian eigenvalue on the centered lattice.
std::vector<double> laplacian_symbol(const Dims3& dims, const Vec3& voxel) {
  std::vector<double> symbol(voxel_count(dims));
  std::size_t n = 0;
  for (std::size_t k = 0; k < dims[2]; ++k) {
    const double fz = kTwoPi * geometry::centered_index(k, dims[2]) / (dims[2] * voxel[2]);
    for (std::size_t j = 0; j < dims[1]; ++j) {
      const double fy = kTwoPi * geometry::centered_index(j, dims[1]) / (dims[1] * voxel[1]);
      for (std::size_t i = 0; i < dims[0]; ++i, ++n) {
        const double fx = kTwoPi * geometry::centered_index(i, dims[0]) / (dims[0] * voxel[0]);
        symbol[n] = -(fx * fx + fy * fy + fz * fz);
      }
    }
  }
  return symbol;
}

bool in_reference_band(const Vec3& l) {
  constexpr double slack = 1e-12;
  for (double c : l)
    if (!(c >= -kPi - slack && c < kPi - slack)) return false;
  return true;
}

}  // namespace

double wrap_phase(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("phase must be finite");
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  // fmod can land exactly on +pi after the shift when x + pi rounds to 2 pi k.
  if (r >= kPi) r -= kTwoPi;
  return r;
}

ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped) {
  const Dims3& dims = wrapped.dims();
  for (std::size_t n : dims)
    if (n < 4) throw InvalidArgument("Laplacian unwrapping needs at least 4 voxels per axis");

  const std::vector<double> symbol = laplacian_symbol(dims, wrapped.voxel_sizes());
  const std::size_t count = wrapped.size();

  // L applied to cos + i sin yields L(cos) + i L(sin) because the symbol is real and even.
  ComplexVolume trig(dims, wrapped.voxel_sizes());
  for (std::size_t n = 0; n < count; ++n) trig[n] = std::polar(1.0, wrapped[n]);
  ComplexVolume spectrum = fft::centered_fft(trig);
  for (std::size_t n = 0; n < count; ++n) spectrum[n] *= symbol[n];
  const ComplexVolume lap = fft::centered_ifft(spectrum);

  ComplexVolume rhs(dims, wrapped.voxel_sizes());
  for (std::size_t n = 0; n < count; ++n) {
    const double c = trig[n].real();
    const double s = trig[n].imag();
    rhs[n] = c * lap[n].imag() - s * lap[n].real();
  }
  ComplexVolume rhs_hat = fft::centered_fft(rhs);
  for (std::size_t n = 0; n < count; ++n) rhs_hat[n] = symbol[n] != 0.0 ? rhs_hat[n] / symbol[n] : 0.0;
  const ComplexVolume psi0 = fft::centered_ifft(rhs_hat);

  std::complex<double> residual{0.0, 0.0};
  double input_mean = 0.0;
  for (std::size_t n = 0; n < count; ++n) {
    residual += std::polar(1.0, wrapped[n] - psi0[n].real());
    input_mean += wrapped[n];
  }
  input_mean /= static_cast<double>(count);
  double offset = std::arg(residual);
  offset += kTwoPi * std::round((input_mean - offset) / kTwoPi);

  ScalarVolume out(dims, wrapped.voxel_sizes());
  for (std::size_t n = 0; n < count; ++n) out[n] = psi0[n].real() + offset;
  out.set_echo_times_s(wrapped.echo_times_s());
  return out;
}

RegistrationPlan make_plan(const geometry::ProtocolDescriptor& protocol,
                           const geometry::ReferenceProtocol& ref) {
  protocol.validate();
  ref.validate();
  RegistrationPlan plan;
  plan.source = protocol;
  plan.reference = ref;
  plan.scaling = geometry::scaling_factors(protocol.voxel_sizes, ref.iso_voxel_mm);
  plan.rotation = protocol.rotation;
  plan.mapped = geometry::to_reference_frame(geometry::cartesian_kspace_lattice(protocol, ref),
                                             protocol, ref);
  plan.retained.resize(plan.mapped.size());
  for (std::size_t s = 0; s < plan.mapped.size(); ++s) {
    plan.retained[s] = in_reference_band(plan.mapped[s]) ? 1 : 0;
    plan.retained_count += plan.retained[s];
  }
  plan.density_weight = static_cast<double>(voxel_count(ref.dims())) /
                        static_cast<double>(voxel_count(protocol.matrix_dims));
  return plan;
}

std::vector<ComplexVolume> kspace_register(std::span<const nufft::KSpaceSamples> acquired,
                                           const geometry::ProtocolDescriptor& protocol,
                                           const geometry::ReferenceProtocol& ref,
                                           const nufft::GriddingConfig& cfg) {
  const RegistrationPlan plan = make_plan(protocol, ref);
  for (const auto& echo : acquired)
    if (echo.values.size() != plan.mapped.size())
      throw InvalidArgument("echo sample count does not match the acquisition lattice");
  if (plan.retained_count == 0)
    throw EmptyCoverageError("no k-space sample falls inside the reference band");

  nufft::KSpaceSamples kept;
  kept.locations.reserve(plan.retained_count);
  for (std::size_t s = 0; s < plan.mapped.size(); ++s)
    if (plan.retained[s]) kept.locations.push_back(plan.mapped[s]);

  const Vec3 voxel{ref.iso_voxel_mm, ref.iso_voxel_mm, ref.iso_voxel_mm};
  std::vector<ComplexVolume> out;
  out.reserve(acquired.size());
  for (const auto& echo : acquired) {
    kept.values.clear();
    kept.values.reserve(plan.retained_count);
    for (std::size_t s = 0; s < plan.mapped.size(); ++s)
      if (plan.retained[s]) kept.values.push_back(echo.values[s]);
    out.push_back(nufft::nufft_adjoint_type1(kept, ref.dims(), cfg, plan.density_weight, voxel));
  }
  return out;
}

std::vector<ComplexVolume> kspace_register(std::span<const ComplexVolume> acquired_kspace,
                                           const geometry::ProtocolDescriptor& protocol,
                                           const geometry::ReferenceProtocol& ref,
                                           const nufft::GriddingConfig& cfg) {
  std::vector<nufft::KSpaceSamples> samples;
  samples.reserve(acquired_kspace.size());
  for (const auto& k : acquired_kspace) {
    if (k.dims() != protocol.matrix_dims)
      throw InvalidArgument("k-space volume dims do not match the protocol matrix");
    nufft::KSpaceSamples s;
    s.values = k.values();
    samples.push_back(std::move(s));
  }
  auto out = kspace_register(std::span<const nufft::KSpaceSamples>(samples), protocol, ref, cfg);
  for (std::size_t e = 0; e < out.size(); ++e) out[e].set_echo_times_s(acquired_kspace[e].echo_times_s());
  return out;
}

bool trilinear_sample(const ScalarVolume& v, const Vec3& coord, double& value) {
  constexpr double slack = 1e-9;
  std::array<std::size_t, 3> i0{};
  std::array<std::size_t, 3> i1{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const double hi = static_cast<double>(v.dims()[a] - 1);
    double c = coord[a];
    if (!(c >= -slack && c <= hi + slack)) return false;
    c = std::clamp(c, 0.0, hi);
    const double fl = std::floor(c);
    i0[a] = static_cast<std::size_t>(fl);
    i1[a] = std::min(i0[a] + 1, v.dims()[a] - 1);
    frac[a] = c - fl;
  }
  const auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return v(i, j, k); };
  const double c00 = at(i0[0], i0[1], i0[2]) * (1 - frac[0]) + at(i1[0], i0[1], i0[2]) * frac[0];
  const double c10 = at(i0[0], i1[1], i0[2]) * (1 - frac[0]) + at(i1[0], i1[1], i0[2]) * frac[0];
  const double c01 = at(i0[0], i0[1], i1[2]) * (1 - frac[0]) + at(i1[0], i0[1], i1[2]) * frac[0];
  const double c11 = at(i0[0], i1[1], i1[2]) * (1 - frac[0]) + at(i1[0], i1[1], i1[2]) * frac[0];
  const double c0 = c00 * (1 - frac[1]) + c10 * frac[1];
  const double c1 = c01 * (1 - frac[1]) + c11 * frac[1];
  value = c0 * (1 - frac[2]) + c1 * frac[2];
  return true;
}

Resampled resample_to_reference(const ScalarVolume& acquisition,
                                const geometry::ProtocolDescriptor& protocol,
                                const geometry::ReferenceProtocol& ref) {
  if (acquisition.dims() != protocol.matrix_dims)
    throw InvalidArgument("acquisition volume dims do not match the protocol matrix");
  const Dims3 out_dims = ref.dims();
  const Dims3& src = acquisition.dims();
  const geometry::RotationMatrix to_acq = protocol.rotation.transpose();
  const double vr = ref.iso_voxel_mm;

  Resampled r{ScalarVolume(out_dims, {vr, vr, vr}), Mask(out_dims)};
  parallel_for(out_dims[2], [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k)
      for (std::size_t j = 0; j < out_dims[1]; ++j)
        for (std::size_t i = 0; i < out_dims[0]; ++i) {
          const Vec3 p{vr * geometry::centered_index(i, out_dims[0]),
                       vr * geometry::centered_index(j, out_dims[1]),
                       vr * geometry::centered_index(k, out_dims[2])};
          const Vec3 pa = to_acq.apply(p);
          Vec3 coord{};
          for (int a = 0; a < 3; ++a)
            coord[a] = pa[a] / protocol.voxel_sizes[a] + static_cast<double>(src[a] / 2);
          double value = 0.0;
          const std::size_t n = r.volume.index(i, j, k);
          if (trilinear_sample(acquisition, coord, value)) {
            r.volume[n] = value;
            r.inside.set(n, true);
          }
        }
  });
  r.volume.set_echo_times_s(acquisition.echo_times_s());
  return r;
}

ImageRegistration image_register_baseline(std::span<const ScalarVolume> unwrapped_phase,
                                          std::span<const ScalarVolume> magnitude,
                                          const geometry::ProtocolDescriptor& protocol,
                                          const geometry::ReferenceProtocol& ref) {
  if (unwrapped_phase.size() != magnitude.size())
    throw InvalidArgument("phase and magnitude echo counts differ");
  ImageRegistration out;
  out.inside = Mask(ref.dims(), true);
  for (std::size_t e = 0; e < unwrapped_phase.size(); ++e) {
    if (unwrapped_phase[e].dims() != magnitude[e].dims())
      throw InvalidArgument("phase and magnitude dims differ");
    auto ph = resample_to_reference(unwrapped_phase[e], protocol, ref);
    auto mag = resample_to_reference(magnitude[e], protocol, ref);
    out.inside = std::move(ph.inside);
    out.phase.push_back(std::move(ph.volume));
    out.magnitude.push_back(std::move(mag.volume));
  }
  return out;
}

}  // namespace kreg::registration
