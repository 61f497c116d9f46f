#include "kreg/qsm.hpp"

#include <algorithm>
#include <cmath>

#include "kreg/error.hpp"
#include "kreg/fft.hpp"
#include "kreg/registration.hpp"

namespace kreg::qsm {

FieldFitResult fit_field(std::span<const ScalarVolume> unwrapped_phase,
                         std::span<const ScalarVolume> magnitude, std::span<const double> echo_times_s,
                         const forward::PhysicsConstants& constants) {
  constants.validate();
  if (unwrapped_phase.empty()) throw InvalidArgument("field fit needs at least one echo");
  if (unwrapped_phase.size() != magnitude.size() || unwrapped_phase.size() != echo_times_s.size())
    throw InvalidArgument("phase, magnitude and echo time counts differ");
  const Dims3 dims = unwrapped_phase.front().dims();
  for (std::size_t e = 0; e < unwrapped_phase.size(); ++e)
    if (unwrapped_phase[e].dims() != dims || magnitude[e].dims() != dims)
      throw InvalidArgument("echo volumes differ in dims");

  const Vec3 voxel = unwrapped_phase.front().voxel_sizes();
  FieldFitResult out{ScalarVolume(dims, voxel), ScalarVolume(dims, voxel)};
  const double rate = constants.rad_per_s_per_ppm();
  const std::size_t echoes = unwrapped_phase.size();
  for (std::size_t n = 0; n < out.field.size(); ++n) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t e = 0; e < echoes; ++e) {
      const double w = magnitude[e][n] * magnitude[e][n];
      num += w * echo_times_s[e] * unwrapped_phase[e][n];
      den += w * echo_times_s[e] * echo_times_s[e];
    }
    if (!(den > 0.0)) {
      out.field[n] = 0.0;
      out.residual[n] = -1.0;
      continue;
    }
    const double slope = num / den;  // rad/s
    double sq = 0.0;
    for (std::size_t e = 0; e < echoes; ++e) {
      const double r = unwrapped_phase[e][n] - slope * echo_times_s[e];
      sq += r * r;
    }
    out.field[n] = slope / rate;
    out.residual[n] = std::sqrt(sq / static_cast<double>(echoes));
  }
  return out;
}

void TkdConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 2.0 / 3.0))
    throw InvalidArgument("TKD threshold must lie in (0, 2/3)");
}

ScalarVolume tkd_invert(const ScalarVolume& field_ppm, const Vec3& b0_img, const TkdConfig& cfg) {
  cfg.validate();
  const ScalarVolume d = forward::dipole_kernel(field_ppm.dims(), field_ppm.voxel_sizes(), b0_img);
  ComplexVolume spectrum = fft::centered_fft(volume::to_complex(field_ppm));
  const double delta = cfg.threshold;
  for (std::size_t n = 0; n < spectrum.size(); ++n) {
    const double dk = d[n];
    const double divisor = std::abs(dk) >= delta ? dk : (dk < 0.0 ? -delta : delta);
    spectrum[n] /= divisor;
  }
  ScalarVolume chi = volume::real_part(fft::centered_ifft(spectrum));
  chi.set_echo_times_s({});
  return chi;
}

double nrmse(const ScalarVolume& x, const ScalarVolume& ref, const Mask& mask, bool demean) {
  if (x.dims() != ref.dims() || mask.dims() != ref.dims())
    throw InvalidArgument("NRMSE inputs differ in dims");
  const std::size_t count = mask.count();
  if (count == 0) throw InvalidArgument("NRMSE mask is empty");

  double mean_x = 0.0;
  double mean_ref = 0.0;
  if (demean) {
    for (std::size_t n = 0; n < ref.size(); ++n)
      if (mask[n]) {
        mean_x += x[n];
        mean_ref += ref[n];
      }
    mean_x /= static_cast<double>(count);
    mean_ref /= static_cast<double>(count);
  }
  double err = 0.0;
  double base = 0.0;
  for (std::size_t n = 0; n < ref.size(); ++n)
    if (mask[n]) {
      const double r = ref[n] - mean_ref;
      const double diff = (x[n] - mean_x) - r;
      err += diff * diff;
      base += r * r;
    }
  if (!(base > 0.0)) throw InvalidArgument("NRMSE reference has zero norm over the mask");
  return std::sqrt(err / base);
}

Mask magnitude_support(const ScalarVolume& magnitude, double fraction) {
  double peak = 0.0;
  for (double m : magnitude.values()) peak = std::max(peak, m);
  Mask support(magnitude.dims());
  const double cut = fraction * peak;
  for (std::size_t n = 0; n < magnitude.size(); ++n) support.set(n, peak > 0.0 && magnitude[n] >= cut);
  return support;
}

ScalarVolume susceptibility_from_phase(std::span<const ScalarVolume> unwrapped_phase,
                                       std::span<const ScalarVolume> magnitude,
                                       std::span<const double> echo_times_s, const Vec3& b0_img,
                                       const ChainConfig& cfg) {
  if (magnitude.empty()) throw InvalidArgument("no echoes");
  const Mask support = magnitude_support(magnitude.front(), cfg.support_fraction);
  std::vector<ScalarVolume> weights(magnitude.begin(), magnitude.end());
  for (auto& w : weights)
    for (std::size_t n = 0; n < w.size(); ++n)
      if (!support[n]) w[n] = 0.0;
  const FieldFitResult fit = fit_field(unwrapped_phase, weights, echo_times_s, cfg.constants);
  return tkd_invert(fit.field, b0_img, cfg.tkd);
}

UnwrappedEchoes unwrap_echoes(std::span<const ComplexVolume> echoes, double support_fraction) {
  if (echoes.empty()) throw InvalidArgument("no echoes");
  UnwrappedEchoes out;
  for (const auto& echo : echoes) out.magnitude.push_back(volume::magnitude(echo));
  out.support = magnitude_support(out.magnitude.front(), support_fraction);
  for (const auto& echo : echoes) {
    ScalarVolume wrapped = volume::phase(echo);
    for (std::size_t n = 0; n < wrapped.size(); ++n)
      if (!out.support[n]) wrapped[n] = 0.0;
    out.phase.push_back(registration::laplacian_unwrap(wrapped));
  }
  return out;
}

ScalarVolume susceptibility_from_complex(std::span<const ComplexVolume> echoes,
                                         std::span<const double> echo_times_s, const Vec3& b0_img,
                                         const ChainConfig& cfg) {
  const UnwrappedEchoes u = unwrap_echoes(echoes, cfg.support_fraction);
  return susceptibility_from_phase(u.phase, u.magnitude, echo_times_s, b0_img, cfg);
}

}  // namespace kreg::qsm
