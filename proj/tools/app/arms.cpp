#include "arms.hpp"

#include "kreg/fft.hpp"
#include "kreg/qsm.hpp"
#include "kreg/registration.hpp"
#include "pipeline.hpp"

namespace kreg::app {

namespace {

const Vec3 kScannerZ{0.0, 0.0, 1.0};

}  // namespace

RegisteredEchoes register_echoes(Method method, const std::vector<nufft::KSpaceSamples>& acquired,
                                 const geometry::ProtocolDescriptor& protocol, const PipelineConfig& cfg) {
  RegisteredEchoes out;
  switch (method) {
    case Method::none:
      out.complex = reconstruct_cartesian(acquired, protocol);
      break;
    case Method::kreg:
      out.complex = registration::kspace_register(acquired, protocol, cfg.reference, cfg.gridding);
      break;
    case Method::ireg: {
      const auto images = reconstruct_cartesian(acquired, protocol);
      const qsm::UnwrappedEchoes u = qsm::unwrap_echoes(images, cfg.support_fraction);
      registration::ImageRegistration r =
          registration::image_register_baseline(u.phase, u.magnitude, protocol, cfg.reference);
      out.phase = std::move(r.phase);
      out.magnitude = std::move(r.magnitude);
      break;
    }
  }
  return out;
}

ScalarVolume reconstruct_arm(Method method, const std::vector<nufft::KSpaceSamples>& acquired,
                             const geometry::ProtocolDescriptor& protocol, const PipelineConfig& cfg) {
  const qsm::ChainConfig chain = cfg.chain();
  const RegisteredEchoes reg = register_echoes(method, acquired, protocol, cfg);
  switch (method) {
    case Method::none: {
      const Vec3 b0 = geometry::b0_in_image_frame(protocol.rotation);
      const ScalarVolume chi = qsm::susceptibility_from_complex(reg.complex, cfg.echo_times_s, b0, chain);
      const double vr = cfg.reference.iso_voxel_mm;
      if (chi.dims() == cfg.reference.dims() && protocol.voxel_sizes == Vec3{vr, vr, vr} &&
          protocol.rotation.entries() == geometry::RotationMatrix::identity().entries())
        return chi;
      const ComplexVolume k = fft::centered_fft(volume::to_complex(chi));
      const auto moved = registration::kspace_register(std::span<const ComplexVolume>(&k, 1), protocol,
                                                       cfg.reference, cfg.gridding);
      return volume::real_part(moved.front());
    }
    case Method::ireg:
      return qsm::susceptibility_from_phase(reg.phase, reg.magnitude, cfg.echo_times_s, kScannerZ, chain);
    case Method::kreg:
      return qsm::susceptibility_from_complex(reg.complex, cfg.echo_times_s, kScannerZ, chain);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace kreg::app
