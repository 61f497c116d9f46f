#include "kreg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "kreg/parallel.hpp"

namespace kreg::fft {
namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, int>;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan plan_for(std::complex<double>* data, const Dims3& dims, int sign) {
  const PlanKey key{dims[0], dims[1], dims[2], sign};
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard lock(plan_mutex());
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto* p = reinterpret_cast<fftw_complex*>(data);
  // FFTW is row-major with the last index fastest.
  fftw_plan plan = fftw_plan_dft_3d(static_cast<int>(dims[2]), static_cast<int>(dims[1]),
                                    static_cast<int>(dims[0]), p, p, sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

void transform(std::span<std::complex<double>> data, const Dims3& dims, Direction direction) {
  if (data.size() != voxel_count(dims)) throw InvalidArgument("FFT buffer does not match dims");
  if (data.empty()) return;
  const int sign = direction == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = plan_for(data.data(), dims, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

void center_to_origin(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                      const Dims3& dims, bool inverse) {
  // Storage position of centered index c = n - N/2 is (n + N - N/2) mod N.
  Dims3 shift{};
  for (int a = 0; a < 3; ++a) {
    const std::size_t s = dims[a] - dims[a] / 2;
    shift[a] = inverse ? dims[a] - s : s;
  }
  const std::size_t nx = dims[0], ny = dims[1], nz = dims[2];
  parallel_for(nz, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const std::size_t kk = (k + shift[2]) % nz;
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t jj = (j + shift[1]) % ny;
        const std::size_t src_row = nx * (j + ny * k);
        const std::size_t dst_row = nx * (jj + ny * kk);
        for (std::size_t i = 0; i < nx; ++i) out[dst_row + (i + shift[0]) % nx] = in[src_row + i];
      }
    }
  });
}

ComplexVolume centered_fft(const ComplexVolume& image) {
  ComplexVolume out(image.dims(), image.voxel_sizes());
  center_to_origin(image.data(), out.data(), image.dims());
  transform(out.data(), image.dims(), Direction::forward);
  ComplexVolume shifted(image.dims(), image.voxel_sizes());
  center_to_origin(out.data(), shifted.data(), image.dims(), true);
  shifted.set_echo_times_s(image.echo_times_s());
  return shifted;
}

ComplexVolume centered_ifft(const ComplexVolume& kspace) {
  ComplexVolume out(kspace.dims(), kspace.voxel_sizes());
  center_to_origin(kspace.data(), out.data(), kspace.dims());
  transform(out.data(), kspace.dims(), Direction::backward);
  ComplexVolume shifted(kspace.dims(), kspace.voxel_sizes());
  center_to_origin(out.data(), shifted.data(), kspace.dims(), true);
  const double scale = 1.0 / static_cast<double>(kspace.size());
  for (auto& z : shifted.values()) z *= scale;
  shifted.set_echo_times_s(kspace.echo_times_s());
  return shifted;
}

}  // namespace kreg::fft
