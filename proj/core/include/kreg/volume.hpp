#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "kreg/error.hpp"
#include "kreg/geometry.hpp"

namespace kreg {

/// Dense 3D grid, x fastest. Values are held in double precision; the KVOL
/// container stores 32-bit floats.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;

  explicit Volume(const Dims3& dims, const Vec3& voxel_sizes = {1.0, 1.0, 1.0})
      : dims_(dims), voxel_sizes_(voxel_sizes), data_(voxel_count(dims)) {
    check();
  }

  Volume(const Dims3& dims, const Vec3& voxel_sizes, std::vector<T> data)
      : dims_(dims), voxel_sizes_(voxel_sizes), data_(std::move(data)) {
    check();
    if (data_.size() != voxel_count(dims_))
      throw InvalidArgument("volume data length does not match its dimensions");
  }

  const Dims3& dims() const { return dims_; }
  const Vec3& voxel_sizes() const { return voxel_sizes_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims_[0] * (j + dims_[1] * k);
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[index(i, j, k)]; }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[index(i, j, k)];
  }
  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  /// Echo times attached to this volume (seconds); may be empty.
  const std::vector<double>& echo_times_s() const { return echo_times_s_; }
  void set_echo_times_s(std::vector<double> tes) { echo_times_s_ = std::move(tes); }

  bool same_grid(const Dims3& dims) const { return dims_ == dims; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  void check() const {
    for (double v : voxel_sizes_)
      if (!(v > 0.0)) throw InvalidArgument("voxel sizes must be positive");
  }

  Dims3 dims_{0, 0, 0};
  Vec3 voxel_sizes_{1.0, 1.0, 1.0};
  std::vector<T> data_;
  std::vector<double> echo_times_s_;
};

using ComplexVolume = Volume<std::complex<double>>;
using ScalarVolume = Volume<double>;

/// Boolean region over a grid.
class Mask {
 public:
  Mask() = default;
  explicit Mask(const Dims3& dims, bool fill = false)
      : dims_(dims), data_(voxel_count(dims), fill ? 1 : 0) {}

  const Dims3& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool operator[](std::size_t n) const { return data_[n] != 0; }
  void set(std::size_t n, bool value) { data_[n] = value ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Dims3 dims_{0, 0, 0};
  std::vector<std::uint8_t> data_;
};

namespace volume {

/// Real and imaginary parts, magnitude and argument of a complex volume.
ScalarVolume real_part(const ComplexVolume& v);
ScalarVolume magnitude(const ComplexVolume& v);
ScalarVolume phase(const ComplexVolume& v);
ComplexVolume to_complex(const ScalarVolume& v);

/// Voxel included iff its distance to `center` (voxel units) is <= radius.
Mask sphere_mask(const Dims3& dims, const Vec3& center_vox, double radius_vox);

ScalarVolume mask_to_volume(const Mask& mask, const Vec3& voxel_sizes = {1.0, 1.0, 1.0});
Mask volume_to_mask(const ScalarVolume& v);

// KVOL container:
//   "KVOL" | u8 version (1) | u8 dtype (1 real32, 2 complex64)
//   u32 Nx Ny Nz | f32 vx vy vz | u32 echo count n | n x f32 TE (s)
//   payload, x fastest, little endian.
inline constexpr std::uint8_t kKvolVersion = 1;
enum class KvolType : std::uint8_t { real32 = 1, complex64 = 2 };

void write_kvol(const ScalarVolume& v, const std::filesystem::path& path);
void write_kvol(const ComplexVolume& v, const std::filesystem::path& path);
void write_kvol(const Mask& m, const Vec3& voxel_sizes, const std::filesystem::path& path);

std::variant<ScalarVolume, ComplexVolume> read_kvol(const std::filesystem::path& path);
ScalarVolume read_scalar_kvol(const std::filesystem::path& path);
ComplexVolume read_complex_kvol(const std::filesystem::path& path);

/// 16-bit binary PGM of one slice. `axis` is the normal of the slice plane;
/// the image rows run along the higher of the two remaining axes.
/// Pixel = round(65535 * clamp((v - lo) / (hi - lo), 0, 1)).
void export_slice_pgm(const ScalarVolume& v, int axis, std::size_t index, double lo, double hi,
                      const std::filesystem::path& path);

}  // namespace volume
}  // namespace kreg
