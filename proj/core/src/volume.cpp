#include "kreg/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace kreg {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

namespace volume {
namespace {

static_assert(std::endian::native == std::endian::little, "KVOL I/O assumes a little-endian host");

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void f32(double v) {
    const float f = static_cast<float>(v);
    raw(&f, 4);
  }
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
  }

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  double f32(const char* what) {
    need(4, what);
    float v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string tag(std::size_t n) {
    need(n, "magic");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_header(Writer& w, const Volume<T>& v, KvolType type) {
  w.raw("KVOL", 4);
  w.u8(kKvolVersion);
  w.u8(static_cast<std::uint8_t>(type));
  for (std::size_t n : v.dims()) w.u32(static_cast<std::uint32_t>(n));
  for (double s : v.voxel_sizes()) w.f32(s);
  w.u32(static_cast<std::uint32_t>(v.echo_times_s().size()));
  for (double te : v.echo_times_s()) w.f32(te);
}

}  // namespace

ScalarVolume real_part(const ComplexVolume& v) {
  ScalarVolume out(v.dims(), v.voxel_sizes());
  for (std::size_t n = 0; n < v.size(); ++n) out[n] = v[n].real();
  out.set_echo_times_s(v.echo_times_s());
  return out;
}

ScalarVolume magnitude(const ComplexVolume& v) {
  ScalarVolume out(v.dims(), v.voxel_sizes());
  for (std::size_t n = 0; n < v.size(); ++n) out[n] = std::abs(v[n]);
  out.set_echo_times_s(v.echo_times_s());
  return out;
}

ScalarVolume phase(const ComplexVolume& v) {
  ScalarVolume out(v.dims(), v.voxel_sizes());
  for (std::size_t n = 0; n < v.size(); ++n) out[n] = std::arg(v[n]);
  out.set_echo_times_s(v.echo_times_s());
  return out;
}

ComplexVolume to_complex(const ScalarVolume& v) {
  ComplexVolume out(v.dims(), v.voxel_sizes());
  for (std::size_t n = 0; n < v.size(); ++n) out[n] = v[n];
  out.set_echo_times_s(v.echo_times_s());
  return out;
}

Mask sphere_mask(const Dims3& dims, const Vec3& center_vox, double radius_vox) {
  if (!(radius_vox >= 0.0)) throw InvalidArgument("mask radius must be non-negative");
  Mask mask(dims);
  const double r2 = radius_vox * radius_vox;
  std::size_t n = 0;
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i, ++n) {
        const double dx = static_cast<double>(i) - center_vox[0];
        const double dy = static_cast<double>(j) - center_vox[1];
        const double dz = static_cast<double>(k) - center_vox[2];
        mask.set(n, dx * dx + dy * dy + dz * dz <= r2);
      }
  return mask;
}

ScalarVolume mask_to_volume(const Mask& mask, const Vec3& voxel_sizes) {
  ScalarVolume out(mask.dims(), voxel_sizes);
  for (std::size_t n = 0; n < mask.size(); ++n) out[n] = mask[n] ? 1.0 : 0.0;
  return out;
}

Mask volume_to_mask(const ScalarVolume& v) {
  Mask mask(v.dims());
  for (std::size_t n = 0; n < v.size(); ++n) mask.set(n, v[n] > 0.5);
  return mask;
}

void write_kvol(const ScalarVolume& v, const std::filesystem::path& path) {
  Writer w;
  write_header(w, v, KvolType::real32);
  for (double x : v.values()) w.f32(x);
  w.flush(path);
}

void write_kvol(const ComplexVolume& v, const std::filesystem::path& path) {
  Writer w;
  write_header(w, v, KvolType::complex64);
  for (const auto& z : v.values()) {
    w.f32(z.real());
    w.f32(z.imag());
  }
  w.flush(path);
}

void write_kvol(const Mask& m, const Vec3& voxel_sizes, const std::filesystem::path& path) {
  write_kvol(mask_to_volume(m, voxel_sizes), path);
}

std::variant<ScalarVolume, ComplexVolume> read_kvol(const std::filesystem::path& path) {
  Reader r(path);
  if (r.tag(4) != "KVOL") throw FormatError("bad magic, expected KVOL", 0);
  const std::size_t version_at = r.offset();
  if (r.u8("version") != kKvolVersion) throw FormatError("unsupported KVOL version", version_at);
  const std::size_t dtype_at = r.offset();
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype != static_cast<std::uint8_t>(KvolType::real32) &&
      dtype != static_cast<std::uint8_t>(KvolType::complex64))
    throw FormatError("unknown KVOL dtype " + std::to_string(dtype), dtype_at);

  Dims3 dims{};
  for (auto& n : dims) n = r.u32("dimensions");
  Vec3 voxel{};
  const std::size_t voxel_at = r.offset();
  for (auto& s : voxel) {
    s = r.f32("voxel sizes");
    if (!(s > 0.0)) throw FormatError("non-positive voxel size", voxel_at);
  }
  const std::uint32_t n_te = r.u32("echo count");
  std::vector<double> tes(n_te);
  for (auto& te : tes) te = r.f32("echo times");

  const std::size_t count = voxel_count(dims);
  if (dtype == static_cast<std::uint8_t>(KvolType::real32)) {
    r.need(count * 4, "payload");
    std::vector<double> data(count);
    for (auto& x : data) x = r.f32("payload");
    if (!r.at_end()) throw FormatError("trailing bytes after payload", r.offset());
    ScalarVolume v(dims, voxel, std::move(data));
    v.set_echo_times_s(std::move(tes));
    return v;
  }
  r.need(count * 8, "payload");
  std::vector<std::complex<double>> data(count);
  for (auto& z : data) {
    const double re = r.f32("payload");
    const double im = r.f32("payload");
    z = {re, im};
  }
  if (!r.at_end()) throw FormatError("trailing bytes after payload", r.offset());
  ComplexVolume v(dims, voxel, std::move(data));
  v.set_echo_times_s(std::move(tes));
  return v;
}

ScalarVolume read_scalar_kvol(const std::filesystem::path& path) {
  auto v = read_kvol(path);
  if (auto* s = std::get_if<ScalarVolume>(&v)) return std::move(*s);
  throw FormatError("expected real32 KVOL in " + path.string(), 5);
}

ComplexVolume read_complex_kvol(const std::filesystem::path& path) {
  auto v = read_kvol(path);
  if (auto* c = std::get_if<ComplexVolume>(&v)) return std::move(*c);
  throw FormatError("expected complex64 KVOL in " + path.string(), 5);
}

void export_slice_pgm(const ScalarVolume& v, int axis, std::size_t index, double lo, double hi,
                      const std::filesystem::path& path) {
  if (axis < 0 || axis > 2) throw InvalidArgument("slice axis must be 0, 1 or 2");
  if (index >= v.dims()[axis]) throw InvalidArgument("slice index out of range");
  if (!(lo < hi)) throw InvalidArgument("window requires lo < hi");

  const int col_axis = axis == 0 ? 1 : 0;
  const int row_axis = axis == 2 ? 1 : 2;
  const std::size_t width = v.dims()[col_axis];
  const std::size_t height = v.dims()[row_axis];

  std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + width * height * 2);
  std::array<std::size_t, 3> ijk{};
  ijk[axis] = index;
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      ijk[row_axis] = row;
      ijk[col_axis] = col;
      const double t = std::clamp((v(ijk[0], ijk[1], ijk[2]) - lo) / (hi - lo), 0.0, 1.0);
      const auto pixel = static_cast<std::uint16_t>(std::lround(65535.0 * t));
      bytes.push_back(static_cast<char>(pixel >> 8));
      bytes.push_back(static_cast<char>(pixel & 0xff));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace volume
}  // namespace kreg
