#include "kreg/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kreg/error.hpp"

namespace kreg {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

namespace geometry {
namespace {

constexpr double kRotationTolerance = 1e-12;

std::array<double, 9> multiply(const std::array<double, 9>& a, const std::array<double, 9>& b) {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) out[r * 3 + c] += a[r * 3 + k] * b[k * 3 + c];
  return out;
}

}  // namespace

RotationMatrix::RotationMatrix() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

RotationMatrix::RotationMatrix(const std::array<double, 9>& row_major) : m_(row_major) {
  for (double v : m_)
    if (!std::isfinite(v)) throw InvalidArgument("rotation matrix has non-finite entries");
  const auto gram = multiply(m_, transpose().m_);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (std::abs(gram[r * 3 + c] - (r == c ? 1.0 : 0.0)) > kRotationTolerance)
        throw InvalidArgument("rotation matrix is not orthonormal");
  if (std::abs(determinant() - 1.0) > kRotationTolerance)
    throw InvalidArgument("rotation matrix is not proper (det != +1)");
}

Vec3 RotationMatrix::apply(const Vec3& v) const {
  return {m_[0] * v[0] + m_[1] * v[1] + m_[2] * v[2],
          m_[3] * v[0] + m_[4] * v[1] + m_[5] * v[2],
          m_[6] * v[0] + m_[7] * v[1] + m_[8] * v[2]};
}

RotationMatrix RotationMatrix::transpose() const {
  return RotationMatrix({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]},
                        Unchecked{});
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& rhs) const {
  return RotationMatrix(multiply(m_, rhs.m_), Unchecked{});
}

double RotationMatrix::determinant() const {
  return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
         m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

RotationMatrix axis_rotation(int axis, double angle_deg) {
  if (!std::isfinite(angle_deg)) throw InvalidArgument("rotation angle must be finite");
  if (axis < 0 || axis > 2) throw InvalidArgument("rotation axis must be 0, 1 or 2");
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  switch (axis) {
    case 0:
      return RotationMatrix({1, 0, 0, 0, c, -s, 0, s, c});
    case 1:
      return RotationMatrix({c, 0, s, 0, 1, 0, -s, 0, c});
    default:
      return RotationMatrix({c, -s, 0, s, c, 0, 0, 0, 1});
  }
}

RotationMatrix rotation_from_euler(double yaw_deg, double pitch_deg, double roll_deg) {
  if (!std::isfinite(yaw_deg) || !std::isfinite(pitch_deg) || !std::isfinite(roll_deg))
    throw InvalidArgument("Euler angles must be finite");
  return axis_rotation(2, yaw_deg) * axis_rotation(1, pitch_deg) * axis_rotation(0, roll_deg);
}

Vec3 b0_in_image_frame(const RotationMatrix& rotation) {
  return rotation.transpose().apply({0.0, 0.0, 1.0});
}

std::vector<std::string> ProtocolDescriptor::validate() const {
  for (double v : voxel_sizes)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("voxel sizes must be positive");
  for (std::size_t n : matrix_dims)
    if (n == 0) throw InvalidArgument("matrix dimensions must be positive");
  if (!(fov_mm > 0.0)) throw InvalidArgument("field of view must be positive");
  if (!(field_strength_T > 0.0)) throw InvalidArgument("field strength must be positive");
  for (std::size_t i = 0; i < echo_times_s.size(); ++i) {
    if (!(echo_times_s[i] > 0.0)) throw InvalidArgument("echo times must be positive");
    if (i > 0 && !(echo_times_s[i] > echo_times_s[i - 1]))
      throw InvalidArgument("echo times must be strictly increasing");
  }

  std::vector<std::string> warnings;
  for (int i = 0; i < 3; ++i) {
    const double extent = static_cast<double>(matrix_dims[i]) * voxel_sizes[i];
    if (std::abs(extent - fov_mm) > voxel_sizes[i]) {
      std::ostringstream msg;
      msg << "axis " << i << ": matrix " << matrix_dims[i] << " x voxel " << voxel_sizes[i]
          << " mm = " << extent << " mm disagrees with FoV " << fov_mm << " mm";
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

void ReferenceProtocol::validate() const {
  if (!(iso_voxel_mm > 0.0) || !std::isfinite(iso_voxel_mm))
    throw InvalidArgument("reference voxel size must be positive");
  if (matrix == 0) throw InvalidArgument("reference matrix must be positive");
}

KSpaceLocations cartesian_kspace_lattice(const Dims3& dims) {
  for (std::size_t n : dims)
    if (n == 0) throw InvalidArgument("lattice dimensions must be positive");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  KSpaceLocations out;
  out.reserve(voxel_count(dims));
  for (std::size_t k = 0; k < dims[2]; ++k) {
    const double lz = two_pi * static_cast<double>(centered_index(k, dims[2])) / dims[2];
    for (std::size_t j = 0; j < dims[1]; ++j) {
      const double ly = two_pi * static_cast<double>(centered_index(j, dims[1])) / dims[1];
      for (std::size_t i = 0; i < dims[0]; ++i) {
        const double lx = two_pi * static_cast<double>(centered_index(i, dims[0])) / dims[0];
        out.push_back({lx, ly, lz});
      }
    }
  }
  return out;
}

KSpaceLocations cartesian_kspace_lattice(const ProtocolDescriptor& protocol,
                                         const ReferenceProtocol& ref) {
  ref.validate();
  return cartesian_kspace_lattice(protocol.matrix_dims);
}

KSpaceLocations rotate_locations(const KSpaceLocations& locations, const RotationMatrix& rotation) {
  KSpaceLocations out;
  out.reserve(locations.size());
  for (const auto& l : locations) out.push_back(rotation.apply(l));
  return out;
}

Vec3 scaling_factors(const Vec3& voxel_sizes, double reference_voxel_mm) {
  if (!(reference_voxel_mm > 0.0)) throw InvalidArgument("reference voxel size must be positive");
  Vec3 s{};
  for (int i = 0; i < 3; ++i) {
    if (!(voxel_sizes[i] > 0.0)) throw InvalidArgument("voxel sizes must be positive");
    s[i] = reference_voxel_mm / voxel_sizes[i];
  }
  return s;
}

KSpaceLocations scale_locations(const KSpaceLocations& locations, const Vec3& factors) {
  KSpaceLocations out;
  out.reserve(locations.size());
  for (const auto& l : locations) out.push_back({factors[0] * l[0], factors[1] * l[1], factors[2] * l[2]});
  return out;
}

KSpaceLocations scale_locations(const KSpaceLocations& locations, const Vec3& voxel_sizes,
                                double reference_voxel_mm) {
  return scale_locations(locations, scaling_factors(voxel_sizes, reference_voxel_mm));
}

KSpaceLocations to_reference_frame(const KSpaceLocations& locations,
                                   const ProtocolDescriptor& protocol,
                                   const ReferenceProtocol& ref) {
  return rotate_locations(scale_locations(locations, protocol.voxel_sizes, ref.iso_voxel_mm),
                          protocol.rotation);
}

KSpaceLocations from_reference_frame(const KSpaceLocations& locations,
                                     const ProtocolDescriptor& protocol,
                                     const ReferenceProtocol& ref) {
  const Vec3 s = scaling_factors(protocol.voxel_sizes, ref.iso_voxel_mm);
  return scale_locations(rotate_locations(locations, protocol.rotation.transpose()),
                         Vec3{1.0 / s[0], 1.0 / s[1], 1.0 / s[2]});
}

}  // namespace geometry
}  // namespace kreg
