#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace kreg {

using Vec3 = std::array<double, 3>;
using Dims3 = std::array<std::size_t, 3>;

inline std::size_t voxel_count(const Dims3& dims) { return dims[0] * dims[1] * dims[2]; }

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

namespace geometry {

/// Proper 3x3 rotation stored row-major.
///
/// Convention used throughout the library: R maps acquisition-frame
/// coordinates to scanner-frame coordinates, p_scanner = R * p_acq. The same
/// matrix maps k-space vectors between the two frames.
class RotationMatrix {
 public:
  /// Identity.
  RotationMatrix();
  /// Throws InvalidArgument unless R*R^T = I and det(R) = +1 within 1e-12.
  explicit RotationMatrix(const std::array<double, 9>& row_major);

  static RotationMatrix identity() { return RotationMatrix(); }

  double operator()(std::size_t row, std::size_t col) const { return m_[row * 3 + col]; }
  const std::array<double, 9>& entries() const { return m_; }

  Vec3 apply(const Vec3& v) const;
  RotationMatrix transpose() const;
  RotationMatrix operator*(const RotationMatrix& rhs) const;
  double determinant() const;

 private:
  struct Unchecked {};
  RotationMatrix(const std::array<double, 9>& m, Unchecked) : m_(m) {}

  std::array<double, 9> m_;
};

/// Rotation about a coordinate axis (0 = x, 1 = y, 2 = z), right-handed, degrees.
RotationMatrix axis_rotation(int axis, double angle_deg);

/// R = Rz(yaw) * Ry(pitch) * Rx(roll). Angles in degrees; non-finite input throws.
RotationMatrix rotation_from_euler(double yaw_deg, double pitch_deg, double roll_deg);

/// Direction of B0 expressed in image (acquisition) axes: R^T * e_z.
Vec3 b0_in_image_frame(const RotationMatrix& rotation);

struct ProtocolDescriptor {
  RotationMatrix rotation;
  Vec3 voxel_sizes{1.0, 1.0, 1.0};  // mm
  Dims3 matrix_dims{1, 1, 1};
  double fov_mm = 1.0;
  std::vector<double> echo_times_s;
  double field_strength_T = 3.0;

  /// Throws InvalidArgument on hard violations. Returns warnings for soft
  /// ones (matrix * voxel size disagreeing with the FoV by more than a voxel).
  std::vector<std::string> validate() const;
};

/// Non-oblique isotropic target grid.
struct ReferenceProtocol {
  double iso_voxel_mm = 1.0;
  std::size_t matrix = 1;

  Dims3 dims() const { return {matrix, matrix, matrix}; }
  void validate() const;
};

/// Sample positions in normalized angular frequency (radians per voxel of
/// whatever grid the locations refer to).
using KSpaceLocations = std::vector<Vec3>;

/// Centered Cartesian lattice of `dims`, x fastest. Along axis i the values
/// are 2*pi*(k - N_i/2)/N_i, so even sizes include -pi and exclude +pi.
KSpaceLocations cartesian_kspace_lattice(const Dims3& dims);
KSpaceLocations cartesian_kspace_lattice(const ProtocolDescriptor& protocol,
                                         const ReferenceProtocol& ref);

/// Centered frequency index k - N/2 for k in [0, N).
inline long centered_index(std::size_t k, std::size_t n) {
  return static_cast<long>(k) - static_cast<long>(n / 2);
}

KSpaceLocations rotate_locations(const KSpaceLocations& locations, const RotationMatrix& rotation);

/// s_i = v_r / v_i.
Vec3 scaling_factors(const Vec3& voxel_sizes, double reference_voxel_mm);

/// Componentwise l -> diag(s) l with s = v_r / v.
KSpaceLocations scale_locations(const KSpaceLocations& locations, const Vec3& voxel_sizes,
                                double reference_voxel_mm);
KSpaceLocations scale_locations(const KSpaceLocations& locations, const Vec3& factors);

/// Maps acquisition-lattice locations into reference-voxel units in the
/// scanner frame: l_ref = R * diag(s) * l. Anisotropy is defined along the
/// acquisition axes, so the scaling is applied before the rotation.
KSpaceLocations to_reference_frame(const KSpaceLocations& locations,
                                   const ProtocolDescriptor& protocol,
                                   const ReferenceProtocol& ref);

/// Inverse of to_reference_frame.
KSpaceLocations from_reference_frame(const KSpaceLocations& locations,
                                     const ProtocolDescriptor& protocol,
                                     const ReferenceProtocol& ref);

}  // namespace geometry
}  // namespace kreg
