#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kreg/error.hpp"
#include "kreg/forward.hpp"
#include "kreg/geometry.hpp"
#include "kreg/nufft.hpp"
#include "kreg/qsm.hpp"

namespace kreg::app {

inline constexpr int kSchemaVersion = 1;

/// Schema violation; `path` is a JSON pointer to the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Method { none, ireg, kreg };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ProtocolConfig {
  std::string name;
  Vec3 euler_deg{0.0, 0.0, 0.0};  ///< yaw (z), pitch (y), roll (x)
  Vec3 voxel_mm{1.0, 1.0, 1.0};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Reconstruction arms for this protocol; empty means the default set.
  std::vector<Method> methods;

  bool is_reference_geometry(double iso_voxel_mm) const;
};

struct PipelineConfig {
  geometry::ReferenceProtocol reference{1.0, 48};
  int master_factor = 2;
  std::vector<ProtocolConfig> protocols;
  forward::SusceptibilityPhantomSpec phantom;
  nufft::GriddingConfig gridding;
  qsm::TkdConfig tkd;
  double support_fraction = 0.3;
  std::vector<double> echo_times_s{0.00794, 0.01594, 0.02394};
  double field_strength_T = 3.0;
  std::string output_dir = "kreg_out";

  /// Acquisition descriptor of a protocol: matrix chosen so that the FoV
  /// matches the reference along every axis.
  geometry::ProtocolDescriptor descriptor(const ProtocolConfig& p) const;
  geometry::ProtocolDescriptor reference_descriptor() const;
  forward::PhysicsConstants constants() const;
  qsm::ChainConfig chain() const;
  /// Methods run for protocol `index` (index 0 is the reference scan and has none).
  std::vector<Method> methods_for(std::size_t index) const;
};

/// Parses and validates; unknown keys are rejected.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace kreg::app
