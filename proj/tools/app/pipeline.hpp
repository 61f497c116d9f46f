#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "kreg/nufft.hpp"
#include "kreg/volume.hpp"
#include "report.hpp"

namespace kreg::app {

inline constexpr const char* kVersion = "0.1.0";

/// A failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

struct PipelineOptions {
  /// Where KVOL/PGM artifacts and report.json go; nothing is written if unset.
  std::optional<std::filesystem::path> output_dir;
};

struct PipelineResult {
  ComparisonReport report;
  ScalarVolume reference_chi;               ///< QSM of the reference scan
  std::map<std::string, ScalarVolume> chi;  ///< keyed "<protocol>/<arm>"
  Mask mask;                                ///< evaluation mask on the reference grid
};

/// Image-domain echoes of a Cartesian acquisition.
std::vector<ComplexVolume> reconstruct_cartesian(const std::vector<nufft::KSpaceSamples>& samples,
                                                 const geometry::ProtocolDescriptor& protocol);

/// Full comparison run: simulate every protocol and score each arm against
/// the reference scan.
PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineOptions& options = {});

}  // namespace kreg::app
