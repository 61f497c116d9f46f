#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>

#include "arms.hpp"
#include "kreg/fft.hpp"
#include "kreg/forward.hpp"
#include "kreg/qsm.hpp"

namespace kreg::app {
namespace {

namespace fs = std::filesystem;

/// Runs `body` as a named stage: records its wall-clock time and converts
/// library errors into StageError with the CLI exit code.
template <typename F>
auto stage(ComparisonReport& report, const std::string& name, F&& body) -> decltype(body()) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    report.timings_ms.emplace_back(name, dt.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto out = body();
      finish();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const IoError& e) {
    throw StageError(name, 3, e.what());
  } catch (const NumericalError& e) {
    throw StageError(name, 4, e.what());
  } catch (const EmptyCoverageError& e) {
    throw StageError(name, 4, e.what());
  } catch (const OutOfBandError& e) {
    throw StageError(name, 4, e.what());
  } catch (const Error& e) {
    throw StageError(name, 2, e.what());
  }
}

std::string arm_label(Method m, bool reference_geometry) {
  switch (m) {
    case Method::none: return reference_geometry ? "retest" : "noreg";
    case Method::ireg: return "ireg";
    case Method::kreg: return "kreg";
  }
  return "noreg";
}

/// Display window covering the reference map inside the mask.
std::pair<double, double> window(const ScalarVolume& v, const Mask& mask) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (!mask[n]) continue;
    lo = first ? v[n] : std::min(lo, v[n]);
    hi = first ? v[n] : std::max(hi, v[n]);
    first = false;
  }
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi};
}

ScalarVolume abs_difference(const ScalarVolume& a, const ScalarVolume& b, const Mask& mask) {
  ScalarVolume d(a.dims(), a.voxel_sizes());
  for (std::size_t n = 0; n < a.size(); ++n) d[n] = mask[n] ? std::abs(a[n] - b[n]) : 0.0;
  return d;
}

}  // namespace

std::vector<ComplexVolume> reconstruct_cartesian(const std::vector<nufft::KSpaceSamples>& samples,
                                                 const geometry::ProtocolDescriptor& protocol) {
  std::vector<ComplexVolume> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(fft::centered_ifft(forward::samples_to_volume(s, protocol)));
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineOptions& options) {
  PipelineResult result;
  ComparisonReport& report = result.report;
  report.version = kVersion;
  report.config = to_json(cfg);

  const Dims3 ref_dims = cfg.reference.dims();
  const Vec3 ref_voxel{cfg.reference.iso_voxel_mm, cfg.reference.iso_voxel_mm, cfg.reference.iso_voxel_mm};

  if (options.output_dir) {
    std::error_code ec;
    fs::create_directories(*options.output_dir, ec);
    if (ec) throw StageError("setup", 3, "cannot create " + options.output_dir->string() + ": " + ec.message());
  }
  auto out_path = [&](const std::string& name) { return *options.output_dir / name; };

  const auto f = static_cast<std::size_t>(cfg.master_factor);
  const forward::Phantom phantom = stage(report, "phantom", [&] {
    result.mask = forward::build_phantom(cfg.phantom, ref_dims, ref_voxel).mask;
    return forward::build_phantom(cfg.phantom.scaled(static_cast<double>(f)),
                                  {ref_dims[0] * f, ref_dims[1] * f, ref_dims[2] * f},
                                  {ref_voxel[0] / f, ref_voxel[1] / f, ref_voxel[2] / f});
  });

  const std::vector<ComplexVolume> master_echoes = stage(report, "forward", [&] {
    const ScalarVolume field = forward::field_from_chi(phantom.chi, {0.0, 0.0, 1.0});
    return forward::synth_echoes(field, phantom.magnitude, cfg.echo_times_s, cfg.constants());
  });

  std::vector<std::vector<nufft::KSpaceSamples>> acquired(cfg.protocols.size());
  std::vector<geometry::ProtocolDescriptor> descriptors;
  for (const auto& p : cfg.protocols) descriptors.push_back(cfg.descriptor(p));

  for (std::size_t i = 0; i < cfg.protocols.size(); ++i) {
    const ProtocolConfig& p = cfg.protocols[i];
    acquired[i] = stage(report, "simulate:" + p.name, [&] {
      return forward::simulate_acquisition(master_echoes, descriptors[i], cfg.reference, p.noise_sigma, p.seed,
                                           cfg.gridding);
    });
    if (options.output_dir) {
      stage(report, "write:" + p.name, [&] {
        for (std::size_t e = 0; e < acquired[i].size(); ++e) {
          ComplexVolume k = forward::samples_to_volume(acquired[i][e], descriptors[i]);
          k.set_echo_times_s({cfg.echo_times_s[e]});
          volume::write_kvol(k, out_path("kspace_p" + std::to_string(i + 1) + "_e" + std::to_string(e + 1) + ".kvol"));
        }
      });
    }
  }

  result.reference_chi = stage(report, "reconstruct:" + cfg.protocols[0].name, [&] {
    return reconstruct_arm(Method::none, acquired[0], descriptors[0], cfg);
  });

  for (std::size_t i = 1; i < cfg.protocols.size(); ++i) {
    const ProtocolConfig& p = cfg.protocols[i];
    const bool ref_geometry = p.is_reference_geometry(cfg.reference.iso_voxel_mm);
    for (Method m : cfg.methods_for(i)) {
      const std::string label = arm_label(m, ref_geometry);
      ScalarVolume chi = stage(report, "reconstruct:" + p.name + "/" + label,
                               [&] { return reconstruct_arm(m, acquired[i], descriptors[i], cfg); });
      const double err = stage(report, "compare:" + p.name + "/" + label,
                               [&] { return qsm::nrmse(chi, result.reference_chi, result.mask); });
      report.arms.push_back({p.name, to_string(m), label, err});
      result.chi.emplace(p.name + "/" + label, std::move(chi));
    }
  }

  if (options.output_dir) {
    stage(report, "artifacts", [&] {
      volume::write_kvol(result.mask, ref_voxel, out_path("mask.kvol"));
      volume::write_kvol(result.reference_chi, out_path("chi_reference.kvol"));
      const auto [lo, hi] = window(result.reference_chi, result.mask);
      const std::size_t mid = ref_dims[2] / 2;
      volume::export_slice_pgm(result.reference_chi, 2, mid, lo, hi, out_path("qsm_reference.pgm"));
      for (const auto& [key, chi] : result.chi) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '/', '_');
        volume::write_kvol(chi, out_path("chi_" + name + ".kvol"));
        volume::export_slice_pgm(chi, 2, mid, lo, hi, out_path("qsm_" + name + ".pgm"));
        volume::export_slice_pgm(abs_difference(chi, result.reference_chi, result.mask), 2, mid, 0.0,
                                 0.25 * (hi - lo), out_path("diff_" + name + ".pgm"));
      }
    });
    std::ofstream out(out_path("report.json"));
    out << to_json(report).dump(2) << '\n';
    if (!out) throw StageError("report", 3, "cannot write " + out_path("report.json").string());
  }
  return result;
}

}  // namespace kreg::app
