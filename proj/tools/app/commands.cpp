#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "arms.hpp"
#include "config.hpp"
#include "kreg/parallel.hpp"
#include "pipeline.hpp"

namespace kreg::app {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string in_dir;
  std::optional<std::uint64_t> seed;
  std::string method = "kreg";
  std::string protocol;
  int threads = 0;
};

struct Context {
  PipelineConfig cfg;
  fs::path out;
  fs::path in;
};

Context load(const Options& o) {
  Context c;
  c.cfg = load_config(o.config_path);
  if (o.seed) {
    // Protocol i gets seed + i, keeping seeds distinct.
    for (std::size_t i = 0; i < c.cfg.protocols.size(); ++i) c.cfg.protocols[i].seed = *o.seed + i;
  }
  c.out = o.out_dir.empty() ? fs::path(c.cfg.output_dir) : fs::path(o.out_dir);
  c.in = o.in_dir.empty() ? c.out : fs::path(o.in_dir);
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory " + c.out.string() + ": " + ec.message());
  return c;
}

std::size_t protocol_index(const PipelineConfig& cfg, const std::string& name) {
  if (name.empty()) return cfg.protocols.size() - 1;
  for (std::size_t i = 0; i < cfg.protocols.size(); ++i)
    if (cfg.protocols[i].name == name) return i;
  throw ConfigError("/protocols", "no protocol named '" + name + "'");
}

fs::path kspace_file(const fs::path& dir, std::size_t protocol, std::size_t echo) {
  return dir / ("kspace_p" + std::to_string(protocol + 1) + "_e" + std::to_string(echo + 1) + ".kvol");
}

/// Reads one protocol's per-echo k-space volumes back into lattice samples.
std::vector<nufft::KSpaceSamples> read_kspace(const Context& c, std::size_t index) {
  const geometry::ProtocolDescriptor d = c.cfg.descriptor(c.cfg.protocols[index]);
  const geometry::KSpaceLocations lattice = geometry::cartesian_kspace_lattice(d.matrix_dims);
  std::vector<nufft::KSpaceSamples> out;
  for (std::size_t e = 0; e < c.cfg.echo_times_s.size(); ++e) {
    const fs::path p = kspace_file(c.in, index, e);
    if (!fs::exists(p)) throw ConfigError(p.string(), "missing echo file (run `kreg simulate` first)");
    const ComplexVolume k = volume::read_complex_kvol(p);
    if (k.dims() != d.matrix_dims)
      throw ConfigError(p.string(), "k-space dims do not match the protocol's matrix");
    out.push_back({lattice, k.values()});
  }
  return out;
}

std::string arm_name(const PipelineConfig& cfg, std::size_t index, Method m) {
  if (m == Method::none)
    return cfg.protocols[index].is_reference_geometry(cfg.reference.iso_voxel_mm) ? "retest" : "noreg";
  return to_string(m);
}

void warn_all(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int cmd_phantom(const Options& o, std::ostream& out, std::ostream& err) {
  const Context c = load(o);
  const Vec3 v{c.cfg.reference.iso_voxel_mm, c.cfg.reference.iso_voxel_mm, c.cfg.reference.iso_voxel_mm};
  const forward::Phantom p = forward::build_phantom(c.cfg.phantom, c.cfg.reference.dims(), v);
  warn_all(p.warnings, err);
  volume::write_kvol(p.chi, c.out / "phantom_chi.kvol");
  volume::write_kvol(p.magnitude, c.out / "phantom_magnitude.kvol");
  volume::write_kvol(p.mask, v, c.out / "phantom_mask.kvol");
  out << "wrote phantom_chi.kvol, phantom_magnitude.kvol, phantom_mask.kvol to " << c.out.string()
      << " (mask voxels: " << p.mask.count() << ")\n";
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const Context c = load(o);
  const PipelineConfig& cfg = c.cfg;
  const auto f = static_cast<std::size_t>(cfg.master_factor);
  const double vm = cfg.reference.iso_voxel_mm / static_cast<double>(f);
  const Dims3 rd = cfg.reference.dims();
  const forward::Phantom master =
      forward::build_phantom(cfg.phantom.scaled(static_cast<double>(f)), {rd[0] * f, rd[1] * f, rd[2] * f}, {vm, vm, vm});
  warn_all(master.warnings, err);
  const ScalarVolume field = forward::field_from_chi(master.chi, {0.0, 0.0, 1.0});
  const auto echoes = forward::synth_echoes(field, master.magnitude, cfg.echo_times_s, cfg.constants());
  for (std::size_t i = 0; i < cfg.protocols.size(); ++i) {
    const ProtocolConfig& p = cfg.protocols[i];
    const geometry::ProtocolDescriptor d = cfg.descriptor(p);
    warn_all(d.validate(), err);
    const auto samples =
        forward::simulate_acquisition(echoes, d, cfg.reference, p.noise_sigma, p.seed, cfg.gridding);
    for (std::size_t e = 0; e < samples.size(); ++e) {
      ComplexVolume k = forward::samples_to_volume(samples[e], d);
      k.set_echo_times_s({cfg.echo_times_s[e]});
      volume::write_kvol(k, kspace_file(c.out, i, e));
    }
    out << "protocol " << p.name << ": " << samples.size() << " echoes, matrix " << d.matrix_dims[0] << "x"
        << d.matrix_dims[1] << "x" << d.matrix_dims[2] << '\n';
  }
  return kOk;
}

int cmd_register(const Options& o, std::ostream& out, std::ostream&) {
  const Context c = load(o);
  const Method m = method_from_string(o.method);
  const std::size_t idx = protocol_index(c.cfg, o.protocol);
  const geometry::ProtocolDescriptor d = c.cfg.descriptor(c.cfg.protocols[idx]);
  const RegisteredEchoes r = register_echoes(m, read_kspace(c, idx), d, c.cfg);
  const std::string stem = "registered_" + c.cfg.protocols[idx].name + "_" + to_string(m);
  for (std::size_t e = 0; e < r.complex.size(); ++e)
    volume::write_kvol(r.complex[e], c.out / (stem + "_e" + std::to_string(e + 1) + ".kvol"));
  for (std::size_t e = 0; e < r.phase.size(); ++e) {
    volume::write_kvol(r.phase[e], c.out / (stem + "_phase_e" + std::to_string(e + 1) + ".kvol"));
    volume::write_kvol(r.magnitude[e], c.out / (stem + "_magnitude_e" + std::to_string(e + 1) + ".kvol"));
  }
  out << "wrote " << stem << "_*.kvol to " << c.out.string() << '\n';
  return kOk;
}

int cmd_qsm(const Options& o, std::ostream& out, std::ostream&) {
  const Context c = load(o);
  const Method m = method_from_string(o.method);
  const std::size_t idx = protocol_index(c.cfg, o.protocol);
  const geometry::ProtocolDescriptor d = c.cfg.descriptor(c.cfg.protocols[idx]);
  const ScalarVolume chi = reconstruct_arm(m, read_kspace(c, idx), d, c.cfg);
  const std::string name = idx == 0 ? std::string("chi_reference.kvol")
                                    : "chi_" + c.cfg.protocols[idx].name + "_" + arm_name(c.cfg, idx, m) + ".kvol";
  volume::write_kvol(chi, c.out / name);
  out << "wrote " << (c.out / name).string() << '\n';
  return kOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream&) {
  const Context c = load(o);
  const Vec3 v{c.cfg.reference.iso_voxel_mm, c.cfg.reference.iso_voxel_mm, c.cfg.reference.iso_voxel_mm};
  const Mask mask = forward::build_phantom(c.cfg.phantom, c.cfg.reference.dims(), v).mask;
  const fs::path ref_path = c.in / "chi_reference.kvol";
  if (!fs::exists(ref_path)) throw ConfigError(ref_path.string(), "missing reference QSM (run `kreg qsm --protocol <first>`)");
  const ScalarVolume ref = volume::read_scalar_kvol(ref_path);
  nlohmann::json result = nlohmann::json::object();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(c.in)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("chi_", 0) == 0 && entry.path().extension() == ".kvol" && name != "chi_reference.kvol")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files)
    result[p.stem().string().substr(4)] = qsm::nrmse(volume::read_scalar_kvol(p), ref, mask);
  out << result.dump(2) << '\n';
  return kOk;
}

int cmd_pipeline(const Options& o, std::ostream& out, std::ostream&) {
  const Context c = load(o);
  PipelineOptions po;
  po.output_dir = c.out;
  const PipelineResult r = run_pipeline(c.cfg, po);
  out << to_json(r.report).dump(2) << '\n';
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-space registration toolkit for QSM"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->required();
    sub->add_option("--out", o.out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "base noise seed; protocol i uses seed + i");
    sub->add_option("--threads", o.threads, "worker threads (default: KREG_THREADS or 1)")
        ->check(CLI::Range(1, 1024));
  };
  auto add_selection = [&](CLI::App* sub) {
    sub->add_option("--method", o.method, "registration method")
        ->check(CLI::IsMember({"kreg", "ireg", "none"}));
    sub->add_option("--protocol", o.protocol, "protocol name (default: last)");
    sub->add_option("--in", o.in_dir, "directory holding kspace_p*_e*.kvol (default: --out)");
  };

  CLI::App* phantom = app.add_subcommand("phantom", "voxelize the phantom on the reference grid");
  CLI::App* simulate = app.add_subcommand("simulate", "simulate every protocol's k-space");
  CLI::App* reg = app.add_subcommand("register", "register one protocol's echoes");
  CLI::App* qsm_cmd = app.add_subcommand("qsm", "reconstruct one protocol's QSM on the reference grid");
  CLI::App* compare = app.add_subcommand("compare", "score chi_*.kvol against chi_reference.kvol");
  CLI::App* pipeline = app.add_subcommand("pipeline", "run the full comparison and write the report");
  for (CLI::App* s : {phantom, simulate, reg, qsm_cmd, compare, pipeline}) add_common(s);
  add_selection(reg);
  add_selection(qsm_cmd);
  compare->add_option("--in", o.in_dir, "directory holding chi_*.kvol (default: --out)");

  std::vector<const char*> argv{"kreg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (o.threads > 0) {
    set_thread_count(static_cast<std::size_t>(o.threads));
  }

  try {
    if (phantom->parsed()) return cmd_phantom(o, out, err);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (reg->parsed()) return cmd_register(o, out, err);
    if (qsm_cmd->parsed()) return cmd_qsm(o, out, err);
    if (compare->parsed()) return cmd_compare(o, out, err);
    return cmd_pipeline(o, out, err);
  } catch (const StageError& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const ConfigError& e) {
    err << "error: config " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const EmptyCoverageError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const OutOfBandError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace kreg::app
