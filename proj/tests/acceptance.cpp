// Acceptance driver: one PASS/FAIL line per criterion, with the measured
// value next to the pinned bound.
//
//   acceptance [--config FILE] [--expect-fail N]...
//
// Exit status is 0 when the set of failing criteria equals the set passed
// with --expect-fail, so an expected failure stays visible in the output
// while an unexpected pass or a new failure breaks the build.

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "fixtures.hpp"
#include "kreg/nufft.hpp"
#include "kreg/parallel.hpp"
#include "kreg/qsm.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

namespace kreg {
namespace {

using namespace fixture;
using nufft::GriddingConfig;
using nufft::KSpaceSamples;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

Outcome nufft_oracle() {
  const Stopwatch clock;
  std::mt19937_64 rng(2024);
  const Dims3 dims{8, 8, 8};
  const ComplexVolume image = oracle::random_complex_volume(dims, rng);
  const auto locs = oracle::random_locations(500, rng);
  const double e2 = oracle::rel_l2(nufft::nufft_type2(image, locs, GriddingConfig{}).values,
                                   oracle::direct_dft(image, locs));

  std::normal_distribution<double> g;
  KSpaceSamples samples{locs, std::vector<std::complex<double>>(locs.size())};
  for (auto& z : samples.values) z = {g(rng), g(rng)};
  const ComplexVolume adj = nufft::nufft_adjoint_type1(samples, dims, GriddingConfig{}, 1.0);
  const std::vector<double> ones(locs.size(), 1.0);
  const double e1 = oracle::rel_l2(adj.values(), oracle::direct_adjoint(locs, samples.values, ones, dims).values());
  const double t = clock.seconds();
  return {e2 <= 1e-5 && e1 <= 1e-5 && t < 10.0,
          fmt("type-2 %.2e, type-1 %.2e (bound 1e-5), %.2f s (bound 10 s)", e2, e1, t)};
}

Outcome adjointness() {
  std::mt19937_64 rng(99);
  const Dims3 dims{16, 16, 16};
  const double n = static_cast<double>(voxel_count(dims));
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexVolume u = oracle::random_complex_volume(dims, rng);
    const auto locs = oracle::random_locations(300, rng);
    KSpaceSamples v{locs, std::vector<std::complex<double>>(locs.size())};
    for (auto& z : v.values) z = {g(rng), g(rng)};
    const auto au = nufft::nufft_type2(u, locs, GriddingConfig{}).values;
    // Type 1 carries 1/N; N * type1 is the adjoint of type 2.
    const ComplexVolume ahv = nufft::nufft_adjoint_type1(v, dims, GriddingConfig{}, n);
    const double gap = std::abs(oracle::inner(au, v.values) - oracle::inner(u.values(), ahv.values()));
    worst = std::max(worst, gap / (oracle::l2(u.values()) * oracle::l2(v.values)));
  }
  return {worst <= 1e-6, fmt("worst normalized gap %.2e over 20 trials (bound 1e-6)", worst)};
}

Outcome rotation_theorem() {
  const Stopwatch clock;
  const geometry::ReferenceProtocol ref{1.0, 48};
  const auto protocol = protocol_for(geometry::axis_rotation(0, 20.0), {1, 1, 1}, {48, 48, 48}, 48);
  const ScalarVolume acquired = acquire_blobs(protocol);
  const ScalarVolume sinc_oracle = oracle::sinc_to_reference(acquired, protocol, ref);
  const Mask interior = volume::sphere_mask(ref.dims(), {24, 24, 24}, 0.35 * 48);
  const ComplexVolume k = fft::centered_fft(volume::to_complex(acquired));
  const auto out = registration::kspace_register(std::span<const ComplexVolume>(&k, 1), protocol, ref, {});
  const double e = masked_rel_error(volume::real_part(out.front()), sinc_oracle, interior);
  const double t = clock.seconds();
  return {e <= 3e-2 && t < 60.0, fmt("interior rel error %.2e (bound 3e-2), %.1f s (bound 60 s)", e, t)};
}

Outcome noop_registration() {
  std::mt19937_64 rng(9);
  const Dims3 d{48, 48, 48};
  const ComplexVolume k = oracle::random_complex_volume(d, rng);
  const auto p = protocol_for(geometry::RotationMatrix(), {1, 1, 1}, d, 48);
  const auto out = registration::kspace_register(std::span<const ComplexVolume>(&k, 1), p, {1.0, 48}, {});
  const double e = oracle::rel_l2(out.front().values(), fft::centered_ifft(k).values());
  return {e <= 1e-4, fmt("rel error vs inverse FFT %.2e (bound 1e-4)", e)};
}

Outcome unwrap_fidelity() {
  double worst = 0.0;
  for (const ScalarVolume& truth : {tukey_ramp(64), gaussian_phase_blob(64)})
    worst = std::max(worst, interior_max_error_mod_2pi(registration::laplacian_unwrap(wrapped(truth)), truth, 4));
  return {worst <= 0.05, fmt("interior max error %.2e rad over ramp and blob (bound 0.05)", worst)};
}

Outcome inverse_chain() {
  const forward::Phantom ph = sphere_phantom();
  const Vec3 b0{0, 0, 1};
  const ScalarVolume chi = qsm::tkd_invert(forward::field_from_chi(ph.chi, b0), b0, {0.2});
  const double e = qsm::nrmse(chi, ph.chi, ph.mask);
  const ScalarVolume d = forward::dipole_kernel(ph.chi.dims(), ph.chi.voxel_sizes(), b0);
  const Mask all(ph.chi.dims(), true);
  const double eb = qsm::nrmse(band_restricted(chi, d, 0.2), band_restricted(ph.chi, d, 0.2), all, false);
  return {e <= 0.35 && eb <= 1e-6, fmt("mask NRMSE %.3f (bound 0.35), band-restricted %.2e (bound 1e-6)", e, eb)};
}

struct Arms {
  double retest, noreg, ireg, kreg, seconds;
  std::string fingerprint;
};

Arms run_default(app::PipelineConfig cfg, std::optional<std::uint64_t> base_seed) {
  if (base_seed)
    for (std::size_t i = 0; i < cfg.protocols.size(); ++i) cfg.protocols[i].seed = *base_seed + i;
  const Stopwatch clock;
  const app::PipelineResult r = app::run_pipeline(cfg);
  return {r.report.nrmse("retest"), r.report.nrmse("noreg"), r.report.nrmse("ireg"), r.report.nrmse("kreg"),
          clock.seconds(), app::numeric_fingerprint(r.report)};
}

Outcome paper_ordering(const app::PipelineConfig& cfg, std::vector<Arms>& runs) {
  // The config's own seeds, then four shifted base seeds.
  const std::vector<std::optional<std::uint64_t>> seeds{std::nullopt, 1000, 2000, 3000, 4000};
  bool order = true, kreg_margin = true, ireg_margin = true, fast = true;
  std::ostringstream table;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Arms a = run_default(cfg, seeds[s]);
    runs.push_back(a);
    order = order && a.retest < a.kreg && a.kreg < a.ireg && a.ireg < a.noreg;
    kreg_margin = kreg_margin && a.kreg <= 0.9 * a.ireg;
    ireg_margin = ireg_margin && a.ireg <= 0.9 * a.noreg;
    fast = fast && a.seconds < 120.0;
    table << "    seed " << (seeds[s] ? std::to_string(*seeds[s]) : std::string("config"))
          << fmt(": retest %.4f  kreg %.4f  ireg %.4f  noreg %.4f", a.retest, a.kreg, a.ireg, a.noreg)
          << fmt("  kreg/ireg %.3f  ireg/noreg %.3f  %.1f s\n", a.kreg / a.ireg, a.ireg / a.noreg, a.seconds);
  }
  auto yn = [](bool b) { return b ? "yes" : "NO"; };
  std::ostringstream detail;
  detail << "strict ordering " << yn(order) << ", kreg <= 0.9 ireg " << yn(kreg_margin)
         << ", ireg <= 0.9 noreg " << yn(ireg_margin) << ", runtime < 120 s " << yn(fast) << "\n"
         << table.str();
  std::string text = detail.str();
  text.pop_back();
  return {order && kreg_margin && ireg_margin && fast, text};
}

Outcome determinism(const app::PipelineConfig& cfg, const Arms& first_single_thread) {
  set_thread_count(1);
  const Arms again = run_default(cfg, std::nullopt);
  const std::size_t n = std::max<std::size_t>(4, std::thread::hardware_concurrency());
  set_thread_count(n);
  const Arms threaded = run_default(cfg, std::nullopt);
  set_thread_count(1);
  const bool same_runs = again.fingerprint == first_single_thread.fingerprint;
  const bool same_threads = threaded.fingerprint == first_single_thread.fingerprint;
  return {same_runs && same_threads, std::string("two runs identical ") + (same_runs ? "yes" : "NO") +
                                         ", 1 vs " + std::to_string(n) + " threads identical " +
                                         (same_threads ? "yes" : "NO")};
}

}  // namespace
}  // namespace kreg

int main(int argc, char** argv) {
  using namespace kreg;
  CLI::App cli("k-space registration acceptance checks");
  std::string config_path = KREG_DEFAULT_CONFIG;
  std::vector<int> expect_fail;
  cli.add_option("--config", config_path, "pipeline config for criteria 7 and 8");
  cli.add_option("--expect-fail", expect_fail, "criterion known to fail; its FAIL does not fail the run");
  CLI11_PARSE(cli, argc, argv);

  set_thread_count(1);
  const app::PipelineConfig cfg = app::load_config(config_path);
  std::vector<Arms> runs;

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"NUFFT matches direct sums on 8^3", nufft_oracle},
      {"type-1 is the adjoint of type-2 on 16^3", adjointness},
      {"Fourier rotation theorem, 20 deg about x on 48^3", rotation_theorem},
      {"identity protocol K-reg equals inverse FFT", noop_registration},
      {"Laplacian unwrap of wrapped ramp and blob on 64^3", unwrap_fidelity},
      {"TKD round trip on the 48^3 sphere phantom", inverse_chain},
      {"retest < K-reg < I-reg < no-reg with 10% margins, 5 seeds", [&] { return paper_ordering(cfg, runs); }},
      {"pipeline report identical across runs and thread counts", [&] {
         if (runs.empty()) runs.push_back(run_default(cfg, std::nullopt));
         return determinism(cfg, runs.front());
       }},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " | " << o.detail
              << std::endl;
  }

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  if (failed != expected) {
    std::cout << "acceptance: failing criteria differ from the expected set\n";
    return 1;
  }
  if (!expected.empty()) std::cout << "acceptance: only the expected criteria failed\n";
  return 0;
}
