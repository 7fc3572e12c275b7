#include "prf/scenarios.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "prf/counting.hpp"
#include "prf/correlators.hpp"
#include "prf/io.hpp"
#include "prf/sweep.hpp"
#include "prf/trajectories.hpp"
#include "prf/util.hpp"

namespace prf {

namespace {

using nlohmann::json;

std::string iso_now() {
  auto now = std::chrono::system_clock::now();
  auto tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&tt));
  return buf;
}

const std::set<std::string> kScenarios = {
    "pn-vs-area",   "pmn-vs-T",          "spectrum-map",
    "g2-frequency-map", "timebin-purities", "mc-validate"};

// Collects warnings/flags and writes the manifest even on failure.
struct RunContext {
  const ScenarioConfig& cfg;
  std::filesystem::path dir;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;
  json flags = json::array();
  std::string started = iso_now();

  explicit RunContext(const ScenarioConfig& c) : cfg(c), dir(c.out_dir) {
    std::filesystem::create_directories(dir);
  }

  void warn(const std::string& w) { warnings.push_back(w); }

  void note_flag(const std::string& task, bool converged_tail, bool counting_ok) {
    flags.push_back({{"task", task},
                     {"tail_converged", converged_tail},
                     {"truncation_converged", counting_ok}});
    if (!counting_ok)
      warn(task + ": truncated photon-number series not fully converged");
  }

  std::string csv_path(const std::string& name) {
    outputs.push_back(name);
    return (dir / name).string();
  }

  void write_manifest(const std::string& status, const std::string& error = "") {
    json m;
    m["version"] = kVersion;
    m["scenario"] = cfg.scenario;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["started_at"] = started;
    m["finished_at"] = iso_now();
    m["workers"] = resolve_workers(cfg.workers);
    m["seed"] = cfg.seed;
    m["tolerances"] = {{"rtol", cfg.rtol}, {"atol", cfg.atol}};
    m["warnings"] = warnings;
    m["outputs"] = outputs;
    m["tasks"] = flags;
    json echo;
    for (const auto& [k, v] : cfg.raw.entries()) echo[k] = v;
    m["config"] = echo;
    json resolved;
    resolved["t_center"] = cfg.pulse_center();
    resolved["epsilon"] = cfg.epsilon;
    resolved["n_max"] = cfg.n_max;
    json th = json::array();
    for (double t : cfg.thetas) th.push_back(t);
    resolved["thetas_rad"] = th;
    m["resolved"] = resolved;
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << "\n";
  }
};

OdeOptions ode_options(const ScenarioConfig& cfg) {
  OdeOptions o;
  o.rtol = cfg.rtol;
  o.atol = cfg.atol;
  return o;
}

std::vector<double> default_T_grid(const ScenarioConfig& cfg, int points) {
  return linspace(0.0, cfg.pulse_center() + 2.5 / cfg.gamma_sigma, points);
}

double peak_rabi(const ScenarioConfig& cfg) {
  double mx = 0;
  for (double th : cfg.thetas) mx = std::max(mx, std::abs(th));
  return mx / (std::sqrt(2 * M_PI) * cfg.tau_d);
}

// ---------------------------------------------------------------- scenarios

void scenario_pn_vs_area(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const int n_max = cfg.n_max > 0 ? cfg.n_max : 4;
  const auto opt = ode_options(cfg);

  std::vector<std::vector<double>> rows(cfg.thetas.size());
  std::vector<char> conv(cfg.thetas.size(), 1);
  parallel_for_indexed(cfg.thetas.size(), cfg.workers, [&](std::size_t i) {
    auto sys = MomentSystem::build(cfg.bare_model(cfg.thetas[i]));
    auto gn = integrated_gn(sys, 0, n_max, {}, opt);
    IntensityMoments m;
    m.w_pow.resize(n_max);
    double rn = 1;
    for (int k = 1; k <= n_max; ++k) {
      rn *= cfg.gamma_sigma;
      m.w_pow[k - 1] = rn * gn.g_total[k - 1];
    }
    auto pn = pn_from_moments(m, n_max);
    conv[i] = pn.converged ? 1 : 0;
    rows[i].push_back(cfg.thetas[i] / M_PI);
    for (int k = 0; k <= n_max; ++k) rows[i].push_back(pn.p_n[k]);
  });
  for (std::size_t i = 0; i < cfg.thetas.size(); ++i)
    ctx.note_flag(fmt::format("theta={:g}pi", cfg.thetas[i] / M_PI), true, conv[i]);

  std::vector<std::string> header{"theta_over_pi"};
  for (int k = 0; k <= n_max; ++k) header.push_back(fmt::format("P{}", k));
  write_csv(ctx.csv_path("pn_vs_area.csv"), header, rows);
}

void scenario_pmn_vs_T(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = ode_options(cfg);
  const auto T = cfg.T_grid.empty() ? default_T_grid(cfg, 61) : cfg.T_grid;
  const double tc = cfg.pulse_center();

  std::vector<std::vector<double>> rows(cfg.thetas.size() * T.size());
  for (std::size_t a = 0; a < cfg.thetas.size(); ++a) {
    auto sys = MomentSystem::build(cfg.bare_model(cfg.thetas[a]));
    auto integ = integrated_g2(sys, 0, 0, T, opt);
    parallel_for_indexed(T.size(), cfg.workers, [&](std::size_t ti) {
      auto bins = two_bin_extension(sys, integ, ti, opt);
      auto m = intensity_moments_one_mode(integ, bins, ti, cfg.gamma_sigma);
      auto p = pmn_one_mode_2pa(m);
      auto& row = rows[a * T.size() + ti];
      row = {cfg.thetas[a] / M_PI, T[ti], (T[ti] - tc) / cfg.tau_d,
             p.mn(0, 0), p.mn(1, 0), p.mn(0, 1),
             p.mn(2, 0), p.mn(1, 1), p.mn(0, 2)};
    });
    ctx.note_flag(fmt::format("theta={:g}pi", cfg.thetas[a] / M_PI),
                  integ.tail_converged, true);
  }
  std::vector<std::string> header{"theta_over_pi", "T", "T_minus_center_over_tau_d",
                                  "P00", "P10", "P01", "P20", "P11", "P02"};
  write_csv(ctx.csv_path("pmn_vs_T.csv"), header, rows);
}

void scenario_spectrum_map(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = ode_options(cfg);
  double span = peak_rabi(cfg) + 5.0 * cfg.gamma_sigma;
  const auto omega =
      cfg.omega_grid.empty() ? linspace(-span, span, 401) : cfg.omega_grid;

  std::vector<std::vector<double>> rows;
  rows.reserve(cfg.thetas.size() * omega.size());
  for (double theta : cfg.thetas) {
    auto sys = MomentSystem::build(cfg.bare_model(theta));
    auto spec = spectrum(sys, omega, opt, nullptr, cfg.workers);
    for (std::size_t k = 0; k < omega.size(); ++k)
      rows.push_back({theta / M_PI, omega[k], spec.values[k]});
    ctx.note_flag(fmt::format("theta={:g}pi", theta / M_PI), true, true);
  }
  std::vector<std::string> header{"theta_over_pi", "omega", "S"};
  write_csv(ctx.csv_path("spectrum.csv"), header, rows);
}

void scenario_g2_map(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = ode_options(cfg);
  double span = peak_rabi(cfg) + 5.0 * cfg.gamma_sigma;
  const auto wa = cfg.omega_a_grid.empty() ? linspace(-span, span, 41)
                                           : cfg.omega_a_grid;
  const auto wb = cfg.omega_b_grid.empty() ? wa : cfg.omega_b_grid;

  for (double theta : cfg.thetas) {
    for (double width : cfg.linewidths) {
      std::vector<std::vector<double>> rows(wa.size() * wb.size());
      parallel_for_indexed(rows.size(), cfg.workers, [&](std::size_t k) {
        std::size_t i = k / wb.size(), j = k % wb.size();
        auto sys = MomentSystem::build(cfg.sensor_model(
            theta, {{wa[i], width}, {wb[j], width}}, cfg.epsilon));
        double g2 = normalized_g2_zero(sys, opt);
        rows[k] = {wa[i], wb[j], g2};
      });
      std::vector<std::string> header{"omega_a", "omega_b", "g2"};
      write_csv(ctx.csv_path(fmt::format("g2map_theta{:g}pi_gamma{:g}.csv",
                                         theta / M_PI, width)),
                header, rows);
      ctx.note_flag(fmt::format("theta={:g}pi Gamma={:g}", theta / M_PI, width),
                    true, true);
    }
  }
}

void scenario_timebin_purities(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = ode_options(cfg);
  const auto T = cfg.T_grid.empty() ? default_T_grid(cfg, 61) : cfg.T_grid;
  const double tc = cfg.pulse_center();
  const double theta = cfg.thetas.front();
  const double width = cfg.linewidths.front();

  // bare reference
  auto bare_sys = MomentSystem::build(cfg.bare_model(theta));
  auto bare_integ = integrated_g2(bare_sys, 0, 0, T, opt);

  // filtered: two sensors
  auto sys = MomentSystem::build(cfg.sensor_model(
      theta, {{cfg.freq_a, width}, {cfg.freq_b, width}}, cfg.epsilon));
  auto cross = integrated_g2(sys, 1, 2, T, opt);
  auto auto_a = integrated_g2(sys, 1, 1, T, opt);
  auto auto_b = integrated_g2(sys, 2, 2, T, opt);
  const double rate_a = sensor_detection_rate(sys.model, 1, SensorRateConvention::physical);
  const double rate_b = sensor_detection_rate(sys.model, 2, SensorRateConvention::physical);

  std::vector<std::vector<double>> prow(T.size()), purow(T.size());
  parallel_for_indexed(T.size(), cfg.workers, [&](std::size_t ti) {
    auto bare_bins = two_bin_extension(bare_sys, bare_integ, ti, opt);
    auto mb = intensity_moments_one_mode(bare_integ, bare_bins, ti, cfg.gamma_sigma);
    auto pb = pmn_one_mode_2pa(mb);
    auto pib = purities(pb);

    auto bins_aa = two_bin_extension(sys, auto_a, ti, opt);
    auto bins_bb = two_bin_extension(sys, auto_b, ti, opt);
    auto bins_ab = two_bin_extension(sys, cross, ti, opt);
    auto mf = intensity_moments_two_mode(cross, ti, bins_aa, bins_bb, bins_ab,
                                         auto_a, auto_b, rate_a, rate_b);
    auto pf = two_mode_2pa(mf).collapsed();
    auto pif = purities(pf);

    prow[ti] = {T[ti], (T[ti] - tc) / cfg.tau_d,
                pb.mn(0, 0), pb.mn(1, 0), pb.mn(0, 1), pb.mn(2, 0), pb.mn(1, 1), pb.mn(0, 2),
                pf.mn(0, 0), pf.mn(1, 0), pf.mn(0, 1), pf.mn(2, 0), pf.mn(1, 1), pf.mn(0, 2)};
    purow[ti] = {T[ti], (T[ti] - tc) / cfg.tau_d,
                 pib.mn(1, 0), pib.mn(0, 1), pib.mn(2, 0), pib.mn(1, 1), pib.mn(0, 2),
                 pif.mn(1, 0), pif.mn(0, 1), pif.mn(2, 0), pif.mn(1, 1), pif.mn(0, 2)};
  });
  ctx.note_flag("filtered", cross.tail_converged && auto_a.tail_converged, true);
  ctx.note_flag("bare", bare_integ.tail_converged, true);

  std::vector<std::string> pu_header{
      "T", "T_minus_center_over_tau_d",
      "pi10_bare", "pi01_bare", "pi20_bare", "pi11_bare", "pi02_bare",
      "pi10_filtered", "pi01_filtered", "pi20_filtered", "pi11_filtered",
      "pi02_filtered"};
  write_csv(ctx.csv_path("purities.csv"), pu_header, purow);
  std::vector<std::string> p_header{
      "T", "T_minus_center_over_tau_d",
      "p00_bare", "p10_bare", "p01_bare", "p20_bare", "p11_bare", "p02_bare",
      "p00_filtered", "p10_filtered", "p01_filtered", "p20_filtered",
      "p11_filtered", "p02_filtered"};
  write_csv(ctx.csv_path("pmn.csv"), p_header, prow);
}

void scenario_mc_validate(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = ode_options(cfg);
  const auto T = cfg.T_grid.empty() ? linspace(0.0, cfg.pulse_center() + 2.5, 13)
                                    : cfg.T_grid;
  const double tc = cfg.pulse_center();
  const double theta = cfg.thetas.front();

  for (double width : cfg.linewidths) {
    // the absorbing-detector coupling keeps click and physical rates equal
    double eps = cfg.epsilon_explicit
                     ? cfg.epsilon
                     : 0.5 * std::sqrt(cfg.gamma_sigma * width);
    auto model = cfg.sensor_model(theta, {{cfg.freq_a, width}}, eps);
    auto sys = MomentSystem::build(model);
    const double rate = sensor_detection_rate(model, 1, SensorRateConvention::click);

    auto integ = integrated_g2(sys, 1, 1, T, opt);
    std::vector<std::vector<double>> rows(T.size());
    std::vector<char> conv(T.size(), 1);

    McOptions mc;
    mc.rtol = std::max(cfg.rtol, 1e-8);
    mc.atol = std::max(cfg.atol, 1e-10);
    auto ensemble = run_ensemble(model, cfg.ensemble, cfg.seed, cfg.workers, mc);
    const int channels[] = {1};

    parallel_for_indexed(T.size(), cfg.workers, [&](std::size_t ti) {
      auto bins = two_bin_extension(sys, integ, ti, opt);
      auto m = intensity_moments_one_mode(integ, bins, ti, rate);
      auto p = pmn_one_mode_2pa(m);
      auto h = estimate_probabilities(ensemble, T[ti], channels);
      conv[ti] = p.converged ? 1 : 0;
      auto& row = rows[ti];
      row = {T[ti], (T[ti] - tc) / cfg.tau_d};
      for (auto [mm, nn] : {std::pair{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}) {
        row.push_back(p.mn(mm, nn));
        row.push_back(h.p(mm, nn));
        row.push_back(h.stderr_p(mm, nn));
      }
    });
    bool all_conv = std::all_of(conv.begin(), conv.end(), [](char c) { return c; });
    ctx.note_flag(fmt::format("Gamma={:g}", width), integ.tail_converged, all_conv);

    std::vector<std::string> header{"T", "T_minus_center_over_tau_d"};
    for (const char* mn : {"00", "10", "01", "20", "11", "02"}) {
      header.push_back(fmt::format("p{}_2pa", mn));
      header.push_back(fmt::format("p{}_mc", mn));
      header.push_back(fmt::format("p{}_mc_stderr", mn));
    }
    write_csv(ctx.csv_path(fmt::format("mc_validate_gamma{:g}.csv", width)),
              header, rows);
  }
}

}  // namespace

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  ConfigFile raw = ConfigFile::parse_file(path);
  ScenarioConfig cfg;
  cfg.raw = raw;
  cfg.scenario = raw.get_string("scenario", "name", "");
  if (!kScenarios.count(cfg.scenario))
    throw ConfigError("unknown or missing scenario name: '" + cfg.scenario + "'");

  cfg.thetas = raw.get_list("pulse", "theta", cfg.thetas);
  cfg.tau_d = raw.get_double("pulse", "tau_d", cfg.tau_d);
  cfg.t_center = raw.get_double("pulse", "t_center", cfg.t_center);
  cfg.detuning = raw.get_double("emitter", "detuning", cfg.detuning);
  cfg.gamma_sigma = raw.get_double("emitter", "gamma", cfg.gamma_sigma);

  cfg.epsilon_explicit = raw.has("sensors", "epsilon");
  cfg.epsilon = raw.get_double("sensors", "epsilon", cfg.epsilon);
  cfg.linewidths = raw.get_list("sensors", "linewidth", cfg.linewidths);
  cfg.freq_a = raw.get_double("sensors", "freq_a", cfg.freq_a);
  cfg.freq_b = raw.get_double("sensors", "freq_b", cfg.freq_b);

  cfg.T_grid = raw.get_list("grids", "T", cfg.T_grid);
  cfg.omega_grid = raw.get_list("grids", "omega", cfg.omega_grid);
  cfg.omega_a_grid = raw.get_list("grids", "omega_a", cfg.omega_a_grid);
  cfg.omega_b_grid = raw.get_list("grids", "omega_b", cfg.omega_b_grid);

  cfg.n_max = static_cast<int>(raw.get_long("numerics", "n_max", cfg.n_max));
  cfg.rtol = raw.get_double("numerics", "rtol", cfg.rtol);
  cfg.atol = raw.get_double("numerics", "atol", cfg.atol);
  cfg.ensemble = static_cast<std::size_t>(
      raw.get_long("numerics", "ensemble", static_cast<long>(cfg.ensemble)));
  cfg.seed = static_cast<std::uint64_t>(
      raw.get_long("numerics", "seed", static_cast<long>(cfg.seed)));
  cfg.workers = static_cast<int>(raw.get_long("numerics", "workers", cfg.workers));
  cfg.out_dir = raw.get_string("output", "dir", cfg.out_dir);

  // validation
  if (cfg.thetas.empty()) throw ConfigError("pulse.theta must not be empty");
  if (cfg.tau_d <= 0) throw ConfigError("pulse.tau_d must be > 0");
  if (cfg.gamma_sigma <= 0) throw ConfigError("emitter.gamma must be > 0");
  for (double w : cfg.linewidths)
    if (w <= 0) throw ConfigError("sensors.linewidth must be > 0");
  if (cfg.epsilon <= 0) throw ConfigError("sensors.epsilon must be > 0");
  if (cfg.n_max < 0 || cfg.n_max > 4) throw ConfigError("numerics.n_max must be 0..4");
  if (cfg.rtol <= 0 || cfg.atol <= 0) throw ConfigError("tolerances must be > 0");
  if (cfg.ensemble < 1) throw ConfigError("numerics.ensemble must be >= 1");
  for (std::size_t i = 0; i + 1 < cfg.T_grid.size(); ++i)
    if (cfg.T_grid[i + 1] <= cfg.T_grid[i])
      throw ConfigError("grids.T must be strictly ascending");
  if (cfg.scenario == "g2-frequency-map" || cfg.scenario == "timebin-purities" ||
      cfg.scenario == "mc-validate") {
    if (cfg.linewidths.empty())
      throw ConfigError(cfg.scenario + " needs sensors.linewidth");
  }
  return cfg;
}

JointModel ScenarioConfig::bare_model(double theta) const {
  PulseEnvelope p{theta, tau_d, pulse_center(), nullptr};
  return JointModel({detuning, gamma_sigma}, p);
}

JointModel ScenarioConfig::sensor_model(double theta,
                                        const std::vector<SensorParams>& sensors,
                                        double eps) const {
  PulseEnvelope p{theta, tau_d, pulse_center(), nullptr};
  return JointModel({detuning, gamma_sigma}, p, SensorBank{sensors, eps});
}

int run_scenario(const ScenarioConfig& cfg) {
  RunContext ctx(cfg);
  try {
    if (cfg.scenario == "pn-vs-area") scenario_pn_vs_area(ctx);
    else if (cfg.scenario == "pmn-vs-T") scenario_pmn_vs_T(ctx);
    else if (cfg.scenario == "spectrum-map") scenario_spectrum_map(ctx);
    else if (cfg.scenario == "g2-frequency-map") scenario_g2_map(ctx);
    else if (cfg.scenario == "timebin-purities") scenario_timebin_purities(ctx);
    else if (cfg.scenario == "mc-validate") scenario_mc_validate(ctx);
    else throw ConfigError("unknown scenario: " + cfg.scenario);
  } catch (const ConfigError& e) {
    ctx.write_manifest("validation-error", e.what());
    if (!cfg.quiet) fmt::print(stderr, "validation error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    ctx.write_manifest("failed", e.what());
    if (!cfg.quiet) fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
  ctx.write_manifest("ok");
  if (!cfg.quiet)
    fmt::print("{}: wrote {} file(s) to {}\n", cfg.scenario, ctx.outputs.size(),
               cfg.out_dir);
  return 0;
}

}  // namespace prf
