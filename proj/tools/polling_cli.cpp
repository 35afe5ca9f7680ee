// polling: simulate and analyze overloaded multigated polling systems.
//
// Exit codes: 0 ok, 1 config rejected, 2 input/output error, 3 numerical
// failure, 4 usage error.

#include <CLI11.hpp>

#include <polling/polling.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace polling;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_path = "-";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool deterministic = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "model config (JSON)")->required();
  app->add_option("--out", c.out_path, "output file, '-' for stdout");
  app->add_option("--seed", c.seed, "override base_seed");
  app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  app->add_flag("--deterministic", c.deterministic, "omit the timestamp from outputs");
}

ModelConfig load_config(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw IoError("cannot read config file '" + c.config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ModelConfig cfg = parse_config(ss.str());
  if (c.seed) cfg.base_seed = *c.seed;
  return cfg;
}

// Writes to the file only after the whole artifact has been produced.
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3 && parts.size() != 4) throw UsageError("--grid expects t0:T:points[:log|:lin]");
  bool log_spaced = true;
  if (parts.size() == 4) {
    if (parts[3] == "lin") log_spaced = false;
    else if (parts[3] != "log") throw UsageError("--grid spacing must be 'log' or 'lin'");
  }
  try {
    const double t0 = std::stod(parts[0]);
    const double t1 = std::stod(parts[1]);
    const long points = std::stol(parts[2]);
    if (points <= 0) throw UsageError("--grid needs a positive point count");
    return make_grid(t0, t1, static_cast<std::size_t>(points), log_spaced);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

std::vector<int> parse_scales(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ',');) {
    try {
      out.push_back(std::stoi(p));
    } catch (const std::exception&) {
      throw UsageError("--scales expects a comma-separated list of integers");
    }
  }
  if (out.empty()) throw UsageError("--scales is empty");
  return out;
}

std::vector<GateCount> parse_gate_list(const std::string& spec) {
  std::vector<GateCount> out;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ',');) {
    if (p == "inf") {
      out.push_back(kUnlimitedGates);
      continue;
    }
    try {
      const long k = std::stol(p);
      if (k < 0) throw UsageError("--k values must be nonnegative");
      out.push_back(static_cast<GateCount>(k));
    } catch (const std::logic_error&) {
      throw UsageError("--k expects integers or 'inf'");
    }
  }
  return out;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int run_validate(const Common& c) {
  const ModelConfig cfg = load_config(c);
  const auto rep = validate_config(cfg);
  json out{{"meta", meta_json(cfg, json::object(), c.deterministic)}, {"validation", to_json(rep)}};
  emit(c.out_path, json_text(out));
  return rep.accepted() ? 0 : 1;
}

struct AnalyzeArgs {
  std::size_t reps = 2000;
  std::size_t gen_cap = 200;
  std::int64_t pop_cap = 1000;
};

int run_analyze(const Common& c, const AnalyzeArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  const Analysis an = analyze(cfg);
  ExtinctionOptions eo{a.reps, a.gen_cap, a.pop_cap, c.threads};
  const auto ext = extinction_probs(cfg, eo, RngStream(cfg.base_seed(), "extinction"));
  json params{{"reps", a.reps}, {"gen_cap", a.gen_cap}, {"pop_cap", a.pop_cap}, {"seed", cfg.base_seed()}};
  json out{{"meta", meta_json(cfg.config(), params, c.deterministic)},
           {"branching", analysis_json(an, &ext)},
           {"fluid", to_json(an.fluid)}};
  emit(c.out_path, json_text(out));
  if (ext.caps_too_tight) std::cerr << "warning: extinction caps too tight (ambiguity above 1%)\n";
  return 0;
}

struct SimulateArgs {
  std::size_t sessions = 20;
  std::string full_trajectory;
  std::string grid = "0.1:100:200:log";
};

int run_simulate(const Common& c, const SimulateArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  TraceRequest req;
  req.n_sessions = a.sessions;
  if (!a.full_trajectory.empty()) req.grid = parse_grid(a.grid);
  RngStream s(cfg.base_seed(), "simulate");
  const EventTrace tr = run_trace(cfg, s, req);
  json params{{"sessions", a.sessions}, {"seed", cfg.base_seed()}};
  if (!a.full_trajectory.empty()) params["grid"] = a.grid;
  const json meta = meta_json(cfg.config(), params, c.deterministic);
  std::ostringstream os;
  write_csv_header(os, meta);
  write_trace_csv(os, tr);
  emit(c.out_path, os.str());
  if (!a.full_trajectory.empty()) {
    std::ostringstream ts;
    write_csv_header(ts, meta);
    write_trajectory_csv(ts, tr);
    emit(a.full_trajectory, ts.str());
  }
  return 0;
}

struct FluidArgs {
  std::string grid = "0.01:100:1000:log";
  double xi = 1.0;
};

int run_fluid(const Common& c, const FluidArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  const Analysis an = analyze(cfg);
  const auto grid = parse_grid(a.grid);
  json params{{"grid", a.grid}, {"xi", a.xi}};
  std::ostringstream os;
  write_csv_header(os, meta_json(cfg.config(), params, c.deterministic));
  write_fluid_csv(os, an.fluid, grid, a.xi);
  emit(c.out_path, os.str());
  return 0;
}

struct SampleXiArgs {
  std::size_t reps = 2000;
  std::size_t depth = 12;
  std::int64_t pop_cap = 10000;
};

int run_sample_xi(const Common& c, const SampleXiArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  const Analysis an = analyze(cfg);
  XiOptions xo;
  xo.n_samples = a.reps;
  xo.zeta = {a.depth, a.pop_cap};
  xo.threads = c.threads;
  const auto xs = sample_xi(cfg, an.spectral, an.fluid.alpha, xo, RngStream(cfg.base_seed(), "xi-formula"));
  const auto ms = mean_se(xs.values);
  json params{{"reps", a.reps}, {"depth", a.depth}, {"pop_cap", a.pop_cap}, {"seed", cfg.base_seed()}};
  json meta = meta_json(cfg.config(), params, c.deterministic);
  meta["summary"] = json{{"samples", xs.values.size()},
                         {"attempts", xs.attempts},
                         {"rejection_rate", xs.rejection_rate()},
                         {"mean", ms.mean},
                         {"mean_se", ms.se},
                         {"rho", an.spectral.rho}};
  std::ostringstream os;
  write_csv_header(os, meta);
  write_column_csv(os, "xi", xs.values);
  emit(c.out_path, os.str());
  return 0;
}

struct VerifyArgs {
  std::string scales = "6,8,10";
  std::size_t reps = 200;
  std::size_t xi_samples = 2000;
  int xi_scale = 10;
  std::size_t depth = 12;
  std::string grid = "1:10:50:log";
  std::size_t busy_reps = 10000;
  std::string xi_out;
};

int run_verify(const Common& c, const VerifyArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  const Analysis an = analyze(cfg);
  const auto scales = parse_scales(a.scales);
  const auto grid = parse_grid(a.grid);
  const std::uint64_t seed = cfg.base_seed();

  RatioOptions ro{scales, a.reps, 100000, c.threads};
  const auto ratios = switching_ratio_estimates(an, ro, RngStream(seed, "ratios"));

  XiEmpiricalOptions eo{a.xi_samples, a.xi_scale, 100000, c.threads};
  const auto emp = extract_xi_empirical(an, eo, RngStream(seed, "xi-sim"));
  XiOptions xo;
  xo.n_samples = a.xi_samples;
  xo.zeta.depth = a.depth;
  xo.threads = c.threads;
  const auto formula = sample_xi(cfg, an.spectral, an.fluid.alpha, xo, RngStream(seed, "xi-formula"));
  const auto ks = ks_two_sample(emp.xi, formula.values);

  const auto traj = trajectory_distances(an, scales, grid, a.reps, RngStream(seed, "trajectory"), c.threads);

  json busy = json::array();
  for (std::size_t i = 0; i < cfg.size(); ++i)
    for (GateCount k : {GateCount{0}, GateCount{1}, GateCount{2}, GateCount{5}, kUnlimitedGates})
      busy.push_back(to_json(busy_period_moments(cfg, i, k, a.busy_reps, RngStream(seed, "busy").child(i), c.threads)));

  std::string xi_path = a.xi_out;
  if (xi_path.empty()) xi_path = c.out_path == "-" ? "xi_samples.csv" : c.out_path + ".xi.csv";

  json params{{"scales", scales},         {"reps", a.reps},   {"xi_samples", a.xi_samples}, {"xi_scale", a.xi_scale},
              {"depth", a.depth},         {"grid", a.grid},   {"busy_reps", a.busy_reps},   {"seed", seed}};
  const json meta = meta_json(cfg.config(), params, c.deterministic);
  json ratio_rows = json::array();
  for (const auto& e : ratios.estimates) ratio_rows.push_back(to_json(e));
  json traj_rows = json::array();
  for (const auto& t : traj) traj_rows.push_back(to_json(t));
  json out{{"meta", meta},
           {"ratios", ratio_rows},
           {"eta", {{"stable_fraction", ratios.eta_stable_fraction},
                    {"matches_zeta_fraction", ratios.eta_matches_zeta_fraction}}},
           {"xi", {{"samples_path", xi_path},
                   {"ks", ks.statistic},
                   {"critical", ks.critical_001},
                   {"n_simulated", emp.xi.size()},
                   {"n_formula", formula.values.size()},
                   {"formula_rejection_rate", formula.rejection_rate()}}},
           {"trajectory", traj_rows},
           {"busy", busy},
           {"dropped", {{"count", ratios.dropped + emp.dropped}, {"total", ratios.total + emp.total}}}};

  std::ostringstream xs;
  write_csv_header(xs, meta);
  write_column_csv(xs, "xi_simulated", emp.xi);
  emit(xi_path, xs.str());
  emit(c.out_path, json_text(out));
  return 0;
}

struct BusyArgs {
  std::optional<std::size_t> queue;
  std::string k = "0,1,2,5,inf";
  std::size_t reps = 100000;
};

int run_busy(const Common& c, const BusyArgs& a) {
  const ValidatedConfig cfg(load_config(c));
  if (a.queue && (*a.queue == 0 || *a.queue > cfg.size())) throw UsageError("--queue out of range");
  const auto ks = parse_gate_list(a.k);
  json rows = json::array();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (a.queue && *a.queue != i + 1) continue;
    for (GateCount k : ks)
      rows.push_back(to_json(busy_period_moments(cfg, i, k, a.reps, RngStream(cfg.base_seed(), "busy").child(i), c.threads)));
  }
  json params{{"k", a.k}, {"reps", a.reps}, {"seed", cfg.base_seed()}};
  if (a.queue) params["queue"] = *a.queue;
  json out{{"meta", meta_json(cfg.config(), params, c.deterministic)}, {"busy", rows}};
  emit(c.out_path, json_text(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and fluid-limit analysis of overloaded multigated polling systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  AnalyzeArgs analyze_args;
  SimulateArgs simulate_args;
  FluidArgs fluid_args;
  SampleXiArgs xi_args;
  VerifyArgs verify_args;
  BusyArgs busy_args;

  auto* validate = app.add_subcommand("validate", "check the load assumptions");
  add_common(validate, common);

  auto* analyze_cmd = app.add_subcommand("analyze", "branching data, extinction and fluid constants");
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--reps", analyze_args.reps, "extinction replications per start");
  analyze_cmd->add_option("--gen-cap", analyze_args.gen_cap, "generation cap");
  analyze_cmd->add_option("--pop-cap", analyze_args.pop_cap, "population cap");

  auto* simulate = app.add_subcommand("simulate", "session trace CSV");
  add_common(simulate, common);
  simulate->add_option("--sessions", simulate_args.sessions, "sessions to simulate");
  simulate->add_option("--full-trajectory", simulate_args.full_trajectory, "also write Q(t) on --grid to this path");
  simulate->add_option("--grid", simulate_args.grid, "t0:T:points[:log|:lin]");

  auto* fluid = app.add_subcommand("fluid", "fluid trajectory CSV");
  add_common(fluid, common);
  fluid->add_option("--grid", fluid_args.grid, "t0:T:points[:log|:lin]");
  fluid->add_option("--xi", fluid_args.xi, "scaling factor in [1, rho)");

  auto* sample = app.add_subcommand("sample-xi", "draws of the scaling factor xi");
  add_common(sample, common);
  sample->add_option("--reps", xi_args.reps, "number of samples");
  sample->add_option("--depth", xi_args.depth, "branching generations per zeta draw");
  sample->add_option("--pop-cap", xi_args.pop_cap, "population cap before thinning");

  auto* verify = app.add_subcommand("verify", "convergence report");
  add_common(verify, common);
  verify->add_option("--scales", verify_args.scales, "scale exponents n1,n2,...");
  verify->add_option("--reps", verify_args.reps, "replications for ratios and trajectories");
  verify->add_option("--xi-samples", verify_args.xi_samples, "xi samples per side");
  verify->add_option("--xi-scale", verify_args.xi_scale, "scale exponent for simulated xi");
  verify->add_option("--depth", verify_args.depth, "branching generations per zeta draw");
  verify->add_option("--grid", verify_args.grid, "t0:T:points[:log|:lin] for trajectory distances");
  verify->add_option("--busy-reps", verify_args.busy_reps, "replications per busy-moment cell");
  verify->add_option("--xi-out", verify_args.xi_out, "path for simulated xi samples");

  auto* busy = app.add_subcommand("busy-moments", "visit duration and f-moment checks");
  add_common(busy, common);
  busy->add_option("--queue", busy_args.queue, "queue (1-based); default all");
  busy->add_option("--k", busy_args.k, "exponent list, e.g. 0,1,2,5,inf");
  busy->add_option("--reps", busy_args.reps, "replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (*validate) return run_validate(common);
    if (*analyze_cmd) return run_analyze(common, analyze_args);
    if (*simulate) return run_simulate(common, simulate_args);
    if (*fluid) return run_fluid(common, fluid_args);
    if (*sample) return run_sample_xi(common, xi_args);
    if (*verify) return run_verify(common, verify_args);
    if (*busy) return run_busy(common, busy_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 4;
  } catch (const RejectedConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return 3;
  }
  return 4;
}
