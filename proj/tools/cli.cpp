/*
 Copyright 2026 The limco Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "limco/report_io.hpp"

namespace limco::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct Config {
  std::string problem = "bolza-example";
  std::vector<std::string> params;
  std::string out;
  int jobs = 0;
  std::uint64_t seed = 1;
  double eps_lim = 1e-6;
  double tol_adjoint = 1e-6;
  double tol_max = 1e-4;
  std::string tau = "geometric:1:2:7";
  std::string b;         // b*, comma separated
  std::string u;         // constant control, comma separated
  std::string control;   // control CSV (overrides --u)
  double T = 10.0;
  double lambda = 1.0;
  std::string psi0;
  bool normalized = false;
  // ak
  int tail_count = 7;
  // metric
  std::string control_a;
  std::string control_b;
  double T_max = 8.0;
  double s_radius = 2.0;
  std::string weight = "integral";
  std::string y0;
  // example-bolza
  bool no_gap = false;
  // probes
  double radius = 0.25;
  int samples = 8;
  std::string omega = "2.5*s + j";
};

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Usage(flag + ": not a number: '" + cell + "'");
    }
  }
  return v;
}

Vec parse_vec(const std::string& text, int dim, const std::string& flag) {
  const std::vector<double> v = parse_list(text, flag);
  if (static_cast<int>(v.size()) != dim)
    throw Usage(flag + ": expected " + std::to_string(dim) + " values");
  return Eigen::Map<const Vec>(v.data(), dim);
}

ControlProblem load(const Config& c) {
  std::map<std::string, double> params;
  for (const std::string& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Usage("--param expects key=value, got '" + kv + "'");
    const std::vector<double> v = parse_list(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
    if (v.size() != 1) throw Usage("--param expects a single value");
    params[kv.substr(0, eq)] = v.front();
  }
  ProblemSpec spec;
  if (fs::is_regular_file(c.problem)) {
    spec = ProblemSpec::from_file(c.problem);
    for (const auto& [k, v] : params) spec.params[k] = v;
  } else {
    spec = ProblemSpec::named(c.problem, params);
  }
  return load_problem(spec);
}

Vec base_point(const ControlProblem& p, const Config& c) {
  if (!c.b.empty()) return parse_vec(c.b, p.state_dim, "--b");
  return p.initial_set.clamp(Vec::Zero(p.state_dim));
}

ControlSignal read_control(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Usage("cannot read control file '" + path + "'");
  return read_control_csv(in);
}

ControlSignal reference_control(const ControlProblem& p, const Config& c) {
  ControlSignal u;
  if (!c.control.empty()) {
    u = read_control(c.control);
  } else if (!c.u.empty()) {
    u = ControlSignal::constant(parse_vec(c.u, p.control_dim, "--u"));
  } else {
    u = ControlSignal::constant(p.control_set(0.0).clamp(Vec::Zero(p.control_dim)));
  }
  if (u.dim() != p.control_dim) throw Usage("control has wrong dimension");
  return u;
}

Json config_json(const std::string& command, const Config& c) {
  // The output directory and the job count never change results; left out.
  Json j;
  j["command"] = command;
  j["problem"] = c.problem;
  Json params = Json::array();
  for (const std::string& p : c.params) params.push_back(p);
  j["params"] = params;
  j["seed"] = c.seed;
  j["tau"] = c.tau;
  j["eps_lim"] = c.eps_lim;
  j["tol_adjoint"] = c.tol_adjoint;
  j["tol_max"] = c.tol_max;
  j["b"] = c.b;
  j["u"] = c.u;
  j["control"] = c.control;
  j["T"] = c.T;
  j["lambda"] = c.lambda;
  j["psi0"] = c.psi0;
  j["normalized"] = c.normalized;
  j["tail_count"] = c.tail_count;
  j["control_a"] = c.control_a;
  j["control_b"] = c.control_b;
  j["T_max"] = c.T_max;
  j["s_radius"] = c.s_radius;
  j["weight"] = c.weight;
  j["y0"] = c.y0;
  j["no_gap"] = c.no_gap;
  j["radius"] = c.radius;
  j["samples"] = c.samples;
  j["omega"] = c.omega;
  return j;
}

fs::path output_dir(const Config& c) {
  fs::path dir = "limco-out";
  if (!c.out.empty()) {
    dir = c.out;
  } else if (const char* env = std::getenv("LIMCO_OUT"); env && *env) {
    dir = env;
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

template <class Writer>
void write_csv_file(const fs::path& path, Writer&& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  w(os);
}

void write_report(const fs::path& dir, const std::string& command, const Config& c, Json result,
                  int exit_code) {
  Json j;
  j["tool"] = "limco";
  j["config"] = config_json(command, c);
  j["exit_code"] = exit_code;
  j["result"] = std::move(result);
  write_text(dir / "report.json", j.dump(2) + "\n");
}

PmpTolerances tolerances(const Config& c) {
  if (!(c.tol_adjoint > 0.0) || !(c.tol_max > 0.0) || !(c.eps_lim > 0.0))
    throw Usage("tolerances must be positive");
  PmpTolerances t;
  t.adjoint = c.tol_adjoint;
  t.max_residual = c.tol_max;
  return t;
}

LimitCriteria criteria(const Config& c) {
  LimitCriteria k;
  k.eps_lim = c.eps_lim;
  return k;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_sweep(const Config& c, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u = reference_control(p, c);
  const HorizonSequence tau = HorizonSequence::parse(c.tau);
  tolerances(c);
  const LimitReport r = horizon_sweep(p, b, u, tau, constant_schedule(b, tau.values.size()),
                                      criteria(c), {}, Parallelism{c.jobs});
  const int code = r.partial ? kNumericalFailure
                   : r.classification == LimitClass::kInconclusive ? kVerdictFail
                                                                    : kPass;
  const fs::path dir = output_dir(c);
  write_report(dir, "sweep-horizons", c, io::to_json(r), code);
  write_csv_file(dir / "horizons.csv", [&](std::ostream& os) { io::write_horizon_csv(os, r); });
  out << "classification: " << to_string(r.classification) << "\n";
  out << "limit: " << r.limit_vector << "\n";
  out << "horizons: " << r.table.size() << " (" << tau.tag << ")\n";
  if (r.subsequence_hint) out << "hint: " << *r.subsequence_hint << "\n";
  out << "report: " << (dir / "report.json").string() << "\n";
  return code;
}

int cmd_check_pmp(const Config& c, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u = reference_control(p, c);
  const RowVec psi0 =
      c.psi0.empty() ? RowVec::Zero(p.state_dim) : RowVec(parse_vec(c.psi0, p.state_dim, "--psi0").transpose());
  CostateCandidate cand = CostateCandidate::user(c.lambda, psi0);
  cand.normalized = c.normalized;
  const PmpReport r = check_pmp(p, b, u, cand, c.T, tolerances(c));
  const int code = r.pass ? kPass : kVerdictFail;
  const fs::path dir = output_dir(c);
  Json res;
  res["candidate"] = io::to_json(cand);
  res["pmp"] = io::to_json(r, true);
  write_report(dir, "check-pmp", c, res, code);
  write_csv_file(dir / "pmp.csv", [&](std::ostream& os) { io::write_pmp_csv(os, r); });
  out << "adjoint residual: " << r.adjoint_residual << (r.adjoint_pass ? " ok" : " FAIL") << "\n";
  out << "max-condition residual: " << r.max_residual << " at t=" << r.max_residual_time
      << (r.max_pass ? " ok" : " FAIL") << "\n";
  out << "normalization: " << r.normalization_error
      << (r.normalization_deferred ? " (deferred)" : "") << (r.normalization_pass ? " ok" : " FAIL")
      << "\n";
  out << "transversality distance: " << r.transversality.distance
      << (r.transversality_pass ? " ok" : " FAIL") << "\n";
  out << "verdict: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return code;
}

int cmd_analyze(const Config& c, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u = reference_control(p, c);
  const HorizonSequence tau = HorizonSequence::parse(c.tau);
  const PmpTolerances tol = tolerances(c);
  const LimitReport sweep = horizon_sweep(p, b, u, tau, constant_schedule(b, tau.values.size()),
                                          criteria(c), {}, Parallelism{c.jobs});
  Json res;
  res["sweep"] = io::to_json(sweep);
  int code = kPass;
  const fs::path dir = output_dir(c);
  out << "classification: " << to_string(sweep.classification) << "\n";
  if (sweep.partial) {
    code = kNumericalFailure;
  } else if (sweep.classification == LimitClass::kInconclusive) {
    code = kVerdictFail;
  } else {
    const ClassifiedCandidate cc = classify_candidate(p, b, sweep, tol.transversality);
    const PmpReport pmp = check_pmp(p, b, u, cc.candidate, c.T, tol);
    res["candidate"] = io::to_json(cc);
    res["pmp"] = io::to_json(pmp);
    code = pmp.pass ? kPass : kVerdictFail;
    write_csv_file(dir / "pmp.csv", [&](std::ostream& os) { io::write_pmp_csv(os, pmp); });
    out << "candidate: lambda=" << cc.candidate.lambda << " psi0=" << cc.candidate.psi0 << "\n";
    out << "transversality distance: " << cc.transversality.distance << "\n";
    out << "max-condition residual: " << pmp.max_residual << "\n";
    out << "verdict: " << (pmp.pass ? "PASS" : "FAIL") << "\n";
  }
  write_report(dir, "analyze", c, res, code);
  write_csv_file(dir / "horizons.csv", [&](std::ostream& os) { io::write_horizon_csv(os, sweep); });
  return code;
}

int cmd_ak(const Config& c, const CLI::App& sub, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u = reference_control(p, c);
  if (c.T < 0.0) throw Usage("--T must be nonnegative");
  const HorizonSequence tail = sub.count("--tau") > 0 ? HorizonSequence::parse(c.tau)
                                                       : HorizonSequence::tail_after(c.T, c.tail_count);
  const AkResult r = ak_costate(p, b, u, c.T, tail, criteria(c));
  const int code = r.verdict == TailVerdict::kConverged ? kPass : kVerdictFail;
  write_report(output_dir(c), "ak", c, io::to_json(r), code);
  out << "psi(T): " << r.psi_T << "\n";
  out << "tail verdict: " << to_string(r.verdict) << "\n";
  return code;
}

int cmd_metric(const Config& c, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u_star = reference_control(p, c);
  MetricOptions opts;
  opts.seed = c.seed;
  opts.control_set = p.control_set;
  if (c.weight == "integral") {
    opts.weight = WeightForm::kIntegral;
  } else if (c.weight == "exponential") {
    opts.weight = WeightForm::kExponential;
  } else {
    throw Usage("--weight must be integral or exponential");
  }
  Vec center = Vec::Zero(2 * p.state_dim + 1);
  center.head(p.state_dim) = b;
  const MetricContext ctx = MetricContext::build(FieldSystem::extended(p), u_star,
                                                 InitialRegion::ball(center, c.s_radius), c.T_max,
                                                 opts);
  const double T = std::min(c.T, c.T_max);
  Json res;
  res["context"] = io::to_json(ctx);
  if (!c.control_a.empty()) {
    const ControlSignal a = read_control(c.control_a);
    const ControlSignal bb = c.control_b.empty() ? u_star : read_control(c.control_b);
    const RhoValue r = rho(ctx, a, bb, T);
    res["rho"] = io::to_json(r);
    out << "rho: " << r.value << " (T=" << T << ", disagreement " << r.disagreement << ")\n";
    if (!c.y0.empty()) {
      const DivergenceCheck d =
          verify_divergence_bound(ctx, a, parse_vec(c.y0, ctx.field().dim, "--y0"), T);
      res["divergence"] = io::to_json(d);
      out << "divergence bound: "
          << (!d.guard_passed ? "skipped (guard)" : d.holds ? "holds" : "VIOLATED")
          << ", min margin " << d.min_margin << "\n";
    }
  }
  write_report(output_dir(c), "metric", c, res, kPass);
  out << "funnel boxes: " << ctx.funnel().size() << ", k_max " << ctx.k_max() << ", M(T_max) "
      << ctx.weight(ctx.T_max()) << "\n";
  return kPass;
}

int cmd_example(const Config& c, std::ostream& out) {
  bolza::ExampleOptions opts;
  opts.T = c.T;
  opts.with_gap = !c.no_gap;
  opts.seed = c.seed;
  const bolza::ExampleReport r = bolza::example_report(opts, Parallelism{c.jobs});
  const int code = r.pass ? kPass : kVerdictFail;
  const fs::path dir = output_dir(c);
  write_report(dir, "example-bolza", c, io::to_json(r), code);
  write_csv_file(dir / "series.csv", [&](std::ostream& os) { io::write_series_csv(os, r.series); });
  out << "I_star: " << r.I_star << " (" << to_string(r.classification) << ")\n";
  out << "AK candidate: " << (r.ak_fails ? "fails as expected" : "UNEXPECTED") << ", residual "
      << r.ak_pmp.max_residual << "\n";
  out << "true candidate: " << (r.true_passes ? "passes" : "FAILS") << ", adjoint residual "
      << r.true_pmp.adjoint_residual << "\n";
  if (r.gap)
    for (const auto& row : r.gap->rows)
      out << "gap T=" << row.T << ": min J " << row.min_J << (row.worst_case_ok ? "" : " BELOW -6")
          << "\n";
  out << "verdict: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return code;
}

int cmd_probes(const Config& c, std::ostream& out) {
  const ControlProblem p = load(c);
  const Vec b = base_point(p, c);
  const ControlSignal u = reference_control(p, c);
  const HorizonSequence tau = HorizonSequence::parse(c.tau);
  if (!(c.radius > 0.0)) throw Usage("--radius must be positive");
  if (c.samples < 1) throw Usage("--samples must be >= 1");
  const Parallelism par{c.jobs};
  const expr::Expression omega = expr::Expression::parse(c.omega, omega_symbols());

  std::vector<Vec> seq;
  const Vec dir = Vec::Ones(p.state_dim) / std::sqrt(static_cast<double>(p.state_dim));
  for (std::size_t n = 0; n < tau.values.size(); ++n)
    seq.push_back(p.initial_set.clamp(b + c.radius * std::ldexp(1.0, -static_cast<int>(n)) * dir));
  const ContinuityProbe cont = sensitivity_continuity_probe(p, b, u, tau, seq, {}, par);
  const EquicontinuityProbe eq =
      equicontinuity_probe(p, b, u, tau, c.radius, c.samples, c.seed, {}, par);
  const auto viol = omega_modulus_check(p, b, u, tau, omega, c.radius, c.samples, c.seed, {}, par);
  std::vector<double> radii;
  for (std::size_t n = 0; n < tau.values.size(); ++n)
    radii.push_back(c.radius * std::ldexp(1.0, -static_cast<int>(n)));
  const GradientsAtInfinity grad =
      gradients_at_infinity(p, b, u, tau, radii, c.samples, c.seed, criteria(c), {}, par);

  Json res;
  res["continuity"] = io::to_json(cont);
  res["equicontinuity"] = io::to_json(eq);
  res["omega_violations"] = io::to_json(viol);
  res["gradients_at_infinity"] = io::to_json(grad);
  write_report(output_dir(c), "probes", c, res, kPass);
  out << "continuity: " << cont.verdict << "\n";
  out << "equicontinuity: " << eq.verdict << "\n";
  out << "omega violations: " << viol.size() << "\n";
  out << "joint limit: " << (grad.probe.holds ? "holds" : "not observed") << ", d1 clusters "
      << grad.d1.clusters.size() << ", d0 clusters " << grad.d0.clusters.size() << "\n";
  return kPass;
}

void add_common(CLI::App* s, Config& c) {
  s->add_option("--problem", c.problem, "registry name or JSON problem file")->capture_default_str();
  s->add_option("--param", c.params, "problem parameter key=value (repeatable)");
  s->add_option("--out", c.out, "output directory (default $LIMCO_OUT or ./limco-out)");
  s->add_option("--jobs", c.jobs, "worker threads, 0 = OpenMP default")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", c.seed, "sampling seed")->capture_default_str();
  s->add_option("--eps-lim", c.eps_lim, "Cauchy tolerance for limits")->capture_default_str();
  s->add_option("--tol-adjoint", c.tol_adjoint, "adjoint residual tolerance")->capture_default_str();
  s->add_option("--tol-max", c.tol_max, "max-condition residual tolerance")->capture_default_str();
  s->add_option("--tau", c.tau, "horizons: geometric:tau0:r:N or list:t1,t2,...")->capture_default_str();
  s->add_option("--b", c.b, "reference initial point, comma separated");
  s->add_option("--u", c.u, "constant reference control, comma separated");
  s->add_option("--control", c.control, "reference control CSV (t,u1..uk)");
  s->add_option("--T", c.T, "horizon")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"limco: costate limits and PMP checks on infinite horizons"};
  app.require_subcommand(1);
  app.fallthrough(false);

  auto* analyze = app.add_subcommand("analyze", "sweep, candidate and PMP check");
  auto* sweep = app.add_subcommand("sweep-horizons", "sensitivity limit over a horizon sequence");
  auto* pmp = app.add_subcommand("check-pmp", "verify PMP relations for a candidate");
  auto* ak = app.add_subcommand("ak", "explicit tail formula for psi(T)");
  auto* metric = app.add_subcommand("metric", "control metric context and rho");
  auto* example = app.add_subcommand("example-bolza", "worked example report");
  auto* probes = app.add_subcommand("probes", "applicability probes");
  for (auto* s : {analyze, sweep, pmp, ak, metric, example, probes}) add_common(s, c);

  for (auto* s : {analyze, pmp}) s->add_flag("--normalized", c.normalized, "candidate is normalized");
  pmp->add_option("--lambda", c.lambda, "cost multiplier")->capture_default_str();
  pmp->add_option("--psi0", c.psi0, "psi(0), comma separated");
  ak->add_option("--tail-count", c.tail_count, "tail horizons T + 2^n")->capture_default_str();
  metric->add_option("--control-a", c.control_a, "control CSV");
  metric->add_option("--control-b", c.control_b, "control CSV (default: the reference)");
  metric->add_option("--T-max", c.T_max, "context horizon")->capture_default_str();
  metric->add_option("--s-radius", c.s_radius, "radius of the initial ball S")->capture_default_str();
  metric->add_option("--weight", c.weight, "integral or exponential")->capture_default_str();
  metric->add_option("--y0", c.y0, "initial extended state for the divergence bound");
  example->add_flag("--no-gap", c.no_gap, "skip the gap probe");
  probes->add_option("--radius", c.radius, "neighborhood radius")->capture_default_str();
  probes->add_option("--samples", c.samples, "samples per stage")->capture_default_str();
  probes->add_option("--omega", c.omega, "modulus omega(s, j)")->capture_default_str();

  // CLI11 honours --help before it rejects a stray leading word
  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' &&
      app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown subcommand '" << args.front() << "'\n" << app.help();
    return kUsage;
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(c, out);
    if (*sweep) return cmd_sweep(c, out);
    if (*pmp) return cmd_check_pmp(c, out);
    if (*ak) return cmd_ak(c, *ak, out);
    if (*metric) return cmd_metric(c, out);
    if (*example) return cmd_example(c, out);
    if (*probes) return cmd_probes(c, out);
  } catch (const Usage& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const expr::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrationError& e) {
    err << "numerical failure at t=" << e.time() << ": " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace limco::cli
