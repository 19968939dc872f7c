#include "miocp/cli.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "miocp/duality.hpp"
#include "miocp/errors.hpp"
#include "miocp/instances.hpp"
#include "miocp/parallel.hpp"
#include "miocp/report_io.hpp"
#include "miocp/sampling.hpp"
#include "miocp/sensitivity.hpp"

namespace miocp {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object()) throw ValidationError("config: '" + context + "' must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ValidationError("config: unknown key '" + item.key() + "' in " + context);
}

double require_number(const json& obj, const std::string& key, const std::string& context) {
  if (!obj.contains(key))
    throw ValidationError("config: missing key '" + key + "' in " + context);
  if (!obj[key].is_number())
    throw ValidationError("config: '" + key + "' in " + context + " must be a number");
  return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

Eigen::VectorXd parse_vector(const json& arr, const std::string& context) {
  if (!arr.is_array()) throw ValidationError("config: '" + context + "' must be an array");
  Eigen::VectorXd out(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ValidationError("config: '" + context + "' must contain numbers");
    out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return out;
}

Eigen::VectorXd parse_profile(const json& spec, int dim, const std::string& context) {
  check_keys(spec, {"preset", "amplitude", "values"}, context);
  if (spec.contains("values")) {
    const Eigen::VectorXd v = parse_vector(spec["values"], context + ".values");
    if (v.size() != dim)
      throw ValidationError("config: " + context + " needs " + std::to_string(dim) + " values");
    return v;
  }
  if (!spec.contains("preset"))
    throw ValidationError("config: " + context + " needs 'preset' or 'values'");
  return heat_profile(spec["preset"].get<std::string>(), dim, number_or(spec, "amplitude", 1.0));
}

ParametricInstance build_instance(const json& section) {
  check_keys(section, {"kind", "tf", "n_cells", "ball_radius",  // example1
                       "nx", "t0", "delta", "eps", "ybar", "yhat", "ball",  // heat
                       "a", "n_modes", "control_dim", "input", "drift", "box"},  // custom
             "instance");
  const std::string kind = section.value("kind", "");
  if (kind == "example1") {
    check_keys(section, {"kind", "tf", "n_cells", "ball_radius"}, "instance (example1)");
    return make_example1(require_number(section, "tf", "instance"),
                         static_cast<int>(require_number(section, "n_cells", "instance")),
                         number_or(section, "ball_radius", 2.0));
  }
  if (kind == "heat") {
    HeatOptions opts;
    opts.nx = static_cast<int>(require_number(section, "nx", "instance"));
    opts.grid = TimeGrid(number_or(section, "t0", 0.0), require_number(section, "tf", "instance"),
                         static_cast<int>(require_number(section, "n_cells", "instance")));
    opts.delta = require_number(section, "delta", "instance");
    opts.eps = require_number(section, "eps", "instance");
    const int d = opts.nx - 1;
    if (section.contains("ybar")) opts.ybar = parse_profile(section["ybar"], d, "instance.ybar");
    if (section.contains("yhat")) {
      const Eigen::VectorXd profile = parse_profile(section["yhat"], d, "instance.yhat");
      opts.yhat_nodes.assign(static_cast<std::size_t>(opts.grid.n_nodes()), profile);
    }
    if (section.contains("ball")) {
      const json& ball = section["ball"];
      check_keys(ball, {"ybar_radius", "eps_radius", "yhat_radius"}, "instance.ball");
      opts.ybar_radius = number_or(ball, "ybar_radius", 0.0);
      opts.eps_radius = number_or(ball, "eps_radius", 0.0);
      opts.yhat_radius = number_or(ball, "yhat_radius", 0.0);
    }
    return make_heat_actuator(opts);
  }
  if (kind == "custom-linear") {
    CustomLinearOptions opts;
    if (!section.contains("a"))
      throw ValidationError("config: custom-linear needs the generator matrix 'a'");
    const json& a = section["a"];
    const int d = static_cast<int>(a.size());
    opts.a_matrix.resize(d, d);
    for (int i = 0; i < d; ++i) {
      const Eigen::VectorXd row = parse_vector(a[static_cast<std::size_t>(i)], "instance.a");
      if (row.size() != d) throw ValidationError("config: 'a' must be square");
      opts.a_matrix.row(i) = row.transpose();
    }
    opts.grid = TimeGrid(number_or(section, "t0", 0.0), require_number(section, "tf", "instance"),
                         static_cast<int>(require_number(section, "n_cells", "instance")));
    opts.n_modes = static_cast<int>(number_or(section, "n_modes", 1));
    opts.control_dim = static_cast<int>(number_or(section, "control_dim", 0));
    if (section.contains("input")) {
      for (const auto& per_mode : section["input"]) {
        Eigen::MatrixXd dm(d, opts.control_dim);
        if (static_cast<int>(per_mode.size()) != d)
          throw ValidationError("config: 'input' matrices must have one row per state entry");
        for (int i = 0; i < d; ++i)
          dm.row(i) = parse_vector(per_mode[static_cast<std::size_t>(i)], "instance.input")
                          .transpose();
        opts.input.push_back(dm);
      }
    }
    if (section.contains("drift"))
      for (const auto& per_mode : section["drift"])
        opts.drift.push_back(parse_vector(per_mode, "instance.drift"));
    if (section.contains("box")) {
      const json& box = section["box"];
      check_keys(box, {"lower", "upper"}, "instance.box");
      opts.box_lower = require_number(box, "lower", "instance.box");
      opts.box_upper = require_number(box, "upper", "instance.box");
    }
    opts.ball_radius = number_or(section, "ball_radius", 1.0);
    return make_custom_linear(opts);
  }
  throw ValidationError("config: unknown instance kind '" + kind +
                        "' (expected example1, heat or custom-linear)");
}

InnerSolveSettings parse_solver(const json& experiment) {
  InnerSolveSettings settings;
  if (!experiment.contains("solver")) return settings;
  const json& s = experiment["solver"];
  check_keys(s, {"max_iters", "grad_tol", "armijo_c1", "backtrack", "feas_tol"},
             "experiment.solver");
  settings.max_iters = static_cast<int>(number_or(s, "max_iters", settings.max_iters));
  settings.grad_tol = number_or(s, "grad_tol", settings.grad_tol);
  settings.armijo_c1 = number_or(s, "armijo_c1", settings.armijo_c1);
  settings.backtrack = number_or(s, "backtrack", settings.backtrack);
  settings.feas_tol = number_or(s, "feas_tol", settings.feas_tol);
  settings.validate();
  return settings;
}

EnumerationCaps parse_enumeration(const json& experiment) {
  EnumerationCaps caps;
  if (!experiment.contains("enumeration")) return caps;
  const json& e = experiment["enumeration"];
  check_keys(e, {"max_switches", "min_dwell_cells", "budget"}, "experiment.enumeration");
  if (e.contains("max_switches")) caps.max_switches = e["max_switches"].get<int>();
  if (e.contains("min_dwell_cells")) caps.min_dwell_cells = e["min_dwell_cells"].get<int>();
  if (e.contains("budget")) caps.budget = e["budget"].get<std::int64_t>();
  return caps;
}

std::vector<Parameter> parse_lambda_samples(const json& experiment,
                                            const ParametricInstance& inst,
                                            const std::string& command) {
  const auto space = inst.space;
  if (!experiment.contains("lambda")) {
    if (command == "cq") return sample_ball_deterministic(space, 64);
    throw ValidationError("config: experiment.lambda is required for '" + command + "'");
  }
  const json& spec = experiment["lambda"];
  check_keys(spec, {"values", "range", "count", "offsets", "low_discrepancy"},
             "experiment.lambda");
  std::vector<Parameter> out;
  if (spec.contains("values")) {
    for (const auto& item : spec["values"]) {
      Eigen::VectorXd stacked;
      if (item.is_number()) {
        if (space->total_dim() != 1)
          throw ValidationError("config: scalar lambda values need a one-dimensional "
                                "parameter space");
        stacked = Eigen::VectorXd::Constant(1, item.get<double>());
      } else {
        stacked = parse_vector(item, "experiment.lambda.values");
      }
      out.push_back(Parameter{space, stacked});
    }
    return out;
  }
  if (spec.contains("range")) {
    if (space->total_dim() != 1)
      throw ValidationError("config: lambda ranges need a one-dimensional parameter space");
    const Eigen::VectorXd range = parse_vector(spec["range"], "experiment.lambda.range");
    if (range.size() != 2) throw ValidationError("config: lambda range must be [lo, hi]");
    const int count = static_cast<int>(number_or(spec, "count", 21));
    if (count < 2) throw ValidationError("config: lambda range needs count >= 2");
    for (int i = 0; i < count; ++i) {
      const double s = range(0) + (range(1) - range(0)) * i / (count - 1);
      out.push_back(Parameter{space, Eigen::VectorXd::Constant(1, s)});
    }
    return out;
  }
  if (spec.contains("offsets")) {
    for (const auto& item : spec["offsets"]) {
      const Eigen::VectorXd offset = parse_vector(item, "experiment.lambda.offsets");
      if (offset.size() != space->total_dim())
        throw ValidationError("config: lambda offset has wrong dimension");
      out.push_back(Parameter{space, space->center() + offset});
    }
    return out;
  }
  if (spec.contains("count"))
    return sample_ball_fixed_count(space, static_cast<int>(spec["count"].get<double>()));
  if (spec.contains("low_discrepancy"))
    return sample_ball_deterministic(space, static_cast<int>(spec["low_discrepancy"].get<double>()));
  throw ValidationError("config: experiment.lambda needs values, range, offsets or count");
}

std::vector<std::string> lambda_header(const ParameterSpace& space) {
  std::vector<std::string> cols;
  for (const auto& comp : space.components()) {
    if (comp.dim == 1) {
      cols.push_back(comp.name);
    } else {
      for (int k = 0; k < comp.dim; ++k) cols.push_back(comp.name + "_" + std::to_string(k));
    }
  }
  return cols;
}

std::vector<std::string> lambda_cells(const Parameter& lambda) {
  std::vector<std::string> cells;
  for (Eigen::Index i = 0; i < lambda.stacked.size(); ++i)
    cells.push_back(format_double(lambda.stacked(i)));
  return cells;
}

struct OutputContext {
  std::filesystem::path dir;
  std::string stamp;       // "miocp <version> config=<hash>"
  std::string config_hash;
  bool quiet = false;
};

void write_report(const OutputContext& ctx, json report) {
  report["version"] = kVersion;
  report["config_hash"] = ctx.config_hash;
  write_text_file((ctx.dir / "report.json").string(), report.dump(2) + "\n");
}

void summarize(const OutputContext& ctx, const ValueSample& sample) {
  if (ctx.quiet) return;
  std::printf("%s: lambda=%s nu=%.6f v=%s iters=%d status=%s\n", "sample",
              sample.lambda.brief().c_str(), sample.value, sample.best_v.encode().c_str(),
              sample.inner_iterations, sample.status.c_str());
}

void write_samples_csv(const OutputContext& ctx, const SweepResult& result) {
  std::vector<std::string> header{"index"};
  const auto lam_cols = lambda_header(*result.samples.front().lambda.space);
  header.insert(header.end(), lam_cols.begin(), lam_cols.end());
  header.insert(header.end(), {"nu", "best_v", "inner_iterations", "status"});
  CsvWriter csv(ctx.stamp, header);
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    const auto& s = result.samples[i];
    std::vector<std::string> row{std::to_string(i)};
    const auto lam = lambda_cells(s.lambda);
    row.insert(row.end(), lam.begin(), lam.end());
    row.push_back(format_double(s.value));
    row.push_back(s.best_v.encode());
    row.push_back(std::to_string(s.inner_iterations));
    row.push_back(s.status);
    csv.add_row(row);
  }
  write_text_file((ctx.dir / "samples.csv").string(), csv.str());
}

json hat_json(const HatLReport& hat) {
  return json{{"value", hat.value},          {"lphi", hat.lphi},
              {"l0", hat.l0},                {"c_tf", hat.c_tf},
              {"gamma", hat.gamma},          {"w0", hat.w0},
              {"apriori_radius", hat.apriori_radius}, {"k_sup_y0", hat.k_sup_y0}};
}

json tilde_json(const TildeCReport& tilde) {
  return json{{"value", tilde.value},
              {"lphi_sup", tilde.lphi_sup},
              {"constraint_term", tilde.constraint_term},
              {"mass_bound", tilde.mass_bound},
              {"lg_sup", tilde.lg_sup},
              {"diameter_term", tilde.diameter_term},
              {"surrogate_size", tilde.surrogate_size}};
}

int run_lipschitz(const OutputContext& ctx, const ParametricInstance& inst,
                  const std::vector<Parameter>& lambdas, const SweepSettings& sweep_settings,
                  const EnumerationCaps& caps) {
  const SweepResult result = sweep(inst, lambdas, sweep_settings);
  for (const auto& s : result.samples) summarize(ctx, s);
  write_samples_csv(ctx, result);

  LipschitzReport report;
  report.empirical = empirical_lipschitz(result);

  double min_pair_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    for (std::size_t j = i + 1; j < lambdas.size(); ++j) {
      const double dist = inst.space->distance(lambdas[i].stacked, lambdas[j].stacked);
      if (dist > 1e-14) min_pair_dist = std::min(min_pair_dist, dist);
    }
  constexpr double kValueTolerance = 1e-8;  // solver value accuracy budget
  report.slack = 2.0 * kValueTolerance / min_pair_dist;

  double theoretical = 0.0;
  if (inst.lambda_independent_constraints) {
    report.scope = "initial-data";
    report.hat = theoretical_hat_L(inst, TheoremScope::InitialData);
    theoretical = report.hat->value;
  } else {
    const std::vector<Parameter> cq_samples = sample_ball_deterministic(inst.space, 64);
    const CqReport cq = cq_check(inst, cq_samples, caps);
    if (!cq.passed)
      throw NumericalError("lipschitz: the constraint qualification fails on this instance; "
                           "no theoretical constant applies");
    const ModeEnumerator enumerator(inst.grid, inst.n_modes, caps);
    const double mass_bound =
        multiplier_mass_bound(inst, cq_samples, enumerator.paths(), cq.omega, cq.alpha_lower);
    const TildeCReport tilde = theoretical_tilde_C(inst, result, mass_bound, lambdas);
    report.tilde = tilde;
    if (inst.lambda_independent_y0) {
      report.scope = "constraints";
      theoretical = tilde.value;
    } else {
      report.scope = "joint";
      report.hat = theoretical_hat_L(inst, TheoremScope::Joint);
      report.combined = combined_L(*report.hat, tilde);
      theoretical = *report.combined;
    }
  }
  report.pass = report.empirical.constant <= theoretical + report.slack;

  json j{{"command", "lipschitz"},
         {"scope", report.scope},
         {"empirical", {{"constant", report.empirical.constant},
                        {"witness_i", report.empirical.witness_i},
                        {"witness_j", report.empirical.witness_j}}},
         {"slack", report.slack},
         {"theoretical", theoretical},
         {"pass", report.pass}};
  if (report.hat) j["hat_L"] = hat_json(*report.hat);
  if (report.tilde) j["tilde_C"] = tilde_json(*report.tilde);
  if (report.combined) j["combined_L"] = *report.combined;
  write_report(ctx, j);
  if (!ctx.quiet)
    std::printf("lipschitz[%s]: empirical=%.6f theoretical=%.6f pass=%s\n",
                report.scope.c_str(), report.empirical.constant, theoretical,
                report.pass ? "true" : "false");
  return 0;
}

int run_duality(const OutputContext& ctx, const ParametricInstance& inst,
                const std::vector<Parameter>& lambdas, const json& experiment,
                const SolveValueSettings& solve_settings, unsigned jobs) {
  std::vector<int> levels{100, 400, 1600};
  DualAscentSettings ascent;
  if (experiment.contains("ascent")) {
    const json& a = experiment["ascent"];
    check_keys(a, {"iterations", "step_scale", "inner_iters"}, "experiment.ascent");
    if (a.contains("iterations")) {
      levels.clear();
      for (const auto& it : a["iterations"]) levels.push_back(it.get<int>());
      if (levels.empty()) throw ValidationError("config: ascent.iterations must be non-empty");
    }
    ascent.step_scale = number_or(a, "step_scale", 0.0);
    ascent.inner.max_iters = static_cast<int>(number_or(a, "inner_iters", 300));
  }

  const ModeEnumerator enumerator(inst.grid, inst.n_modes, solve_settings.caps);
  const auto& paths = enumerator.paths();

  std::vector<std::string> header{"index"};
  const auto lam_cols = lambda_header(*inst.space);
  header.insert(header.end(), lam_cols.begin(), lam_cols.end());
  header.insert(header.end(), {"nu", "delta_hat", "gap", "rel_gap"});
  CsvWriter csv(ctx.stamp, header);

  json per_lambda = json::array();
  double worst_weak_duality = -std::numeric_limits<double>::infinity();
  double max_mass = 0.0;
  bool gaps_monotone = true;

  double mass_bound = 0.0;
  if (inst.n_constraints > 0 && inst.cq) {
    const std::vector<Parameter> cq_samples = sample_ball_deterministic(inst.space, 64);
    const CqReport cq = cq_check(inst, cq_samples, solve_settings.caps);
    if (cq.passed)
      mass_bound =
          multiplier_mass_bound(inst, cq_samples, paths, cq.omega, cq.alpha_lower);
  }

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    const Parameter& lambda = lambdas[li];
    const ValueSample primal = solve_value(inst, lambda, solve_settings);

    // Per-mode ascents, warm-started across refinement levels.
    std::vector<MultiplierMeasure> mode_mu(paths.size());
    std::vector<double> mode_value(paths.size());
    std::vector<double> level_delta;
    for (std::size_t level = 0; level < levels.size(); ++level) {
      std::vector<double> values(paths.size());
      parallel_for(paths.size(), jobs, [&](std::size_t p) {
        DualAscentSettings local = ascent;
        local.iterations = levels[level];
        const DualAscentResult r = dual_ascent(inst, lambda, paths[p], local,
                                               level == 0 ? nullptr : &mode_mu[p]);
        mode_mu[p] = r.best_mu;
        values[p] = r.best_value;
        mode_value[p] = r.best_value;
      });
      const DualValueResult delta =
          dual_value(values, std::vector<bool>(values.size(), false));
      level_delta.push_back(delta.value);
    }
    for (std::size_t level = 1; level < level_delta.size(); ++level)
      if (level_delta[level] < level_delta[level - 1] - 1e-12) gaps_monotone = false;

    const double delta_hat = level_delta.back();
    const double gap = primal.value - delta_hat;
    const double rel_gap = std::abs(primal.value) > 0 ? gap / std::abs(primal.value) : gap;
    worst_weak_duality = std::max(worst_weak_duality, delta_hat - primal.value);
    for (const auto& mu : mode_mu) max_mass = std::max(max_mass, mu.total_mass());

    std::vector<std::string> row{std::to_string(li)};
    const auto lam = lambda_cells(lambda);
    row.insert(row.end(), lam.begin(), lam.end());
    row.push_back(format_double(primal.value));
    row.push_back(format_double(delta_hat));
    row.push_back(format_double(gap));
    row.push_back(format_double(rel_gap));
    csv.add_row(row);

    json levels_json = json::array();
    for (std::size_t level = 0; level < levels.size(); ++level) {
      const double level_gap = primal.value - level_delta[level];
      levels_json.push_back(json{{"iterations", levels[level]},
                                 {"delta_hat", level_delta[level]},
                                 {"rel_gap", std::abs(primal.value) > 0
                                                 ? level_gap / std::abs(primal.value)
                                                 : level_gap}});
    }
    per_lambda.push_back(json{{"nu", primal.value},
                              {"delta_hat", delta_hat},
                              {"rel_gap", rel_gap},
                              {"levels", levels_json}});
    if (!ctx.quiet)
      std::printf("duality: lambda=%s nu=%.6f delta=%.6f rel_gap=%.3e\n",
                  lambda.brief().c_str(), primal.value, delta_hat, rel_gap);
  }

  write_text_file((ctx.dir / "samples.csv").string(), csv.str());
  write_report(ctx, json{{"command", "duality"},
                         {"levels", levels},
                         {"per_lambda", per_lambda},
                         {"gaps_monotone", gaps_monotone},
                         {"max_weak_duality_violation", worst_weak_duality},
                         {"mass_bound", mass_bound},
                         {"max_multiplier_mass", max_mass}});
  return 0;
}

int dispatch(const json& config, const CliOverrides& overrides, const OutputContext& ctx) {
  check_keys(config, {"seed", "instance", "experiment"}, "top level");
  if (!config.contains("instance") || !config.contains("experiment"))
    throw ValidationError("config: 'instance' and 'experiment' sections are required");
  const json& experiment = config["experiment"];
  check_keys(experiment, {"command", "lambda", "solver", "enumeration", "ascent", "out"},
             "experiment");

  std::string command = overrides.command.value_or(experiment.value("command", ""));
  if (command.empty()) throw ValidationError("config: no command given");

  const ParametricInstance inst = build_instance(config["instance"]);
  const unsigned jobs = overrides.jobs.value_or(default_jobs());

  SolveValueSettings solve_settings;
  solve_settings.inner = parse_solver(experiment);
  solve_settings.caps = parse_enumeration(experiment);
  solve_settings.jobs = jobs;
  SweepSettings sweep_settings;
  sweep_settings.solve = solve_settings;
  sweep_settings.jobs = jobs;

  if (command == "solve") {
    const auto lambdas = parse_lambda_samples(experiment, inst, command);
    if (lambdas.size() != 1)
      throw ValidationError("config: 'solve' expects exactly one lambda sample");
    const SweepResult result = sweep(inst, lambdas, sweep_settings);
    summarize(ctx, result.samples.front());
    write_samples_csv(ctx, result);
    write_report(ctx, json{{"command", "solve"},
                           {"nu", result.samples.front().value},
                           {"best_v", result.samples.front().best_v.encode()},
                           {"status", result.samples.front().status}});
    return 0;
  }
  if (command == "sweep") {
    const auto lambdas = parse_lambda_samples(experiment, inst, command);
    const SweepResult result = sweep(inst, lambdas, sweep_settings);
    for (const auto& s : result.samples) summarize(ctx, s);
    write_samples_csv(ctx, result);
    double lo = result.samples.front().value, hi = lo;
    for (const auto& s : result.samples) {
      lo = std::min(lo, s.value);
      hi = std::max(hi, s.value);
    }
    write_report(ctx, json{{"command", "sweep"},
                           {"n_samples", result.samples.size()},
                           {"nu_min", lo},
                           {"nu_max", hi}});
    return 0;
  }
  if (command == "lipschitz") {
    const auto lambdas = parse_lambda_samples(experiment, inst, command);
    return run_lipschitz(ctx, inst, lambdas, sweep_settings, solve_settings.caps);
  }
  if (command == "duality") {
    const auto lambdas = parse_lambda_samples(experiment, inst, command);
    return run_duality(ctx, inst, lambdas, experiment, solve_settings, jobs);
  }
  if (command == "cq") {
    const auto lambdas = parse_lambda_samples(experiment, inst, command);
    const CqReport report = cq_check(inst, lambdas, solve_settings.caps);
    json j{{"command", "cq"},
           {"passed", report.passed},
           {"no_constraints", report.no_constraints},
           {"omega", report.omega},
           {"sup_phi_slater", report.sup_phi_slater},
           {"alpha_lower", report.alpha_lower},
           {"alpha_confirmed", report.alpha_confirmed},
           {"surrogate_bounded", report.surrogate_bounded},
           {"n_lambda_samples", report.n_lambda_samples},
           {"n_modes_checked", report.n_modes_checked}};
    if (!report.passed && !report.no_constraints)
      j["worst"] = json{{"mode_index", report.worst.mode_index},
                        {"constraint", report.worst.constraint},
                        {"time", report.worst.time},
                        {"margin", report.worst.margin},
                        {"lambda", report.worst.lambda_brief}};
    write_report(ctx, j);
    if (!ctx.quiet)
      std::printf("cq: passed=%s omega=%.6g alpha_lower=%.6g\n",
                  report.passed ? "true" : "false", report.omega, report.alpha_lower);
    return 0;
  }
  if (command == "kink") {
    if (!experiment.contains("lambda"))
      throw ValidationError("config: 'kink' needs experiment.lambda with component and range");
    const json& spec = experiment["lambda"];
    check_keys(spec, {"component", "range", "count"}, "experiment.lambda");
    const std::string component = spec.value("component", "");
    const int comp_index = inst.space->find(component);
    if (comp_index < 0)
      throw ValidationError("config: kink component '" + component + "' not found");
    if (inst.space->components()[static_cast<std::size_t>(comp_index)].dim != 1)
      throw ValidationError("config: kink scans need a scalar component");
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(inst.space->total_dim());
    direction(inst.space->component_offset(comp_index)) = 1.0;
    const Eigen::VectorXd range = parse_vector(spec["range"], "experiment.lambda.range");
    if (range.size() != 2) throw ValidationError("config: kink range must be [lo, hi]");
    const int count = static_cast<int>(number_or(spec, "count", 41));

    const KinkScan scan = kink_scan(inst, direction, range(0), range(1), count, solve_settings);
    CsvWriter csv(ctx.stamp, {"s", "left_slope", "right_slope", "jump", "flagged"});
    json flagged = json::array();
    for (const auto& point : scan.points) {
      csv.add_row({format_double(point.lambda), format_double(point.left_slope),
                   format_double(point.right_slope), format_double(point.jump),
                   point.flagged ? "1" : "0"});
      if (point.flagged)
        flagged.push_back(json{{"s", point.lambda},
                               {"left_slope", point.left_slope},
                               {"right_slope", point.right_slope}});
    }
    write_text_file((ctx.dir / "samples.csv").string(), csv.str());
    write_report(ctx, json{{"command", "kink"},
                           {"component", component},
                           {"noise_floor", scan.noise_floor},
                           {"n_points", static_cast<int>(scan.points.size())},
                           {"flagged", flagged}});
    if (!ctx.quiet)
      std::printf("kink: %zu interior points, %zu flagged\n", scan.points.size(),
                  flagged.size());
    return 0;
  }
  throw ValidationError("config: unknown command '" + command +
                        "' (expected solve, sweep, lipschitz, duality, cq or kink)");
}

}  // namespace

int run_from_text(const std::string& config_text, const CliOverrides& overrides) {
  const auto start = std::chrono::steady_clock::now();
  try {
    json config;
    try {
      config = json::parse(config_text);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config: parse error: ") + e.what());
    }

    OutputContext ctx;
    ctx.config_hash = fnv1a_hex(config_text);
    ctx.stamp = std::string("miocp ") + kVersion + " config=" + ctx.config_hash;
    ctx.quiet = overrides.quiet;
    std::string out_dir = "out";
    if (config.contains("experiment") && config["experiment"].contains("out"))
      out_dir = config["experiment"]["out"].get<std::string>();
    if (overrides.out_dir) out_dir = *overrides.out_dir;
    ctx.dir = out_dir;
    std::error_code ec;
    std::filesystem::create_directories(ctx.dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + out_dir + "'");

    const int code = dispatch(config, overrides, ctx);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto now = std::chrono::system_clock::now();
    const std::time_t now_t = std::chrono::system_clock::to_time_t(now);
    char timestamp[32];
    std::strftime(timestamp, sizeof(timestamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now_t));
    json meta{{"version", kVersion},
              {"config_hash", ctx.config_hash},
              {"seed", config.value("seed", 1)},
              {"timestamp_utc", timestamp},
              {"total_seconds", seconds},
              {"jobs", overrides.jobs.value_or(default_jobs())}};
    write_text_file((ctx.dir / "meta.json").string(), meta.dump(2) + "\n");
    return code;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
}

int run(const std::string& config_path, const CliOverrides& overrides) {
  std::string text;
  try {
    text = read_text_file(config_path);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  }
  return run_from_text(text, overrides);
}

}  // namespace miocp
