#pragma once

#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "birkhoff/analysis.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/regularity.hpp"

namespace birkhoff::cli {

using io::Json;

inline constexpr const char* kToolName = "birkhoff";
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kSpecError = 2, kNumericalFailure = 3 };

/// Every tunable of a run; defaults live here only.
struct RunConfig {
  std::string command;
  std::string spec_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0x5EED;
  double theta_tol = 1e-9;
  double root_tol = 1e-9;
  double merge_tol = 1e-6;
  /// Subsector half-width; unset means pi / (4n).
  std::optional<double> epsilon;
  double delta = 0.05;
  double r_min = 1.0;
  double r_max = 50.0;
  /// Point of evaluation for `green`; unset means 20 on the S_0 bisector.
  std::optional<Complex> rho;
  int grid = 11;
  int nu = 0;
  std::vector<double> radii{20.0, 40.0, 80.0, 160.0};
  /// Number of eigenvalues for `projectors` and `expand`.
  int count = 10;
  bool paired = false;
  std::string input_function = "poly";
  /// Polynomial coefficients (ascending) or uniform samples of f on [0, 1].
  std::vector<Complex> values{0.0, 1.0, -1.0};
};

inline Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["spec"] = c.spec_path;
  j["format"] = c.format;
  j["seed"] = c.seed;
  j["theta_tol"] = c.theta_tol;
  j["root_tol"] = c.root_tol;
  j["merge_tol"] = c.merge_tol;
  j["epsilon"] = c.epsilon ? Json(*c.epsilon) : Json("pi/(4n)");
  j["delta"] = c.delta;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["rho"] = c.rho ? io::to_json(*c.rho) : Json("20 on the S_0 bisector");
  j["grid"] = c.grid;
  j["nu"] = c.nu;
  j["radii"] = c.radii;
  j["count"] = c.count;
  j["paired"] = c.paired;
  j["input_function"] = c.input_function;
  j["values"] = io::to_json(c.values);
  return j;
}

inline void validate(const RunConfig& c, int n) {
  if (!(c.theta_tol > 0.0)) throw spec_error("must be positive", "theta_tol");
  if (!(c.root_tol > 0.0)) throw spec_error("must be positive", "root_tol");
  if (!(c.merge_tol > 0.0)) throw spec_error("must be positive", "merge_tol");
  if (c.epsilon && !(*c.epsilon > 0.0 && *c.epsilon < kPi / (2.0 * n)))
    throw spec_error("must lie in (0, pi/(2n))", "epsilon");
  if (!(c.delta > 0.0 && c.delta < 1.0 / 3.0)) throw spec_error("must lie in (0, 1/3)", "delta");
  if (!(c.r_min > 0.0 && c.r_max > c.r_min)) throw spec_error("need 0 < r_min < r_max", "r_max");
  if (c.grid < 2) throw spec_error("must be at least 2", "grid");
  if (c.nu < 0 || c.nu > 1) throw spec_error("must be 0 or 1", "nu");
  if (c.count < 1) throw spec_error("must be positive", "count");
  if (c.format != "json" && c.format != "csv") throw spec_error("must be json or csv", "format");
  if (c.input_function != "poly" && c.input_function != "samples")
    throw spec_error("must be poly or samples", "input_function");
  if (c.input_function == "samples" && c.values.size() < 2)
    throw spec_error("sample table needs at least 2 values", "values");
}

/// Result of one run: a JSON document, its CSV rendering when one exists,
/// and the process exit code.
struct Outcome {
  Json document;
  std::string csv;
  int exit_code = kOk;
};

// JSON has no infinities; they are written as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string csv_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Sub-reports

inline Json regularity_json(const BvpSpec& spec, const NormalizedBoundaryConditions& nbc,
                            const RegularityReport& r) {
  Json j;
  j["label"] = spec.label;
  j["order"] = nbc.order();
  j["class"] = short_name(r.klass);
  j["theta"] = io::to_json(std::vector<Complex>{r.theta0, r.theta1});
  j["ranks"] = nbc.ranks();
  if (r.f_coeffs) j["f_coefficients"] = io::to_json(std::vector<Complex>(r.f_coeffs->begin(), r.f_coeffs->end()));
  j["f_roots"] = io::to_json(r.f_roots);
  return j;
}

inline Json spectrum_json(const Spectrum& s) {
  Json cvs = Json::array();
  for (const auto& cv : s.cvs)
    cvs.push_back({{"rho", io::to_json(cv.rho)},
                   {"lambda", io::to_json(cv.lambda)},
                   {"multiplicity", cv.multiplicity},
                   {"residual", cv.residual},
                   {"sector", cv.sector}});
  return {{"r_min", s.r_min}, {"r_max", s.r_max}, {"count", s.cvs.size()},
          {"max_residual", s.max_residual}, {"cvs", std::move(cvs)}, {"flags", s.flags}};
}

inline std::string spectrum_csv(const Spectrum& s) {
  std::string out = "rho_re,rho_im,lambda_re,lambda_im,multiplicity,residual,sector\n";
  for (const auto& cv : s.cvs)
    out += csv_number(cv.rho.real()) + "," + csv_number(cv.rho.imag()) + "," + csv_number(cv.lambda.real()) +
           "," + csv_number(cv.lambda.imag()) + "," + std::to_string(cv.multiplicity) + "," +
           csv_number(cv.residual) + "," + std::to_string(cv.sector) + "\n";
  return out;
}

inline Json convergence_json(const ConvergenceReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"rho", io::to_json(s.rho)},
                       {"a_error", s.a_error},
                       {"delta_error", s.delta_error},
                       {"min_singular", s.min_singular},
                       {"frobenius", s.frobenius}});
  return {{"a_inf", io::to_json(r.a_inf)}, {"fitted_exponent", r.fitted_exponent}, {"samples", std::move(samples)}};
}

inline Json projector_json(const ProjectorRecord& p) {
  return {{"m", p.m},           {"lambda", io::to_json(p.lambda)}, {"rho", io::to_json(p.rho)},
          {"radius", p.radius}, {"rank", p.rank},                  {"trace", io::to_json(p.trace)},
          {"norm", p.norm},     {"ratio", p.ratio},                {"idempotency", p.idempotency}};
}

inline Json sparseness_json(const SparsenessReport& r, const SectorGeometry& g) {
  return {{"epsilon", g.epsilon}, {"delta", g.delta},          {"bound", r.bound},
          {"max_count", r.max_count}, {"violation", r.violation}, {"centers", r.entries.size()}};
}

inline SearchOptions search_options(const RunConfig& c) {
  SearchOptions o;
  o.r_min = c.r_min;
  o.r_max = c.r_max;
  o.merge_tol = c.merge_tol;
  return o;
}

inline std::function<Complex(double)> input_function(const RunConfig& c) {
  const Coefficient f = c.input_function == "poly" ? Coefficient::poly(c.values) : Coefficient::samples(c.values);
  return [f](double x) { return f(x); };
}

/// Projectors for the first `count` cvs, each on a circle of half the
/// distance to its nearest neighbour.
inline std::vector<ProjectorRecord> first_projectors(const NormalizedBoundaryConditions& nbc,
                                                     const DifferentialExpression& expr,
                                                     const Spectrum& s, int count) {
  std::vector<Complex> lambdas;
  for (const auto& cv : s.cvs) lambdas.push_back(cv.lambda);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(count), s.cvs.size());
  std::vector<ProjectorRecord> out(k);
  parallel_for(k, [&](std::size_t i) {
    const auto& cv = s.cvs[i];
    out[i] = projector(nbc, expr, cv.lambda, projector_radius(cv.lambda, lambdas), {}, cv.multiplicity);
    out[i].m = static_cast<int>(i + 1);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Commands

inline Outcome run_classify(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const auto r = classify(nbc, c.theta_tol, c.root_tol);
  Outcome o;
  o.document = regularity_json(spec, nbc, r);
  o.csv = "label,class,theta0_re,theta0_im,theta1_re,theta1_im\n" + spec.label + "," + short_name(r.klass) + "," +
          csv_number(r.theta0.real()) + "," + csv_number(r.theta0.imag()) + "," + csv_number(r.theta1.real()) +
          "," + csv_number(r.theta1.imag()) + "\n";
  return o;
}

inline Outcome run_spectrum(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const auto s = find_cvs(nbc, spec.expression, search_options(c));
  Outcome o;
  o.document = spectrum_json(s);
  o.csv = spectrum_csv(s);
  if (!s.flags.empty()) o.exit_code = kNumericalFailure;
  return o;
}

inline Outcome run_green(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const int n = spec.expression.order();
  const Complex rho = c.rho.value_or(20.0 * sector_bisector(n, 0));
  GreenFunction g(spec.expression, nbc, rho, sector_of(rho, n));
  std::vector<double> xs;
  for (int i = 0; i < c.grid; ++i) xs.push_back(static_cast<double>(i) / (c.grid - 1));
  const CMatrix k = g.kernel(xs, xs);
  double diff = 0.0;
  for (int i = 0; i < c.grid; ++i)
    for (int j = 0; j < c.grid; ++j)
      diff = std::max(diff, std::abs(g.determinant_form(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]) - k(i, j)));
  Outcome o;
  o.document = {{"rho", io::to_json(rho)},
                {"lambda", io::to_json(g.lambda())},
                {"x", xs},
                {"kernel", io::to_json(k)},
                {"form_difference", diff},
                {"mcm", io::to_json(g.modified_matrix().matrix)}};
  o.csv = "x,xi,re,im\n";
  for (int i = 0; i < c.grid; ++i)
    for (int j = 0; j < c.grid; ++j)
      o.csv += csv_number(xs[static_cast<std::size_t>(i)]) + "," + csv_number(xs[static_cast<std::size_t>(j)]) + "," +
               csv_number(k(i, j).real()) + "," + csv_number(k(i, j).imag()) + "\n";
  return o;
}

inline Outcome run_mcm_limit(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const int n = spec.expression.order();
  std::vector<Complex> probes;
  for (double r : c.radii) probes.push_back(r * sector_bisector(n, c.nu));
  const auto rep = verify_theorem2(nbc, spec.expression, c.nu, probes);
  Outcome o;
  o.document = convergence_json(rep);
  o.csv = "rho_re,rho_im,a_error,delta_error,min_singular,frobenius\n";
  for (const auto& s : rep.samples)
    o.csv += csv_number(s.rho.real()) + "," + csv_number(s.rho.imag()) + "," + csv_number(s.a_error) + "," +
             csv_number(s.delta_error) + "," + csv_number(s.min_singular) + "," + csv_number(s.frobenius) + "\n";
  return o;
}

inline Outcome run_projectors(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const auto s = spectrum_with_at_least(nbc, spec.expression, c.count, search_options(c));
  const auto recs = first_projectors(nbc, spec.expression, s, c.count);
  Outcome o;
  o.document = Json::array();
  o.csv = "m,lambda_re,lambda_im,rank,norm,ratio,idempotency\n";
  for (const auto& p : recs) {
    o.document.push_back(projector_json(p));
    o.csv += std::to_string(p.m) + "," + csv_number(p.lambda.real()) + "," + csv_number(p.lambda.imag()) + "," +
             std::to_string(p.rank) + "," + csv_number(p.norm) + "," + csv_number(p.ratio) + "," +
             csv_number(p.idempotency) + "\n";
  }
  if (!s.flags.empty()) o.exit_code = kNumericalFailure;
  return o;
}

inline Outcome run_expand(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  ExpansionOptions opt;
  opt.k = c.count;
  opt.paired = c.paired;
  opt.search = search_options(c);
  const auto rep = expansion_experiment(nbc, spec.expression, input_function(c), opt);
  Outcome o;
  Json groups = Json::array();
  for (const auto& g : rep.groups) groups.push_back(g);
  Json gram = Json::array(), errors = Json::array();
  for (double v : rep.gram_condition) gram.push_back(number(v));
  for (double v : rep.partial_sum_errors) errors.push_back(number(v));
  o.document = {{"paired", rep.paired},
                {"functions", rep.functions},
                {"spectrum", spectrum_json(Spectrum{rep.cvs, c.r_min, 0.0, 0.0, {}})},
                {"groups", std::move(groups)},
                {"partial_sum_errors", std::move(errors)},
                {"partial_sum_functions", rep.partial_sum_functions},
                {"gram_condition", std::move(gram)},
                {"flags", rep.flags}};
  // One row per function count k; the partial-sum error is filled in where
  // a projector sum ends (every row unpaired, group ends when paired).
  o.csv = "k,gram_condition,partial_sum_error\n";
  std::map<int, double> error_at;
  for (std::size_t i = 0; i < rep.partial_sum_errors.size(); ++i)
    error_at[rep.partial_sum_functions[i]] = rep.partial_sum_errors[i];
  for (std::size_t i = 0; i < rep.gram_condition.size(); ++i) {
    const auto it = error_at.find(static_cast<int>(i + 1));
    o.csv += std::to_string(i + 1) + "," + csv_number(rep.gram_condition[i]) + "," +
             (it != error_at.end() ? csv_number(it->second) : "") + "\n";
  }
  if (!rep.flags.empty()) o.exit_code = kNumericalFailure;
  return o;
}

/// One document with classification, spectrum, limit convergence,
/// sparseness and projector scaling. Contains no timings, so equal inputs
/// give byte-identical output.
inline Outcome run_report(const RunConfig& c, const BvpSpec& spec, const NormalizedBoundaryConditions& nbc) {
  const int n = spec.expression.order();
  Outcome o;
  Json& d = o.document;
  d["tool"] = {{"name", kToolName}, {"version", kVersion}};
  d["seed"] = c.seed;
  d["spec"] = io::to_json(spec);
  Json cfg = to_json(c);
  cfg.erase("spec");
  d["config"] = std::move(cfg);

  const auto reg = classify(nbc, c.theta_tol, c.root_tol);
  d["regularity"] = regularity_json(spec, nbc, reg);

  const auto s = find_cvs(nbc, spec.expression, search_options(c));
  Json sj = spectrum_json(s);
  int multiple = 0;
  for (const auto& cv : s.cvs) multiple += cv.multiplicity > 1 ? 1 : 0;
  sj["multiple_values"] = multiple;
  d["spectrum"] = std::move(sj);
  if (!s.flags.empty()) o.exit_code = kNumericalFailure;

  if (reg.klass == RegularityClass::Irregular) {
    d["theorem2"] = {{"skipped", "irregular boundary conditions"}};
  } else {
    std::vector<Complex> probes;
    for (double r : c.radii) probes.push_back(r * sector_bisector(n, c.nu));
    d["theorem2"] = convergence_json(verify_theorem2(nbc, spec.expression, c.nu, probes));
  }

  const auto geo = SectorGeometry::make(n, c.nu, c.epsilon, c.delta);
  d["sparseness"] = sparseness_json(sparseness_audit(s, geo), geo);

  if (s.cvs.empty()) {
    d["projector_scaling"] = {{"skipped", "empty spectrum"}};
  } else if (multiple > 0) {
    d["projector_scaling"] = {{"skipped", "multiple eigenvalues"}};
  } else {
    const auto recs = first_projectors(nbc, spec.expression, s, std::min(c.count, 6));
    const auto scaling = projector_norm_scaling(recs);
    Json list = Json::array();
    for (const auto& p : recs) list.push_back(projector_json(p));
    d["projector_scaling"] = {{"projectors", std::move(list)},
                              {"min_ratio", scaling.min_ratio},
                              {"max_ratio", scaling.max_ratio},
                              {"spread", scaling.spread}};
  }
  return o;
}

/// Loads the spec, runs the command and maps failures onto exit codes:
/// 2 for spec or configuration errors, 3 for numerical failures.
inline Outcome run(const RunConfig& c) {
  try {
    const BvpSpec spec = io::load_spec(c.spec_path);
    validate(c, spec.expression.order());
    const auto nbc = normalize(spec.boundary);
    if (c.command == "classify") return run_classify(c, spec, nbc);
    if (c.command == "spectrum") return run_spectrum(c, spec, nbc);
    if (c.command == "green") return run_green(c, spec, nbc);
    if (c.command == "mcm-limit") return run_mcm_limit(c, spec, nbc);
    if (c.command == "projectors") return run_projectors(c, spec, nbc);
    if (c.command == "expand") return run_expand(c, spec, nbc);
    if (c.command == "report") return run_report(c, spec, nbc);
    throw spec_error("unknown command '" + c.command + "'", "command");
  } catch (const Error& e) {
    Outcome o;
    o.exit_code = e.kind() == ErrorKind::Numerical ? kNumericalFailure : kSpecError;
    o.document = {{"error", e.what()}, {"path", e.path()}};
    return o;
  } catch (const std::exception& e) {
    Outcome o;
    o.exit_code = kNumericalFailure;
    o.document = {{"error", e.what()}, {"path", ""}};
    return o;
  }
}

/// Text written for the outcome in the configured format.
inline std::string render(const Outcome& o, const RunConfig& c) {
  if (c.format == "csv" && !o.csv.empty() && !o.document.contains("error")) return o.csv;
  return io::pretty(o.document);
}

}  // namespace birkhoff::cli
