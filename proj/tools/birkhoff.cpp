#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "birkhoff/cli.hpp"

namespace {

using birkhoff::Complex;

// Accepts "re" or "re:im".
Complex parse_complex(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {std::stod(s), 0.0};
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = birkhoff::cli;

  CLI::App app{"Spectral analysis of Birkhoff-type boundary value problems"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  cli::RunConfig cfg;
  bool print_defaults = false;
  std::string rho_text;
  std::vector<std::string> value_text;
  std::optional<double> epsilon;

  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");
  app.add_option("--spec", cfg.spec_path, "Spec file (JSON)");
  app.add_option("--out", cfg.out_path, "Write output here instead of stdout");
  app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", cfg.seed, "Seed for randomized checks");
  app.add_option("--epsilon", epsilon, "Subsector half-width, default pi/(4n)");
  app.add_option("--delta", cfg.delta, "Sparseness disc fraction");
  app.add_option("--tol", cfg.theta_tol, "Tolerance for Theta vanishing");
  app.add_option("--root-tol", cfg.root_tol, "Tolerance for simple roots of F");
  app.add_option("--merge-tol", cfg.merge_tol, "Relative tolerance for merging cvs");
  app.add_option("--r-min", cfg.r_min, "Inner search radius in |rho|");
  app.add_option("--r-max", cfg.r_max, "Outer search radius in |rho|");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"classify", "Regularity class and Theta"},
      {"spectrum", "Characteristic values in an annulus"},
      {"green", "Green's function on a grid"},
      {"mcm-limit", "Convergence of the modified characteristic matrix"},
      {"projectors", "Riesz projectors of the first eigenvalues"},
      {"expand", "Partial sums of an eigenfunction expansion"},
      {"report", "Full deterministic report"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("spec", cfg.spec_path, "Spec file (JSON)");
    if (std::string(name) == "green") {
      sub->add_option("--rho", rho_text, "Point re:im, default 20 on the S_0 bisector");
      sub->add_option("--grid", cfg.grid, "Grid points per variable");
    }
    if (std::string(name) == "mcm-limit" || std::string(name) == "report") {
      sub->add_option("--nu", cfg.nu, "Sector index 0 or 1");
      sub->add_option("--radii", cfg.radii, "Probe radii along the bisector");
    }
    if (std::string(name) == "projectors" || std::string(name) == "expand" || std::string(name) == "report")
      sub->add_option("-K,--count", cfg.count, "Number of eigenvalues");
    if (std::string(name) == "expand") {
      sub->add_flag("--paired", cfg.paired, "Group close eigenvalues before summing");
      sub->add_option("--input-function", cfg.input_function, "poly or samples")
          ->check(CLI::IsMember({"poly", "samples"}));
      sub->add_option("--values", value_text, "Coefficients or samples, each re or re:im");
    }
  }

  CLI11_PARSE(app, argc, argv);

  if (print_defaults) {
    std::cout << birkhoff::io::pretty(cli::to_json(cli::RunConfig{}));
    return cli::kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return cli::kSpecError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.epsilon = epsilon;
  try {
    if (!rho_text.empty()) cfg.rho = parse_complex(rho_text);
    if (!value_text.empty()) {
      cfg.values.clear();
      for (const auto& v : value_text) cfg.values.push_back(parse_complex(v));
    }
  } catch (const std::exception&) {
    std::cerr << "error: cannot read a complex number (expected re or re:im)\n";
    return cli::kSpecError;
  }

  const auto outcome = cli::run(cfg);
  const std::string text = cli::render(outcome, cfg);
  if (outcome.document.is_object() && outcome.document.contains("error")) {
    std::cerr << "error at " << outcome.document["path"].get<std::string>() << ": "
              << outcome.document["error"].get<std::string>() << "\n";
    return outcome.exit_code;
  }
  if (cfg.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write '" << cfg.out_path << "'\n";
      return cli::kSpecError;
    }
    out << text;
  }
  return outcome.exit_code;
}
