// Batch runner: computes Poincare/Maxwell constants reports from a JSON run
// configuration and writes JSON/CSV reports with stable exit codes.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "maxlab/maxlab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"maxlab: finite-element Poincare/Maxwell constants laboratory"};

  std::string config_path;
  std::string out_json, out_csv;
  int max_dofs = -1;
  int jobs = -1;
  bool validate_only = false;

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out-json", out_json, "write the JSON report here (overrides config)");
  app.add_option("--out-csv", out_csv, "write the per-level CSV here (overrides config)");
  app.add_option("--max-dofs", max_dofs, "dense-solver edge-dof budget (default 5000)");
  app.add_option("--jobs", jobs, "concurrent refinement levels (default $MAXLAB_JOBS or 1)");
  app.add_flag("--validate", validate_only, "dry-run: print diagnostics, no assembly");

  CLI11_PARSE(app, argc, argv);

  maxlab::RunConfig cfg;
  try {
    cfg = maxlab::parse_config_file(config_path);
  } catch (const maxlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return maxlab::ExitConfigError;
  }
  if (!out_json.empty()) cfg.out_json = out_json;
  if (!out_csv.empty()) cfg.out_csv = out_csv;
  if (max_dofs > 0) cfg.max_dofs = max_dofs;
  if (jobs > 0) cfg.jobs = jobs;

  if (validate_only) {
    for (const auto& d : maxlab::validate(cfg))
      std::cout << d.severity << ": " << d.message << '\n';
    return maxlab::ExitOk;
  }
  return maxlab::run(cfg);
}
