#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "maxlab/constants.hpp"
#include "maxlab/errors.hpp"
#include "maxlab/helmholtz.hpp"
#include "maxlab/material.hpp"
#include "maxlab/mesh.hpp"

namespace maxlab {

using ordered_json = nlohmann::ordered_json;

/// Stable exit codes of the batch runner.
enum ExitCode : int {
  ExitOk = 0,
  ExitChecksFailed = 2,
  ExitComputationError = 3,
  ExitConfigError = 4,
};

/// A batch run: domain, material, refinement levels, requested tasks, and
/// output destinations.
struct RunConfig {
  DomainSpec domain;
  EpsilonSpec epsilon;
  std::vector<int> levels;
  std::vector<std::string> tasks; // subset of {constants, helmholtz, interlacing}
  int interlacing_k = 3;
  std::string out_json; // empty: stdout
  std::string out_csv;  // empty: none
  int max_dofs = 5000;
  int jobs = 1;
  unsigned seed = 20240331;
  int helmholtz_fields = 100;

  bool has_task(const std::string& t) const {
    return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
  }
};

namespace detail {

inline int peek_mesh_dim(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli", "parse_config", "cannot open mesh file " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int dim;
    if (ls >> dim) return dim;
  }
  throw ConfigError("cli", "parse_config", "mesh file " + path + " is empty");
}

} // namespace detail

inline RunConfig parse_config(const ordered_json& j) {
  const char* op = "parse_config";
  RunConfig cfg;
  try {
    const auto& dj = j.at("domain");
    std::string kind = dj.at("kind").get<std::string>();
    if (kind == "box3d") cfg.domain.kind = DomainSpec::Kind::Box3d;
    else if (kind == "rect2d") cfg.domain.kind = DomainSpec::Kind::Rect2d;
    else if (kind == "square_with_hole2d") cfg.domain.kind = DomainSpec::Kind::SquareWithHole2d;
    else if (kind == "imported") cfg.domain.kind = DomainSpec::Kind::Imported;
    else throw ConfigError("cli", op, "unknown domain kind '" + kind + "'");

    if (cfg.domain.kind == DomainSpec::Kind::Imported) {
      cfg.domain.mesh_path = dj.at("mesh_path").get<std::string>();
      cfg.domain.convex = dj.value("convex", false);
    } else {
      cfg.domain.dimensions = dj.at("dims").get<std::vector<double>>();
      cfg.domain.convex = cfg.domain.kind != DomainSpec::Kind::SquareWithHole2d;
      if (dj.contains("convex") && dj.at("convex").get<bool>() != cfg.domain.convex)
        throw ConfigError("cli", op, "convexity of generated domains is fixed by their kind");
    }
    cfg.domain.validate();

    if (j.contains("epsilon")) {
      const auto& ej = j.at("epsilon");
      std::string ek = ej.value("kind", "identity");
      if (ek == "identity") cfg.epsilon.kind = EpsilonSpec::Kind::Identity;
      else if (ek == "scalar") {
        cfg.epsilon.kind = EpsilonSpec::Kind::Scalar;
        cfg.epsilon.value = ej.at("value").get<double>();
        if (!(cfg.epsilon.value > 0)) throw ConfigError("cli", op, "scalar epsilon must be positive");
      } else if (ek == "diag") {
        cfg.epsilon.kind = EpsilonSpec::Kind::Diagonal;
        cfg.epsilon.diag = ej.at("entries").get<std::vector<double>>();
      } else if (ek == "matrix") {
        cfg.epsilon.kind = EpsilonSpec::Kind::Matrix;
        auto rows = ej.at("entries").get<std::vector<std::vector<double>>>();
        const int d = static_cast<int>(rows.size());
        cfg.epsilon.matrix.resize(d, d);
        for (int i = 0; i < d; ++i) {
          if (static_cast<int>(rows[i].size()) != d)
            throw ConfigError("cli", op, "epsilon matrix must be square");
          for (int k = 0; k < d; ++k) cfg.epsilon.matrix(i, k) = rows[i][k];
        }
      } else if (ek == "file") {
        cfg.epsilon.kind = EpsilonSpec::Kind::File;
        cfg.epsilon.path = ej.at("path").get<std::string>();
      } else {
        throw ConfigError("cli", op, "unknown epsilon kind '" + ek + "'");
      }
    }

    cfg.levels = j.at("levels").get<std::vector<int>>();
    cfg.tasks = j.value("tasks", std::vector<std::string>{"constants"});
    cfg.interlacing_k = j.value("interlacing_k", 3);
    cfg.out_json = j.value("out_json", std::string{});
    cfg.out_csv = j.value("out_csv", std::string{});
    cfg.max_dofs = j.value("max_dofs", 5000);
    cfg.jobs = j.value("jobs", 0);
    cfg.seed = j.value("seed", 20240331u);
    cfg.helmholtz_fields = j.value("helmholtz_fields", 100);
  } catch (const ordered_json::exception& e) {
    throw ConfigError("cli", op, e.what());
  }

  if (cfg.levels.empty()) throw ConfigError("cli", op, "levels must be nonempty");
  for (std::size_t i = 0; i + 1 < cfg.levels.size(); ++i)
    if (cfg.levels[i] >= cfg.levels[i + 1])
      throw ConfigError("cli", op, "levels must be strictly increasing");
  const int min_level = cfg.domain.kind == DomainSpec::Kind::Imported ? 0 : 1;
  if (cfg.levels.front() < min_level)
    throw ConfigError("cli", op, "levels must be >= " + std::to_string(min_level));
  if (cfg.tasks.empty()) throw ConfigError("cli", op, "tasks must be nonempty");
  for (const auto& t : cfg.tasks)
    if (t != "constants" && t != "helmholtz" && t != "interlacing")
      throw ConfigError("cli", op, "unknown task '" + t + "'");

  const int want = cfg.epsilon.required_dim();
  if (want != 0) {
    int dom_dim = cfg.domain.kind == DomainSpec::Kind::Imported
                      ? detail::peek_mesh_dim(cfg.domain.mesh_path)
                      : cfg.domain.dim();
    if (want != dom_dim)
      throw ConfigError("cli", op, "epsilon dimension (" + std::to_string(want) +
                                       ") does not match domain dimension (" +
                                       std::to_string(dom_dim) + ")");
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli", "parse_config", "cannot open config " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const ordered_json::exception& e) {
    throw ConfigError("cli", "parse_config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Dry-run diagnostic: severity is "info", "warning", or "error".
struct Diagnostic {
  std::string severity;
  std::string message;
};

namespace detail {

struct DofEstimate {
  std::int64_t vertices = 0, edges = 0, cells = 0;
  bool exact = true;
};

inline DofEstimate estimate_dofs(const DomainSpec& d, int n) {
  std::int64_t N = n;
  DofEstimate e;
  switch (d.kind) {
    case DomainSpec::Kind::Box3d:
      e.vertices = (N + 1) * (N + 1) * (N + 1);
      e.edges = 3 * N * (N + 1) * (N + 1) + 3 * N * N * (N + 1) + N * N * N;
      e.cells = 6 * N * N * N;
      return e;
    case DomainSpec::Kind::Rect2d:
      e.vertices = (N + 1) * (N + 1);
      e.edges = 2 * N * (N + 1) + N * N;
      e.cells = 2 * N * N;
      return e;
    case DomainSpec::Kind::SquareWithHole2d: {
      const double cell = d.dimensions[0] / n;
      const double off = (d.dimensions[0] - d.dimensions[1]) / 2;
      const std::int64_t k0 = std::llround(off / cell), k1 = std::llround((off + d.dimensions[1]) / cell);
      const std::int64_t hole = k1 - k0;
      const std::int64_t inner = std::max<std::int64_t>(hole - 1, 0);
      e.vertices = (N + 1) * (N + 1) - inner * inner;
      e.cells = 2 * (N * N - hole * hole);
      e.edges = e.vertices + e.cells; // Euler characteristic 0 for the annulus
      return e;
    }
    case DomainSpec::Kind::Imported: {
      Mesh m = import_mesh(d.mesh_path);
      const std::int64_t grow = m.dim == 2 ? 4 : 8;
      std::int64_t cells = m.n_cells();
      for (int r = 0; r < n; ++r) cells *= grow;
      if (cells > 5'000'000) { // estimate without refining
        e.cells = cells;
        e.vertices = cells; // same order of magnitude
        e.edges = (m.dim == 2 ? 3 : 7) * cells / (m.dim == 2 ? 2 : 6);
        e.exact = false;
        return e;
      }
      for (int r = 0; r < n; ++r) m = refine_uniform(m);
      e.vertices = m.n_vertices();
      e.edges = m.n_edges();
      e.cells = m.n_cells();
      return e;
    }
  }
  throw ConfigError("cli", "validate", "unknown domain kind");
}

} // namespace detail

/// Dry-run validation: per-level dof estimates and sanity problems, without
/// assembling anything. Never throws for findings; they come back as
/// diagnostics.
inline std::vector<Diagnostic> validate(const RunConfig& cfg) {
  std::vector<Diagnostic> out;
  for (int n : cfg.levels) {
    try {
      auto e = detail::estimate_dofs(cfg.domain, n);
      std::ostringstream msg;
      msg << "level " << n << ": " << e.vertices << " vertices, " << e.edges << " edge dofs, "
          << e.cells << " cells" << (e.exact ? "" : " (estimated)");
      out.push_back({"info", msg.str()});
      if (e.edges > cfg.max_dofs)
        out.push_back({"warning", "level " + std::to_string(n) + ": " + std::to_string(e.edges) +
                                      " edge dofs exceed the dense-solver budget of " +
                                      std::to_string(cfg.max_dofs) +
                                      " (override with --max-dofs)"});
    } catch (const Error& err) {
      out.push_back({"error", err.what()});
    }
  }
  if (cfg.epsilon.kind == EpsilonSpec::Kind::File && !std::filesystem::exists(cfg.epsilon.path))
    out.push_back({"error", "material file not found: " + cfg.epsilon.path});
  if (cfg.has_task("interlacing") && cfg.interlacing_k < 1)
    out.push_back({"warning", "interlacing task with k < 1 produces an empty table"});
  return out;
}

namespace detail {

inline ordered_json json_number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline ordered_json domain_to_json(const DomainSpec& d) {
  ordered_json j;
  switch (d.kind) {
    case DomainSpec::Kind::Box3d: j["kind"] = "box3d"; break;
    case DomainSpec::Kind::Rect2d: j["kind"] = "rect2d"; break;
    case DomainSpec::Kind::SquareWithHole2d: j["kind"] = "square_with_hole2d"; break;
    case DomainSpec::Kind::Imported: j["kind"] = "imported"; break;
  }
  if (d.kind == DomainSpec::Kind::Imported) j["mesh_path"] = d.mesh_path;
  else j["dims"] = d.dimensions;
  j["convex"] = d.convex;
  return j;
}

inline ordered_json epsilon_to_json(const EpsilonSpec& e) {
  ordered_json j;
  switch (e.kind) {
    case EpsilonSpec::Kind::Identity: j["kind"] = "identity"; break;
    case EpsilonSpec::Kind::Scalar:
      j["kind"] = "scalar";
      j["value"] = e.value;
      break;
    case EpsilonSpec::Kind::Diagonal:
      j["kind"] = "diag";
      j["entries"] = e.diag;
      break;
    case EpsilonSpec::Kind::Matrix: {
      j["kind"] = "matrix";
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < e.matrix.rows(); ++i) {
        rows.emplace_back();
        for (int k = 0; k < e.matrix.cols(); ++k) rows.back().push_back(e.matrix(i, k));
      }
      j["entries"] = rows;
      break;
    }
    case EpsilonSpec::Kind::File:
      j["kind"] = "file";
      j["path"] = e.path;
      break;
  }
  return j;
}

inline ordered_json constants_to_json(const ConstantsReport& rep) {
  ordered_json j;
  j["levels"] = ordered_json::array();
  for (const auto& l : rep.levels) {
    ordered_json lj;
    lj["n"] = l.n;
    lj["h"] = l.h;
    lj["lambda1"] = l.lambda1;
    lj["mu2"] = l.mu2;
    lj["lambda1_eps"] = l.lambda1_eps;
    lj["mu2_eps"] = l.mu2_eps;
    lj["lambda_max_t"] = l.lambda_max_t;
    lj["lambda_max_n"] = l.lambda_max_n;
    lj["d_D"] = l.d_D;
    lj["d_N"] = l.d_N;
    j["levels"].push_back(std::move(lj));
  }
  ordered_json ex;
  auto put = [&](const char* key, const Extrapolation& e) {
    ex[key] = e.value;
    ex[std::string(key) + "_order"] = json_number_or_null(e.observed_order);
  };
  put("lambda1", rep.extrapolated.lambda1);
  put("mu2", rep.extrapolated.mu2);
  put("lambda1_eps", rep.extrapolated.lambda1_eps);
  put("mu2_eps", rep.extrapolated.mu2_eps);
  put("lambda_max_t", rep.extrapolated.lambda_max_t);
  put("lambda_max_n", rep.extrapolated.lambda_max_n);
  j["extrapolated"] = std::move(ex);
  const auto& c = rep.constants;
  j["constants"] = {{"c_p0", c.c_p0},
                    {"c_p", c.c_p},
                    {"c_mt", c.c_mt},
                    {"c_mn", c.c_mn},
                    {"eps_lower", c.eps_lower},
                    {"eps_upper", c.eps_upper},
                    {"eps_hat", c.eps_hat},
                    {"diam_over_pi", c.diam_over_pi},
                    {"inv_op_norm", c.inv_op_norm}};
  j["d_D"] = rep.d_D;
  j["d_N"] = rep.d_N;
  j["checks"] = ordered_json::array();
  for (const auto& chk : rep.checks)
    j["checks"].push_back({{"name", chk.name},
                           {"lhs", chk.lhs},
                           {"rhs", chk.rhs},
                           {"satisfied", chk.satisfied},
                           {"margin", chk.margin},
                           {"status", chk.status}});
  return j;
}

struct HelmholtzSuiteResult {
  ordered_json json;
  bool pass = true;
};

inline HelmholtzSuiteResult helmholtz_suite(const RunConfig& cfg) {
  HelmholtzSuiteResult out;
  auto [mesh, mat] = make_level(cfg.domain, cfg.epsilon, cfg.levels.back());
  out.json["fields_per_bc"] = cfg.helmholtz_fields;
  out.json["seed"] = cfg.seed;
  out.json["level"] = cfg.levels.back();
  for (FieldBC bc : {FieldBC::Tangential, FieldBC::Normal}) {
    HelmholtzContext ctx(mesh, mat, bc);
    std::mt19937 rng(cfg.seed + (bc == FieldBC::Normal ? 1 : 0));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double max_recon = 0, max_ortho = 0;
    for (int f = 0; f < cfg.helmholtz_fields; ++f) {
      Eigen::VectorXd field(ctx.pencil().n());
      for (int i = 0; i < field.size(); ++i) field[i] = dist(rng);
      Decomposition d = ctx.decompose(field);
      max_recon = std::max(max_recon, d.reconstruction_residual);
      max_ortho = std::max({max_ortho, d.ortho_grad_harmonic, d.ortho_grad_solenoidal,
                            d.ortho_harmonic_solenoidal});
    }
    const bool pass = max_recon <= 1e-12 && max_ortho <= 1e-10;
    out.pass = out.pass && pass;
    IrrotationalCheck irr = verify_irrotational_estimate(mesh, mat, bc);
    ordered_json bj;
    bj["harmonic_dim"] = ctx.harmonic_dim();
    bj["max_reconstruction_residual"] = max_recon;
    bj["max_orthogonality_residual"] = max_ortho;
    bj["pass"] = pass;
    bj["irrotational"] = {{"lambda", irr.lambda},
                          {"ratio", irr.ratio},
                          {"bound", irr.bound},
                          {"margin", irr.margin}};
    out.json[bc == FieldBC::Tangential ? "tangential" : "normal"] = std::move(bj);
  }
  return out;
}

inline std::string csv_number(const ordered_json& v) { return v.dump(); }

inline std::string levels_csv(const ordered_json& report) {
  std::ostringstream csv;
  csv << "n,h,lambda1,mu2,lambda1_eps,mu2_eps,lambda_max_t,lambda_max_n,d_D,d_N\n";
  if (report.contains("levels"))
    for (const auto& l : report.at("levels")) {
      csv << csv_number(l.at("n")) << ',' << csv_number(l.at("h")) << ','
          << csv_number(l.at("lambda1")) << ',' << csv_number(l.at("mu2")) << ','
          << csv_number(l.at("lambda1_eps")) << ',' << csv_number(l.at("mu2_eps")) << ','
          << csv_number(l.at("lambda_max_t")) << ',' << csv_number(l.at("lambda_max_n")) << ','
          << csv_number(l.at("d_D")) << ',' << csv_number(l.at("d_N")) << '\n';
    }
  return csv.str();
}

} // namespace detail

/// Executes the configured tasks and assembles the JSON report. Throws on
/// computation/config errors; check failures only flip the flag.
struct RunResult {
  ordered_json report;
  bool checks_pass = true;
};

inline RunResult run_tasks(const RunConfig& cfg) {
  // Refuse configurations beyond the dense-solver budget up front.
  for (int n : cfg.levels) {
    auto e = detail::estimate_dofs(cfg.domain, n);
    if (e.edges > cfg.max_dofs)
      throw ConfigError("cli", "run",
                        "level " + std::to_string(n) + " needs " + std::to_string(e.edges) +
                            " edge dofs, above the dense-solver budget of " +
                            std::to_string(cfg.max_dofs) + " (override with --max-dofs)");
  }

  RunResult out;
  out.report["domain"] = detail::domain_to_json(cfg.domain);
  out.report["epsilon"] = detail::epsilon_to_json(cfg.epsilon);

  int jobs = cfg.jobs;
  if (jobs <= 0) {
    if (const char* env = std::getenv("MAXLAB_JOBS")) jobs = std::atoi(env);
    if (jobs <= 0) jobs = 1;
  }

  if (cfg.has_task("constants")) {
    ConstantsReport rep = constants_report(cfg.domain, cfg.epsilon, cfg.levels, jobs);
    ordered_json cj = detail::constants_to_json(rep);
    for (auto& [key, value] : cj.items()) out.report[key] = value;
    out.checks_pass = out.checks_pass && rep.all_checks_satisfied();
  }
  if (cfg.has_task("helmholtz")) {
    auto suite = detail::helmholtz_suite(cfg);
    out.report["helmholtz_checks"] = std::move(suite.json);
    out.checks_pass = out.checks_pass && suite.pass;
  }
  if (cfg.has_task("interlacing")) {
    auto table = interlacing_table(cfg.domain, cfg.interlacing_k, cfg.levels);
    ordered_json tj;
    tj["k"] = cfg.interlacing_k;
    tj["pairs"] = ordered_json::array();
    bool all = true;
    for (const auto& p : table) {
      tj["pairs"].push_back({{"n", p.index},
                             {"lambda_n", p.lambda_n},
                             {"mu_np1", p.mu_np1},
                             {"satisfied", p.satisfied}});
      all = all && p.satisfied;
    }
    out.report["interlacing"] = std::move(tj);
    out.checks_pass = out.checks_pass && all;
  }
  return out;
}

/// Full batch run: executes tasks, writes the JSON/CSV reports, and maps the
/// outcome to the stable exit codes (0 ok, 2 checks failed, 3 computation
/// error, 4 config/mesh error). Reports are written even when checks fail.
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr) {
  try {
    RunResult res = run_tasks(cfg);
    std::string text = res.report.dump(2);
    text.push_back('\n');
    if (cfg.out_json.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cfg.out_json, std::ios::binary);
      if (!out) throw ConfigError("cli", "run", "cannot write " + cfg.out_json);
      out << text;
    }
    if (!cfg.out_csv.empty()) {
      std::ofstream out(cfg.out_csv, std::ios::binary);
      if (!out) throw ConfigError("cli", "run", "cannot write " + cfg.out_csv);
      out << detail::levels_csv(res.report);
    }
    return res.checks_pass ? ExitOk : ExitChecksFailed;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return ExitConfigError;
  } catch (const MeshError& e) {
    log << "error: " << e.what() << '\n';
    return ExitConfigError;
  } catch (const ComputationError& e) {
    log << "error: " << e.what() << '\n';
    return ExitComputationError;
  }
}

} // namespace maxlab
