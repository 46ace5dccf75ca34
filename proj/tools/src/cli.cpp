// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "afem/adaptive.hpp"

namespace afem::cli
{

namespace
{

namespace fs = std::filesystem;

// Usage errors detected after parsing.
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Coefficients
{
  std::vector<double> b{1.0, 25.0};
  double c = 0.0;
  double f = 1.0;

  PdeData data() const { return PdeData::constant_data({}, {b[0], b[1]}, c, f); }
};

struct RunOptions
{
  AdaptiveParams params;
  std::string preconditioner = "as";
  std::string mesh_file;
  std::string out;
  int snapshot_every = 0;
  Coefficients coef;
};

struct StudyOptions
{
  std::string hierarchy;
  std::string out;
  std::vector<int> degrees{2};
  std::vector<int> k_max{5};
  double tol = 1e-5;
  std::string preconditioner = "as";
  Coefficients coef;
};

struct RatesOptions
{
  std::string history;
  std::string out = ".";
  std::vector<double> s{0.5, 1.0};
};

std::shared_ptr<spdlog::logger> logger()
{
  static auto log = [] {
    auto l = spdlog::stderr_color_mt("afem");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    if (const char *env = std::getenv("AFEM_LOG_LEVEL"))
    {
      l->set_level(spdlog::level::from_str(env));
    }
    return l;
  }();
  return log;
}

std::string format_double(double v)
{
  if (std::isnan(v))
  {
    return "nan";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_directory(const std::string &path, const char *what)
{
  if (path.empty() || !fs::is_directory(path))
  {
    throw UsageError(std::string(what) + " '" + path + "' is not an existing directory");
  }
}

std::ofstream open_output(const fs::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

void add_coefficient_flags(CLI::App &app, Coefficients &coef)
{
  app.add_option("--convection", coef.b, "Constant convection field bx,by")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  app.add_option("--reaction", coef.c, "Constant reaction coefficient")->capture_default_str();
  app.add_option("--source", coef.f, "Constant source term")->capture_default_str();
}

// Reads key=value lines (blank lines and '#' comments ignored) into flag tokens. Keys are the
// parameter names; underscores map to dashes.
std::vector<std::string> config_tokens(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw UsageError("cannot read config file '" + path + "'");
  }
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    lineno++;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
    {
      line.erase(hash);
    }
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty())
    {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    if (value == "true" || value == "false")
    {
      if (value == "true")
      {
        out.push_back("--" + key);
      }
      continue;
    }
    out.push_back("--" + key);
    out.push_back(value);
  }
  return out;
}

// Moves a `--config <file>` pair out of the arguments and prepends the file's tokens right
// after the subcommand name, so that explicit flags (parsed later, last one wins) override it.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
  std::string path;
  for (std::size_t i = 0; i < args.size(); i++)
  {
    if (args[i] == "--config" && i + 1 < args.size())
    {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0)
    {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty())
  {
    return args;
  }
  if (args.empty())
  {
    throw UsageError("--config requires a subcommand");
  }
  auto tokens = config_tokens(path);
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

int cmd_run(RunOptions opt)
{
  opt.params.preconditioner = parse_preconditioner(opt.preconditioner);
  opt.params.validate();
  if (opt.snapshot_every < 0)
  {
    throw UsageError("--snapshot-every must be nonnegative");
  }
  require_directory(opt.out, "output directory");
  const auto data = opt.coef.data();
  const Triangulation initial =
      opt.mesh_file.empty() ? initial_mesh_lshape() : read_mesh_file(opt.mesh_file);
  data.validate(initial);

  const fs::path out(opt.out);
  auto log = logger();
  auto snapshot = [&](int ell, const Triangulation &mesh) {
    write_mesh_file((out / ("mesh_" + std::to_string(ell) + ".txt")).string(), mesh);
  };
  // The last level is always written, so a snapshot set ends with the finest mesh.
  std::unique_ptr<Triangulation> unsaved;
  AdaptiveObservers observers;
  observers.on_level = [&](const LevelView &v) {
    log->info("level {:3d}: #T = {:8d}  N = {:8d}  k = {:4d}  eta = {:.4e}  |s| = {:.4e}", v.ell,
              v.mesh.num_elements(), v.space.size(), v.solve.k_underline, v.estimator.eta(),
              v.solve.steps.empty() ? v.solve.initial_norm : v.solve.steps.back().res_norm);
    unsaved.reset();
    if (opt.snapshot_every > 0)
    {
      if (v.ell % opt.snapshot_every == 0)
      {
        snapshot(v.ell, v.mesh);
      }
      else
      {
        unsaved = std::make_unique<Triangulation>(v.mesh);
      }
    }
  };
  const auto history = afem_run(initial, data, opt.params, observers);
  if (unsaved)
  {
    snapshot(history.num_levels() - 1, *unsaved);
  }
  auto csv = open_output(out / "history.csv");
  write_history_csv(csv, history.records);
  csv.close();
  if (!csv)
  {
    throw std::runtime_error("failed writing history.csv");
  }
  std::string triggers;
  for (int l : history.trigger_levels)
  {
    triggers += (triggers.empty() ? "" : ",") + std::to_string(l);
  }
  log->info("status {}: {} levels, {} iterates, parameter updates at [{}]",
            to_string(history.status), history.num_levels(), history.records.size(), triggers);
  return kSuccess;
}

// Loads mesh_0.txt, mesh_1.txt, ... and reconstructs the refinement lineage between levels.
std::vector<std::shared_ptr<const Triangulation>> load_hierarchy(const std::string &dir)
{
  std::vector<std::shared_ptr<const Triangulation>> out;
  for (int l = 0;; l++)
  {
    const fs::path path = fs::path(dir) / ("mesh_" + std::to_string(l) + ".txt");
    if (!fs::exists(path))
    {
      break;
    }
    auto mesh = read_mesh_file(path.string());
    if (!out.empty())
    {
      mesh = infer_lineage(*out.back(), mesh);
    }
    out.push_back(std::make_shared<const Triangulation>(std::move(mesh)));
  }
  if (out.empty())
  {
    throw std::runtime_error("no mesh_0.txt in hierarchy directory '" + dir + "'");
  }
  return out;
}

int cmd_solver_study(const StudyOptions &opt)
{
  require_directory(opt.hierarchy, "hierarchy directory");
  require_directory(opt.out, "output directory");
  if (!(opt.tol >= 0.0))
  {
    throw UsageError("--tol must be nonnegative");
  }
  const auto type = parse_preconditioner(opt.preconditioner);
  const auto data = opt.coef.data();
  auto log = logger();
  const auto meshes = load_hierarchy(opt.hierarchy);
  MultilevelHierarchy hierarchy(data);
  for (const auto &m : meshes)
  {
    hierarchy.push_level(m);
  }
  log->info("hierarchy: {} levels, finest #T = {}", meshes.size(),
            meshes.back()->num_elements());

  for (int p : opt.degrees)
  {
    const FeSpace space(meshes.back(), p);
    const auto sys = assemble_system(space, data);
    const Preconditioner P = type == PreconditionerType::Identity
                                 ? Preconditioner::identity(space.size())
                                 : Preconditioner(hierarchy, space, sys.A, {type, true});
    for (int k_max : opt.k_max)
    {
      GmresOptions gopt;
      gopt.k_max = k_max;
      double tol = 0.0;
      gopt.observer = [&](const GmresStep &st, std::span<const double>) {
        if (st.k == 0)
        {
          tol = opt.tol * st.res_norm;
        }
      };
      const ToleranceFunction stop = [&](std::span<const double>) { return tol; };
      const auto res =
          pgmres(sys.B, P, sys.d, Vector(space.size(), 0.0), stop, gopt);
      const auto norms = res.norms();
      const fs::path file = fs::path(opt.out) / ("solver_p" + std::to_string(p) + "_kmax" +
                                                 std::to_string(k_max) + ".csv");
      auto csv = open_output(file);
      csv << "k,K,R,res_norm,ratio\n";
      csv << "0,0,0," << format_double(norms[0]) << ",\n";
      double worst = 0.0;
      for (const auto &st : res.steps)
      {
        const double prev = norms[st.k - 1];
        const double ratio = prev > 0.0 ? st.res_norm / prev : 0.0;
        worst = std::max(worst, ratio);
        csv << st.k << ',' << st.K << ',' << st.R << ',' << format_double(st.res_norm) << ','
            << format_double(ratio) << '\n';
      }
      log->info("p = {} k_max = {:3d}: N = {:7d}, {:5d} iterations, max ratio {:.4f}", p, k_max,
                space.size(), res.k_underline, worst);
    }
  }
  return kSuccess;
}

int cmd_rates(const RatesOptions &opt)
{
  require_directory(opt.out, "output directory");
  std::ifstream in(opt.history);
  if (!in)
  {
    throw std::runtime_error("cannot read history file '" + opt.history + "'");
  }
  const auto records = read_history_csv(in);
  std::vector<RateDiagnostics> diags;
  for (double s : opt.s)
  {
    diags.push_back(rate_diagnostics(records, s));
  }
  auto csv = open_output(fs::path(opt.out) / "rates.csv");
  csv << "s,M_dof,M_cost,slope_dof,slope_cost,slope_time\n";
  std::printf("%8s %14s %14s\n", "s", "M_dof", "M_cost");
  for (std::size_t i = 0; i < opt.s.size(); i++)
  {
    const auto &d = diags[i];
    csv << format_double(opt.s[i]) << ',' << format_double(d.M_dof) << ','
        << format_double(d.M_cost) << ',' << format_double(d.slope_dof) << ','
        << format_double(d.slope_cost) << ',' << format_double(d.slope_time) << '\n';
    std::printf("%8.3f %14.6e %14.6e\n", opt.s[i], d.M_dof, d.M_cost);
  }
  const auto &d = diags.front();
  std::printf("slope vs DOFs  %8.4f\nslope vs cost  %8.4f\nslope vs time  %8.4f\n"
              "(final decade, %zu levels)\n",
              d.slope_dof, d.slope_cost, d.slope_time, d.fitted_points);
  return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string> &raw_args)
{
  auto log = logger();
  CLI::App app("Adaptive FEM with optimally preconditioned restarted GMRES", "afem");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_flag("--config", "key=value file with default flag values (flags take precedence)");

  RunOptions run;
  auto *run_cmd = app.add_subcommand("run", "Run the adaptive loop and write history.csv");
  auto &p = run.params;
  run_cmd->add_option("--theta", p.theta, "Doerfler bulk parameter in (0, 1]")
      ->capture_default_str();
  run_cmd->add_option("--c-mark", p.c_mark, "Marking cardinality factor (>= 1)")
      ->capture_default_str();
  run_cmd->add_option("--c-alg", p.c_alg, "Initial C_alg")->capture_default_str();
  run_cmd->add_option("--lambda-alg", p.lambda_alg, "Initial algebraic tolerance factor")
      ->capture_default_str();
  run_cmd->add_option("--kmax,--k-max", p.k_max, "PGMRES restart length")->capture_default_str();
  run_cmd->add_option("--tau", p.tau, "Stop once H <= tau")->capture_default_str();
  run_cmd->add_option("--p,--degree", p.degree, "Polynomial degree")->capture_default_str();
  run_cmd->add_option("--max-dof", p.max_dof, "Stop once a level has this many DOFs")
      ->capture_default_str();
  run_cmd->add_option("--max-levels", p.max_levels, "Stop after this level (-1: unlimited)")
      ->capture_default_str();
  run_cmd->add_option("--preconditioner", run.preconditioner, "as | smg")
      ->check(CLI::IsMember({"as", "smg"}))
      ->capture_default_str();
  run_cmd->add_option("--mesh-file", run.mesh_file, "Initial mesh (default: L-shape)");
  run_cmd->add_option("--out", run.out, "Existing output directory")->required();
  run_cmd->add_option("--snapshot-every", run.snapshot_every,
                      "Write mesh_<l>.txt every n levels (0: never)")
      ->capture_default_str();
  run_cmd->add_flag("--timing", p.timing, "Record wall-clock times (output not reproducible)");
  add_coefficient_flags(*run_cmd, run.coef);

  StudyOptions study;
  auto *study_cmd = app.add_subcommand(
      "solver-study", "PGMRES contraction study on the finest mesh of a snapshot hierarchy");
  study_cmd->add_option("--hierarchy", study.hierarchy, "Directory with mesh_<l>.txt files")
      ->required();
  study_cmd->add_option("--out", study.out, "Existing output directory")->required();
  study_cmd->add_option("--p,--degree", study.degrees, "Polynomial degrees")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str();
  study_cmd->add_option("--kmax,--k-max", study.k_max, "Restart lengths")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str();
  study_cmd->add_option("--tol", study.tol, "Relative residual tolerance")->capture_default_str();
  study_cmd->add_option("--preconditioner", study.preconditioner, "as | smg | identity")
      ->check(CLI::IsMember({"as", "smg", "identity"}))
      ->capture_default_str();
  add_coefficient_flags(*study_cmd, study.coef);

  RatesOptions rates;
  auto *rates_cmd = app.add_subcommand("rates", "Rate diagnostics of a history.csv");
  rates_cmd->add_option("history", rates.history, "history.csv written by `run`")->required();
  rates_cmd->add_option("--s", rates.s, "Rates s for M(s)")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str();
  rates_cmd->add_option("--out", rates.out, "Existing output directory")->capture_default_str();

  try
  {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  }
  catch (const CLI::ParseError &e)
  {
    return app.exit(e) == 0 ? kSuccess : kUsageError;
  }
  catch (const UsageError &e)
  {
    log->error("{}", e.what());
    return kUsageError;
  }

  try
  {
    if (*run_cmd)
    {
      return cmd_run(run);
    }
    if (*study_cmd)
    {
      return cmd_solver_study(study);
    }
    return cmd_rates(rates);
  }
  catch (const UsageError &e)
  {
    log->error("{}", e.what());
    return kUsageError;
  }
  catch (const std::invalid_argument &e)
  {
    log->error("invalid configuration: {}", e.what());
    return kUsageError;
  }
  catch (const std::exception &e)
  {
    log->error("{}", e.what());
    return kRuntimeError;
  }
}

}  // namespace afem::cli
