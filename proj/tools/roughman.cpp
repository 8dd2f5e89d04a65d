#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "roughman/config.hpp"
#include "roughman/pipeline.hpp"
#include "roughman/roughpath_io.hpp"

namespace {

using namespace roughman;

struct CommonFlags {
  std::string scenario_file;
  std::string field;
  std::string driver;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> refine;
  std::optional<double> tol;
  std::optional<double> hurst;
  std::optional<std::uint64_t> seed;
  std::vector<double> lambdas;
  std::string x_mode;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_field) {
  cmd->add_option("--scenario", f.scenario_file, "scenario file")->check(CLI::ExistingFile);
  if (with_field) cmd->add_option("field", f.field, "built-in field id (overrides the scenario file)");
  cmd->add_option("--driver", f.driver, "ito_wiener | geometric_fbm | pure_area | smooth");
  cmd->add_option("--seeds", f.seeds, "number of Monte Carlo seeds");
  cmd->add_option("--grid", f.grid, "finest grid size N");
  cmd->add_option("--refine", f.refine, "fine steps per grid step R");
  cmd->add_option("--tol", f.tol, "tangency tolerance");
  cmd->add_option("--hurst", f.hurst, "Hurst index H in (1/3, 1/2]");
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--lambdas", f.lambdas, "noise eigenvalues")->delimiter(',');
  cmd->add_option("--x-mode", f.x_mode, "from_driver_bracket | explicit | zero");
}

Scenario build_scenario(const CommonFlags& f) {
  Scenario sc = f.scenario_file.empty() ? Scenario{} : load_scenario(f.scenario_file);
  if (!f.field.empty()) {
    sc.field_id = f.field;
    sc.external.reset();
    sc.chart_id.clear();
    if (f.lambdas.empty() && f.scenario_file.empty()) {
      sc.qspec.lambdas.assign(static_cast<std::size_t>(builtin_noise_dim(sc.field_id)), 1.0);
    }
  }
  if (!f.lambdas.empty()) sc.qspec.lambdas = f.lambdas;
  if (!f.driver.empty()) sc.driver = parse_driver_kind(f.driver);
  if (f.hurst) sc.qspec.hurst = *f.hurst;
  if (f.seeds) sc.seeds = *f.seeds;
  if (f.grid) sc.signal.steps = *f.grid;
  if (f.refine) sc.signal.refine = *f.refine;
  if (f.tol) sc.tol = *f.tol;
  if (f.seed) sc.signal.seed = *f.seed;
  if (!f.x_mode.empty()) {
    if (f.x_mode == "from_driver_bracket") sc.x_mode = XMode::FromDriverBracket;
    else if (f.x_mode == "zero") sc.x_mode = XMode::Zero;
    else if (f.x_mode == "explicit") sc.x_mode = XMode::Explicit;
    else throw Error(ErrorKind::Config, "unknown --x-mode '" + f.x_mode + "'");
  }
  if (sc.driver == DriverKind::PureArea && sc.pure_area.size() == 0) sc.pure_area = sc.qspec.covariance();
  if (sc.x_mode == XMode::Explicit && sc.x_explicit.size() == 0) {
    throw Error(ErrorKind::Config, "x_mode = explicit needs x in the scenario file");
  }
  check_scenario(sc);
  return sc;
}

std::string default_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ROUGHMAN_OUT")) {
    if (*env) return env;
  }
  return "roughman_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariance checks and solves for rough differential equations on submanifolds"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_out;
  unsigned threads = 0;
  auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  add_common(run, run_flags, true);
  run->add_option("--out", run_out, "output directory (default $ROUGHMAN_OUT, then ./roughman_out)");
  run->add_option("--threads", threads, "worker threads (0: all cores)");

  CommonFlags check_flags;
  auto* check = app.add_subcommand("check", "print the tangency verdict only");
  add_common(check, check_flags, true);

  CommonFlags lift_flags;
  std::string lift_out;
  auto* lift = app.add_subcommand("lift", "write the finest driver of the first seed as CSV");
  add_common(lift, lift_flags, true);
  lift->add_option("--out", lift_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const Scenario sc = build_scenario(run_flags);
      RunOptions opts;
      opts.out_dir = default_out(run_out);
      opts.threads = threads;
      const RunResult rr = run_scenario(sc, opts);
      std::cout << "verdict invariant=" << (rr.verdict.invariant ? "true" : "false")
                << " max_residual=" << csv::format(rr.verdict.max_residual) << '\n';
      std::cout << "N,max_defect,order\n";
      for (const RefinementRow& r : rr.table) {
        std::cout << r.steps << ',' << csv::format(r.max_defect) << ',' << (r.order ? csv::format(*r.order) : "") << '\n';
      }
      std::cout << "round_trip " << (rr.round_trip ? "holds" : "violated") << ": " << rr.reason << '\n'
                << "artifacts in " << opts.out_dir->string() << '\n';
      return rr.exit_code();
    }
    if (*check) {
      const Scenario sc = build_scenario(check_flags);
      const ResolvedScenario rs = resolve(sc);
      Tensor2 x = Tensor2::Zero(sc.qspec.dim(), sc.qspec.dim());
      if (sc.x_mode == XMode::Explicit) x = sc.x_explicit;
      if (sc.x_mode == XMode::FromDriverBracket) {
        std::vector<std::shared_ptr<const RoughPath>> drivers;
        for (std::size_t i = 0; i < sc.seeds; ++i) {
          drivers.push_back(std::make_shared<const RoughPath>(make_driver(sc, sc.signal.seed + i)));
        }
        x = fit_bracket_slope(drivers).slope;
      }
      const Verdict v = check_invariance(rs.fields, rs.chart, x, sc.tol);
      write_verdict(std::cout, v);
      return v.invariant ? 0 : 2;
    }
    if (*lift) {
      const Scenario sc = build_scenario(lift_flags);
      const RoughPath p = make_driver(sc, sc.signal.seed);
      if (lift_out.empty()) {
        write_rough_path(std::cout, p);
      } else {
        std::ofstream out(lift_out);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + lift_out);
        write_rough_path(out, p);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "roughman: " << to_string(e.kind()) << ": " << e.detail() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "roughman: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
