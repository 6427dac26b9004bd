#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "uavcran/io/commands.hpp"

using namespace uavcran;

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV trajectory optimization for uplink C-RAN min-rate maximization"};
  app.require_subcommand(1);

  io::RunOptions run_opt;
  std::string method_text;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "simulate one scenario and write trajectory.csv / summary.txt");
  run->add_option("config", run_opt.config_path, "scenario config file")->required();
  run->add_option("--method", method_text, "controlled or gradient")->check(CLI::IsMember({"controlled", "gradient"}));
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", run_opt.out_dir, "output directory");
  run->add_flag("--plot", run_opt.plot, "also write trajectory.svg and rate.svg");

  io::CompareOptions cmp_opt;
  auto* compare = app.add_subcommand("compare", "run both methods over several seeds");
  compare->add_option("config", cmp_opt.config_path, "scenario config file")->required();
  compare->add_option("--seeds", cmp_opt.seeds, "number of seeds");
  compare->add_option("--out", cmp_opt.out_dir, "output directory");

  io::GradCheckOptions gc_opt;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and finite-difference min-rate gradients");
  gradcheck->add_option("config", gc_opt.config_path, "scenario config file")->required();
  gradcheck->add_option("--samples", gc_opt.samples, "number of geometries");
  gradcheck->add_option("--delta", gc_opt.delta, "finite-difference step [m]");

  io::DesignOptions design_opt;
  std::string weights_text;
  auto* design = app.add_subcommand("design", "LQR design of the velocity-loop gains");
  design->add_option("--weights", weights_text, "qv,qo,qod state weights");
  design->add_option("--r", design_opt.r, "input weight");
  design->add_option("--gravity", design_opt.gravity, "gravity [m/s^2]");
  design->add_flag("--paper-gains", design_opt.paper_gains, "print the reference gain preset");

  std::string plot_csv, plot_out = ".";
  auto* plot = app.add_subcommand("plot", "regenerate SVG plots from a trajectory CSV");
  plot->add_option("csv", plot_csv, "trajectory.csv")->required();
  plot->add_option("--out", plot_out, "output directory");

  std::string canon_path;
  auto* canon = app.add_subcommand("config", "print the canonical form of a config file");
  canon->add_option("config", canon_path, "scenario config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : io::kValidation;
  }

  if (run->parsed()) {
    if (!method_text.empty()) run_opt.method = method_text == "controlled" ? Method::Controlled : Method::Gradient;
    if (seed_opt->count() > 0) run_opt.seed = seed;
    return io::cmd_run(run_opt, std::cout, std::cerr);
  }
  if (compare->parsed()) return io::cmd_compare(cmp_opt, std::cout, std::cerr);
  if (gradcheck->parsed()) return io::cmd_gradcheck(gc_opt, std::cout, std::cerr);
  if (design->parsed()) {
    if (!weights_text.empty()) {
      std::stringstream ss(weights_text);
      std::string part;
      std::vector<double> w;
      try {
        while (std::getline(ss, part, ',')) w.push_back(std::stod(part));
      } catch (const std::exception&) {
        w.clear();
      }
      if (w.size() != 3) {
        std::cerr << "error: --weights expects three comma-separated numbers\n";
        return io::kValidation;
      }
      design_opt.weights = {w[0], w[1], w[2]};
    }
    return io::cmd_design(design_opt, std::cout, std::cerr);
  }
  if (plot->parsed()) return io::cmd_plot(plot_csv, plot_out, std::cerr);
  if (canon->parsed()) {
    try {
      std::cout << io::emit_config(io::load_config(canon_path));
      return io::kOk;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return io::kValidation;
    }
  }
  return io::kValidation;
}
