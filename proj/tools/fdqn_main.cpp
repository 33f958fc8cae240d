#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdqn/experiment.hpp"
#include "fdqn/version.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& list) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

// Precedence: --out flag, then FDQN_OUT, then the spec's "out", then ./results.
std::string resolve_out_dir(const std::string& flag_out, const std::string& spec_out) {
  if (!flag_out.empty()) return flag_out;
  if (const char* env = std::getenv("FDQN_OUT"); env && *env) return env;
  if (!spec_out.empty()) return spec_out;
  return "results";
}

struct CommonArgs {
  std::string spec_path;
  std::string out_dir;
  std::string seeds;
  long long budget = 0;
  int jobs = 1;
};

fdqn::ExperimentSpec load_spec(const CommonArgs& args) {
  fdqn::ExperimentSpec spec = fdqn::parse_spec_file(args.spec_path);
  if (!args.seeds.empty()) spec.seeds = parse_seed_list(args.seeds);
  if (args.budget > 0) spec.budget = args.budget;
  if (spec.seeds.empty()) throw std::invalid_argument("no seeds given (spec 'seeds' or --seeds)");
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference stochastic quasi-Newton benchmark driver"};
  app.set_version_flag("--version", std::string("fdqn ") + fdqn::kVersion);
  app.require_subcommand(1);

  CommonArgs args;

  auto* run = app.add_subcommand("run", "Run every (method x seed) cell of an experiment spec");
  run->add_option("--spec", args.spec_path, "experiment spec (JSON)")->required();
  run->add_option("--out", args.out_dir, "output directory");
  run->add_option("--seeds", args.seeds, "comma-separated seed list overriding the spec");
  run->add_option("--budget", args.budget, "evaluation budget overriding the spec");
  run->add_option("--jobs", args.jobs, "number of cells to run concurrently")
      ->check(CLI::PositiveNumber);

  auto* tune = app.add_subcommand("tune", "Tune the fd_sg steplength over the 2^j grid");
  tune->add_option("--spec", args.spec_path, "experiment spec (JSON) with an fd_sg entry")
      ->required();
  tune->add_option("--out", args.out_dir, "output directory");
  tune->add_option("--seeds", args.seeds, "comma-separated seed list (first seed tunes)");
  tune->add_option("--budget", args.budget, "evaluation budget per grid trial");

  std::vector<std::string> manifests;
  std::string report_csv = "report.csv";
  auto* report = app.add_subcommand("report", "Plot-ready long CSV + median summary from manifests");
  report->add_option("manifests", manifests, "run manifest paths")->required()->expected(-1);
  report->add_option("--out", report_csv, "report CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto spec = load_spec(args);
      const std::string out = resolve_out_dir(args.out_dir, spec.out_dir);
      const auto result = fdqn::run_experiment(spec, out, args.jobs);
      std::cout << "F* = " << fdqn::format_double(result.f_star) << '\n';
      for (const auto& c : result.cells) {
        std::cout << c.method << " seed=" << c.seed;
        if (c.ok) {
          std::cout << " final_err=" << fdqn::format_double(c.final_err)
                    << " evals=" << c.evals << " stop=" << fdqn::to_string(c.stop_reason);
        } else {
          std::cout << " FAILED: " << c.error;
        }
        std::cout << '\n';
      }
      std::cout << "manifest: " << result.manifest_path << '\n';
      return result.all_ok ? 0 : 1;
    }
    if (tune->parsed()) {
      const auto spec = load_spec(args);
      const std::string out = resolve_out_dir(args.out_dir, spec.out_dir);
      const auto result = fdqn::run_tune(spec, out);
      std::cout << "best_alpha = " << fdqn::format_double(result.result.best_alpha)
                << " (2^" << result.result.best_j << ")\n"
                << "grid: " << result.grid_csv_path << '\n'
                << "manifest: " << result.manifest_path << '\n';
      return 0;
    }
    if (report->parsed()) {
      const long long rows = fdqn::write_report(manifests, report_csv, std::cout);
      std::cout << "wrote " << rows << " rows to " << report_csv << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
