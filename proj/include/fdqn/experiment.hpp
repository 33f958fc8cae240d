#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdqn/problems.hpp"
#include "fdqn/solver.hpp"

namespace fdqn {

// One entry of the spec's methods list: a solver configuration plus its
// report label and an optional tune-manifest reference for fd_sg.
struct MethodSpec {
  SolverConfig cfg;
  std::string label;
  std::optional<std::string> alpha_from;  // path of a tune manifest to read sg_alpha from
};

struct ExperimentSpec {
  std::string problem_name = "chebyquad";
  int d = 30;
  int p = 45;
  NoiseModel noise_model = NoiseModel::abs;
  double sigma = 0.0;
  double x0_scale = 10.0;  // x0 = x0_scale * x_standard
  long long budget = 10'000'000;
  std::vector<std::uint64_t> seeds;
  std::vector<MethodSpec> methods;
  std::string out_dir;  // may be overridden by --out / FDQN_OUT
};

// Parses and validates the JSON experiment spec. Parse errors carry the line
// number; validation errors name the offending key.
ExperimentSpec parse_spec_file(const std::string& path);
ExperimentSpec parse_spec_text(const std::string& text);

struct CellResult {
  std::string method;
  std::uint64_t seed = 0;
  std::string csv_path;
  StopReason stop_reason = StopReason::budget;
  double final_f_true = 0.0;
  double final_err = 0.0;
  long long evals = 0;
  long long iterations = 0;
  double wall_seconds = 0.0;
  bool ok = false;
  std::string error;  // set when the cell failed; other cells still run
};

struct ExperimentResult {
  double f_star = 0.0;
  std::vector<CellResult> cells;
  std::string manifest_path;
  bool all_ok = false;
};

// Executes every (method x seed) cell, one CSV per cell plus a manifest
// echoing the spec, F*, stop reasons and wall times. jobs > 1 runs cells
// concurrently; outputs are per-cell so runs never share files.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir, int jobs = 1);

struct TuneOutput {
  TuneResult result;
  std::string grid_csv_path;
  std::string manifest_path;
};

// Runs the fd_sg steplength grid for the spec's fd_sg entry and records the
// chosen alpha in a manifest reusable by run (via alpha_from).
TuneOutput run_tune(const ExperimentSpec& spec, const std::string& out_dir);

// Long-format plot CSV (method,seed,cum_evals,err) from run manifests, plus a
// median-final-error summary per method written to `summary`. Refuses
// manifests with mismatched problems. Returns the number of rows written.
long long write_report(const std::vector<std::string>& manifest_paths,
                       const std::string& out_csv_path, std::ostream& summary);

// Telemetry CSV schema (fixed): one row per IterationRecord, header
// k,batch_size,alpha,f_sampled,f_true,err,grad_norm_est,test_passed,ls_status,cum_evals
void write_records_csv(const std::string& path, const std::vector<IterationRecord>& records);
std::vector<IterationRecord> read_records_csv(const std::string& path);

// Full-precision decimal formatting (17 significant digits) used for every
// float written to CSV or manifest, so replays are byte-identical.
std::string format_double(double v);

}  // namespace fdqn
