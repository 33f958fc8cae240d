#include "fdqn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fdqn/version.hpp"

namespace fdqn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

[[noreturn]] void spec_error(const std::string& msg) {
  throw std::invalid_argument("spec error: " + msg);
}

NoiseModel parse_noise_model(const std::string& s) {
  if (s == "abs") return NoiseModel::abs;
  if (s == "rel") return NoiseModel::rel;
  spec_error("unknown noise_model '" + s + "' (expected abs or rel)");
}

Method parse_method(const std::string& s) {
  if (s == "fd_norm") return Method::fd_norm;
  if (s == "fd_ipqn") return Method::fd_ipqn;
  if (s == "fd_sg") return Method::fd_sg;
  spec_error("unknown method '" + s + "' (expected fd_norm, fd_ipqn or fd_sg)");
}

TestKind parse_test_kind(const std::string& s) {
  if (s == "norm") return TestKind::norm;
  if (s == "ipqn") return TestKind::ipqn;
  if (s == "fixed") return TestKind::fixed;
  spec_error("unknown test '" + s + "' (expected norm, ipqn or fixed)");
}

GrowthRule parse_growth(const std::string& s) {
  if (s == "exact_required") return GrowthRule::exact_required;
  if (s == "geometric") return GrowthRule::geometric;
  spec_error("unknown growth_rule '" + s + "' (expected exact_required or geometric)");
}

LsFailurePolicy parse_ls_policy(const std::string& s) {
  if (s == "stop") return LsFailurePolicy::stop;
  if (s == "resample") return LsFailurePolicy::resample;
  spec_error("unknown ls_failure_policy '" + s + "' (expected stop or resample)");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

MethodSpec parse_method_spec(const json& j) {
  if (!j.contains("method")) spec_error("methods entry missing key 'method'");
  MethodSpec m;
  m.cfg.method = parse_method(j.at("method").get<std::string>());
  m.cfg.nu = get_or(j, "nu", 1e-8);
  m.cfg.policy.theta = get_or(j, "theta", 0.9);
  m.cfg.policy.s0 = get_or<std::size_t>(j, "s0", 2);
  m.cfg.policy.s_max = get_or<std::size_t>(j, "s_max", 100000);
  m.cfg.policy.growth_rule = parse_growth(get_or<std::string>(j, "growth_rule", "exact_required"));
  m.cfg.policy.variance_subset_fraction = get_or(j, "variance_subset_fraction", 1.0);
  if (j.contains("test")) {
    m.cfg.policy.test_kind = parse_test_kind(j.at("test").get<std::string>());
    const bool coherent =
        m.cfg.policy.test_kind == TestKind::fixed ||
        (m.cfg.method == Method::fd_norm && m.cfg.policy.test_kind == TestKind::norm) ||
        (m.cfg.method == Method::fd_ipqn && m.cfg.policy.test_kind == TestKind::ipqn);
    if (!coherent)
      spec_error(std::string("key 'test' conflicts with method ") + to_string(m.cfg.method) +
                 " (use 'fixed' to disable the sample-size test)");
  } else {
    m.cfg.policy.test_kind =
        m.cfg.method == Method::fd_ipqn ? TestKind::ipqn
        : m.cfg.method == Method::fd_norm ? TestKind::norm
                                          : TestKind::fixed;
  }
  m.cfg.ls.c1 = get_or(j, "c1", 1e-4);
  m.cfg.ls.tau = get_or(j, "tau", 0.5);
  m.cfg.ls.max_backtracks = get_or(j, "max_backtracks", 30);
  m.cfg.lbfgs_m = get_or<std::size_t>(j, "m", 10);
  m.cfg.beta = get_or(j, "beta", 1e-2);
  m.cfg.gamma_init = get_or(j, "gamma_init", 1.0);
  m.cfg.alpha_max = get_or(j, "alpha_max", 1.0);
  m.cfg.ls_failure_policy = parse_ls_policy(get_or<std::string>(j, "ls_failure_policy", "stop"));
  m.cfg.max_iters = get_or<long long>(j, "max_iters", 1'000'000);
  if (j.contains("sg_alpha")) m.cfg.sg_alpha = j.at("sg_alpha").get<double>();
  if (j.contains("alpha_from")) m.alpha_from = j.at("alpha_from").get<std::string>();
  m.label = get_or<std::string>(j, "label", to_string(m.cfg.method));
  return m;
}

ExperimentSpec parse_spec_json(const json& j) {
  ExperimentSpec spec;
  if (!j.contains("problem")) spec_error("missing key 'problem'");
  const json& pj = j.at("problem");
  spec.problem_name = get_or<std::string>(pj, "name", "chebyquad");
  spec.d = get_or(pj, "d", 30);
  spec.p = get_or(pj, "p", 45);
  spec.noise_model = parse_noise_model(get_or<std::string>(pj, "noise_model", "abs"));
  spec.sigma = get_or(pj, "sigma", 0.0);

  spec.x0_scale = get_or(j, "x0_scale", 10.0);
  spec.budget = get_or<long long>(j, "budget", 10'000'000);
  spec.out_dir = get_or<std::string>(j, "out", "");

  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty())
    spec_error("key 'seeds' must be a non-empty array");
  for (const auto& s : j.at("seeds")) spec.seeds.push_back(s.get<std::uint64_t>());

  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty())
    spec_error("key 'methods' must be a non-empty array");
  for (const auto& mj : j.at("methods")) spec.methods.push_back(parse_method_spec(mj));

  if (spec.budget < 1) spec_error("key 'budget' must be positive");
  // Problem name is resolved now so unknown names fail before any run.
  make_problem(spec.problem_name, spec.d, spec.p, spec.noise_model, spec.sigma);
  return spec;
}

json spec_echo(const ExperimentSpec& spec) {
  json methods = json::array();
  for (const auto& m : spec.methods) {
    json mj{{"method", to_string(m.cfg.method)},
            {"label", m.label},
            {"nu", m.cfg.nu},
            {"theta", m.cfg.policy.theta},
            {"s0", m.cfg.policy.s0},
            {"s_max", m.cfg.policy.s_max},
            {"growth_rule", m.cfg.policy.growth_rule == GrowthRule::geometric ? "geometric"
                                                                              : "exact_required"},
            {"variance_subset_fraction", m.cfg.policy.variance_subset_fraction},
            {"test", m.cfg.policy.test_kind == TestKind::norm   ? "norm"
                     : m.cfg.policy.test_kind == TestKind::ipqn ? "ipqn"
                                                                : "fixed"},
            {"c1", m.cfg.ls.c1},
            {"tau", m.cfg.ls.tau},
            {"max_backtracks", m.cfg.ls.max_backtracks},
            {"m", m.cfg.lbfgs_m},
            {"beta", m.cfg.beta},
            {"gamma_init", m.cfg.gamma_init},
            {"alpha_max", m.cfg.alpha_max},
            {"ls_failure_policy",
             m.cfg.ls_failure_policy == LsFailurePolicy::stop ? "stop" : "resample"},
            {"max_iters", m.cfg.max_iters}};
    if (m.cfg.sg_alpha) mj["sg_alpha"] = *m.cfg.sg_alpha;
    if (m.alpha_from) mj["alpha_from"] = *m.alpha_from;
    methods.push_back(mj);
  }
  return json{{"problem",
               {{"name", spec.problem_name},
                {"d", spec.d},
                {"p", spec.p},
                {"noise_model", spec.noise_model == NoiseModel::abs ? "abs" : "rel"},
                {"sigma", spec.sigma}}},
              {"x0_scale", spec.x0_scale},
              {"budget", spec.budget},
              {"seeds", spec.seeds},
              {"methods", methods}};
}

Problem build_problem(const ExperimentSpec& spec, double f_star) {
  Problem prob = make_problem(spec.problem_name, spec.d, spec.p, spec.noise_model, spec.sigma);
  prob.f_star = f_star;
  return prob;
}

double reference_f_star(const ExperimentSpec& spec) {
  Problem noise_free = make_problem(spec.problem_name, spec.d, spec.p, spec.noise_model, 0.0);
  return solve_reference(noise_free).f_star;
}

std::string cell_file_name(const MethodSpec& m, std::uint64_t seed) {
  return m.label + "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("spec parse error at line " +
                                std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  return parse_spec_json(j);
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec_text(ss.str());
}

void write_records_csv(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream out(path, std::ios::binary);  // LF endings on every platform
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "k,batch_size,alpha,f_sampled,f_true,err,grad_norm_est,test_passed,ls_status,cum_evals\n";
  for (const auto& r : records) {
    out << r.k << ',' << r.batch_size << ',' << format_double(r.alpha) << ','
        << format_double(r.f_sampled) << ',' << format_double(r.f_true) << ','
        << format_double(r.err) << ',' << format_double(r.grad_norm_est) << ','
        << (r.test_passed ? 1 : 0) << ',' << to_string(r.ls_status) << ',' << r.cum_evals << '\n';
  }
}

std::vector<IterationRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  const std::string expected =
      "k,batch_size,alpha,f_sampled,f_true,err,grad_norm_est,test_passed,ls_status,cum_evals";
  if (line != expected) throw std::runtime_error("unexpected csv header in " + path);

  std::vector<IterationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 10) throw std::runtime_error("malformed csv row in " + path);
    IterationRecord r;
    r.k = std::stoll(cols[0]);
    r.batch_size = static_cast<std::size_t>(std::stoull(cols[1]));
    r.alpha = std::stod(cols[2]);
    r.f_sampled = std::stod(cols[3]);
    r.f_true = std::stod(cols[4]);
    r.err = std::stod(cols[5]);
    r.grad_norm_est = std::stod(cols[6]);
    r.test_passed = cols[7] == "1";
    r.ls_status = cols[8] == "accepted" ? LsStatus::accepted
                  : cols[8] == "failed" ? LsStatus::failed
                                        : LsStatus::none;
    r.cum_evals = std::stoll(cols[9]);
    records.push_back(r);
  }
  return records;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir, int jobs) {
  fs::create_directories(out_dir);

  ExperimentResult result;
  result.f_star = reference_f_star(spec);
  const Problem prob = build_problem(spec, result.f_star);
  const Eigen::VectorXd x0 = spec.x0_scale * prob.x_standard;

  struct CellJob {
    MethodSpec method;
    std::uint64_t seed;
  };
  std::vector<CellJob> cell_jobs;
  for (const auto& m : spec.methods) {
    MethodSpec resolved = m;
    if (resolved.cfg.method == Method::fd_sg && !resolved.cfg.sg_alpha && resolved.alpha_from) {
      std::ifstream in(*resolved.alpha_from);
      if (!in) spec_error("cannot open tune manifest: " + *resolved.alpha_from);
      json tj = json::parse(in);
      resolved.cfg.sg_alpha = tj.at("best_alpha").get<double>();
    }
    for (std::uint64_t seed : spec.seeds) cell_jobs.push_back({resolved, seed});
  }

  const auto run_cell = [&](const CellJob& job) -> CellResult {
    CellResult cell;
    cell.method = job.method.label;
    cell.seed = job.seed;
    cell.csv_path = (fs::path(out_dir) / cell_file_name(job.method, job.seed)).string();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      SolverConfig cfg = job.method.cfg;
      cfg.master_seed = job.seed;
      cfg.max_evals = spec.budget;
      const RunResult rr = run(prob, x0, cfg);
      write_records_csv(cell.csv_path, rr.records);
      cell.stop_reason = rr.stop_reason;
      cell.evals = rr.total_evals;
      cell.iterations = static_cast<long long>(rr.records.size());
      if (!rr.records.empty()) {
        cell.final_f_true = rr.records.back().f_true;
        cell.final_err = rr.records.back().err;
      } else {
        cell.final_f_true = true_objective(prob, x0);
        cell.final_err = cell.final_f_true - result.f_star;
      }
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    cell.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return cell;
  };

  result.cells.resize(cell_jobs.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < cell_jobs.size(); ++i) result.cells[i] = run_cell(cell_jobs[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    const int n_workers = std::min<int>(jobs, static_cast<int>(cell_jobs.size()));
    for (int w = 0; w < n_workers; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < cell_jobs.size(); i = next.fetch_add(1))
          result.cells[i] = run_cell(cell_jobs[i]);
      }));
    }
    for (auto& w : workers) w.get();
  }

  result.all_ok = std::all_of(result.cells.begin(), result.cells.end(),
                              [](const CellResult& c) { return c.ok; });

  // The manifest is written once, after all cells settle.
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back(json{{"method", c.method},
                         {"seed", c.seed},
                         {"csv", fs::path(c.csv_path).filename().string()},
                         {"stop_reason", to_string(c.stop_reason)},
                         {"final_f_true", c.final_f_true},
                         {"final_err", c.final_err},
                         {"evals", c.evals},
                         {"iterations", c.iterations},
                         {"wall_seconds", c.wall_seconds},
                         {"ok", c.ok},
                         {"error", c.error}});
  }
  json manifest{{"library", std::string("fdqn ") + kVersion},
                {"spec", spec_echo(spec)},
                {"f_star", result.f_star},
                {"cells", cells}};
  result.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream mf(result.manifest_path, std::ios::binary);
  mf << manifest.dump(2) << '\n';
  return result;
}

TuneOutput run_tune(const ExperimentSpec& spec, const std::string& out_dir) {
  const auto it = std::find_if(spec.methods.begin(), spec.methods.end(), [](const MethodSpec& m) {
    return m.cfg.method == Method::fd_sg;
  });
  if (it == spec.methods.end()) spec_error("tune needs an fd_sg entry in 'methods'");

  fs::create_directories(out_dir);
  const double f_star = reference_f_star(spec);
  const Problem prob = build_problem(spec, f_star);
  const Eigen::VectorXd x0 = spec.x0_scale * prob.x_standard;

  SolverConfig cfg = it->cfg;
  cfg.master_seed = spec.seeds.front();

  TuneOutput out;
  out.result = tune_fd_sg(prob, x0, cfg, spec.budget);

  out.grid_csv_path = (fs::path(out_dir) / "tune_grid.csv").string();
  std::ofstream grid(out.grid_csv_path, std::ios::binary);
  grid << "j,alpha,final_f_true,final_err,stop_reason,evals\n";
  for (const auto& t : out.result.trials) {
    grid << t.j << ',' << format_double(t.alpha) << ',' << format_double(t.final_f_true) << ','
         << format_double(t.final_err) << ',' << to_string(t.stop_reason) << ',' << t.evals
         << '\n';
  }
  grid.close();

  json manifest{{"library", std::string("fdqn ") + kVersion},
                {"spec", spec_echo(spec)},
                {"f_star", f_star},
                {"grid_csv", fs::path(out.grid_csv_path).filename().string()},
                {"tune_seed", spec.seeds.front()},
                {"best_alpha", out.result.best_alpha},
                {"best_j", out.result.best_j}};
  out.manifest_path = (fs::path(out_dir) / "tune_manifest.json").string();
  std::ofstream mf(out.manifest_path, std::ios::binary);
  mf << manifest.dump(2) << '\n';
  return out;
}

long long write_report(const std::vector<std::string>& manifest_paths,
                       const std::string& out_csv_path, std::ostream& summary) {
  if (manifest_paths.empty()) throw std::invalid_argument("report needs at least one manifest");

  json first_problem;
  struct Final {
    std::string method;
    double err;
  };
  std::vector<Final> finals;

  std::ofstream out(out_csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + out_csv_path);
  out << "method,seed,cum_evals,err\n";

  long long rows = 0;
  for (const auto& mp : manifest_paths) {
    std::ifstream in(mp, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open manifest: " + mp);
    const json manifest = json::parse(in);
    const json problem = manifest.at("spec").at("problem");
    if (first_problem.is_null()) {
      first_problem = problem;
    } else if (problem != first_problem) {
      throw std::invalid_argument("manifest " + mp +
                                  " describes a different problem than the first manifest; "
                                  "refusing to mix runs in one report");
    }
    const fs::path dir = fs::path(mp).parent_path();
    for (const auto& cell : manifest.at("cells")) {
      if (!cell.at("ok").get<bool>()) continue;
      const std::string method = cell.at("method").get<std::string>();
      const auto seed = cell.at("seed").get<std::uint64_t>();
      const auto records = read_records_csv((dir / cell.at("csv").get<std::string>()).string());
      for (const auto& r : records) {
        out << method << ',' << seed << ',' << r.cum_evals << ',' << format_double(r.err) << '\n';
        ++rows;
      }
      if (!records.empty()) finals.push_back({method, records.back().err});
    }
  }

  // Median of final errors per method, in first-appearance order.
  std::vector<std::string> order;
  for (const auto& f : finals)
    if (std::find(order.begin(), order.end(), f.method) == order.end()) order.push_back(f.method);

  summary << "method,median_final_err,runs\n";
  for (const auto& method : order) {
    std::vector<double> errs;
    for (const auto& f : finals)
      if (f.method == method) errs.push_back(f.err);
    std::sort(errs.begin(), errs.end());
    const std::size_t n = errs.size();
    const double median = n % 2 == 1 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
    summary << method << ',' << format_double(median) << ',' << n << '\n';
  }
  return rows;
}

}  // namespace fdqn
