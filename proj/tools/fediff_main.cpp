// Command line front end: differentiate, benchmark, precompute.

#include "fediff/adaptive_partition.hpp"
#include "fediff/baseline_m2.hpp"
#include "fediff/bench_harness.hpp"
#include "fediff/csv_io.hpp"
#include "fediff/derivative_recon.hpp"
#include "fediff/spectral_core.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fediff;

namespace {

struct ConfigFlags {
  int n = 9;
  double gamma = 1.0;
  double T = 6.0;
  int r = 6;
  double rho = 2.0;

  void add(CLI::App* app) {
    app->add_option("--n", n, "Maximum frequency index")->capture_default_str();
    app->add_option("--gamma", gamma, "Oversampling ratio")->capture_default_str();
    app->add_option("--T", T, "Extension ratio")->capture_default_str();
    app->add_option("--r", r, "Maximum recursion depth")->capture_default_str();
    app->add_option("--rho", rho, "Acceptance relaxation")->capture_default_str();
  }

  SpectralConfig build() const { return build_config(n, gamma, T, r, rho); }
};

nlohmann::ordered_json config_json(const SpectralConfig& c) {
  return {{"n", c.n}, {"gamma", c.gamma}, {"T", c.T}, {"r", c.r}, {"rho", c.rho},
          {"m", c.m}, {"L", c.L}, {"M", c.M}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<FunctionId> parse_functions(const std::string& spec) {
  std::vector<FunctionId> out;
  for (const auto& item : split_list(spec)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_function_id(item.substr(0, dots));
      const auto hi = parse_function_id(item.substr(dots + 2));
      if (!lo || !hi || *hi < *lo) throw std::invalid_argument("bad function range: " + item);
      for (int k = static_cast<int>(*lo); k <= static_cast<int>(*hi); ++k)
        out.push_back(static_cast<FunctionId>(k));
    } else {
      const auto id = parse_function_id(item);
      if (!id) throw std::invalid_argument("unknown function id: " + item);
      out.push_back(*id);
    }
  }
  return out;
}

std::string valid_count_hint(std::int64_t rows, const SpectralConfig& cfg) {
  // Counts 2^d (m-1) + 1 bracketing the given row count.
  std::int64_t below = 0, above = 0;
  for (int d = 0; d < 40; ++d) {
    const std::int64_t c = (std::int64_t{1} << d) * (cfg.m - 1) + 1;
    if (c <= rows) below = c;
    if (c >= rows) {
      above = c;
      break;
    }
  }
  std::string hint = "the configuration requires M = " + std::to_string(cfg.M) + " samples";
  hint += "; nearest valid counts for m = " + std::to_string(cfg.m) + ": ";
  if (below > 0) hint += std::to_string(below);
  if (below > 0 && above > 0 && above != below) hint += ", ";
  if (above > 0 && above != below) hint += std::to_string(above);
  hint += " (adjust --r or resample)";
  return hint;
}

int run_differentiate(const std::string& input, std::optional<double> a_opt,
                      std::optional<double> b_opt, double delta1, const ConfigFlags& flags,
                      const std::string& method_name, int order, const std::string& out,
                      bool with_function, const std::string& trace, const std::string& cache,
                      std::optional<double> delta_floor) {
  const SpectralConfig cfg = flags.build();
  const auto method = parse_method(method_name);
  if (!method) throw std::invalid_argument("unknown method: " + method_name);
  if (!(delta1 >= 0.0)) throw std::invalid_argument("--delta1 must be >= 0");

  SampleTable table = read_samples_csv(input);
  double a = 0.0, b = 0.0;
  if (a_opt && b_opt) {
    a = *a_opt;
    b = *b_opt;
  } else if (table.x && table.x->size() >= 2) {
    a = table.x->front();
    b = table.x->back();
  } else {
    throw std::invalid_argument("--a and --b are required when the input has no x column");
  }
  const auto rows = static_cast<std::int64_t>(table.y.size());
  if (rows != cfg.M)
    throw std::runtime_error("input has " + std::to_string(rows) + " rows; " +
                             valid_count_hint(rows, cfg));
  if (table.x) {
    const std::vector<double> grid = uniform_grid(a, b, cfg.M);
    const double tol = 1e-9 * (std::abs(a) + std::abs(b) + 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs((*table.x)[i] - grid[i]) > tol)
        throw std::runtime_error("x column is not the uniform grid on [a, b] (row " +
                                 std::to_string(i + 2) + ")");
  }

  nlohmann::ordered_json manifest;
  manifest["command"] = "differentiate";
  manifest["input"] = input;
  manifest["interval"] = {a, b};
  manifest["delta1"] = delta1;
  manifest["method"] = method_name;
  manifest["order"] = order;

  std::vector<double> x, d, fvals;
  if (*method == Method::m1) {
    const PrecomputedOperators ops =
        cache.empty() ? build_operators(cfg) : PrecomputedOperators::load_or_build(cache, cfg);
    PartitionOptions opts;
    opts.delta_floor = delta_floor;
    const PartitionResult part = recursive_fit(a, b, table.y, delta1, ops, opts);
    DerivativeResult res = reconstruct_derivative_order(part, ops, a, b, order);
    x = std::move(res.x);
    d = std::move(res.dvalues);
    if (with_function) fvals = reconstruct_function(part, ops, a, b);
    if (!trace.empty()) {
      std::ofstream ts(trace);
      if (!ts) throw std::runtime_error("cannot open trace file: " + trace);
      write_partition_trace(ts, part);
    }
    manifest["config"] = config_json(cfg);
    manifest["delta_used"] = part.delta_used;
    manifest["leaves"] = part.leaves.size();
  } else {
    if (order != 1) throw std::invalid_argument("the m2 baseline supports --order 1 only");
    if (!(delta1 > 0.0)) throw std::invalid_argument("the m2 baseline needs --delta1 > 0");
    const M2Solver solver(make_m2_config(cfg.M), a, b, cfg.M);
    const M2Fit fit = m2_fit(table.y, delta1 * std::sqrt(static_cast<double>(cfg.M) / 3.0), solver);
    x = uniform_grid(a, b, cfg.M);
    d = m2_derivative(fit, solver.config(), a, b, cfg.M);
    if (with_function) fvals = m2_evaluate(fit, solver.config(), a, b, cfg.M);
    const auto& c2 = solver.config();
    manifest["config"] = {{"M", cfg.M}, {"T2", c2.T2}, {"gamma2", c2.gamma2}, {"n2", c2.n2},
                          {"C", c2.C}, {"alpha_lo", c2.alpha_lo}, {"alpha_hi", c2.alpha_hi}};
    manifest["alpha"] = fit.alpha;
  }

  const std::string dname = order == 1 ? "dfdx" : "d" + std::to_string(order) + "fdx" + std::to_string(order);
  std::vector<std::string> header{"x", dname};
  std::vector<const std::vector<double>*> cols{&x, &d};
  if (with_function) {
    header.emplace_back("f_denoised");
    cols.push_back(&fvals);
  }
  write_columns_csv(out, header, cols);

  const fs::path manifest_path = out + ".manifest.json";
  std::ofstream ms(manifest_path);
  if (!ms) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
  ms << manifest.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable numerical differentiation of noisy samples by adaptive Fourier extension"};
  app.require_subcommand(1);

  // differentiate
  auto* diff = app.add_subcommand("differentiate", "Differentiate uniformly sampled noisy data");
  std::string input, out, method = "m1", trace, cache;
  std::optional<double> a_opt, b_opt, delta_floor;
  double delta1 = 0.0;
  int order = 1;
  bool with_function = false;
  ConfigFlags diff_flags;
  diff->add_option("--input", input, "CSV with header 'x,y' or 'y'")->required()->check(CLI::ExistingFile);
  diff->add_option("--a", a_opt, "Left end of the interval");
  diff->add_option("--b", b_opt, "Right end of the interval");
  diff->add_option("--delta1", delta1, "Pointwise noise bound")->required();
  diff_flags.add(diff);
  diff->add_option("--method", method, "m1 (adaptive) or m2 (baseline)")->capture_default_str();
  diff->add_option("--order", order, "Derivative order (m1: 1..4)")->capture_default_str();
  diff->add_option("--out", out, "Output CSV")->required();
  diff->add_flag("--with-function", with_function, "Add the denoised function column");
  diff->add_option("--trace", trace, "Write the partition trace (m1)");
  diff->add_option("--cache", cache, "Operator cache file (m1)");
  diff->add_option("--delta-floor", delta_floor, "Noise floor (default 1e-12*||y||/sqrt(M))");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run the test-function sweep");
  std::string functions = "f1..f6", deltas = "1e-2,1e-3,1e-4,1e-5", methods = "m1,m2", outdir;
  int seeds = 10;
  double ba = -1.0, bb = 1.0, m2_C = 1.1;
  ConfigFlags bench_flags;
  bench->add_option("--functions", functions, "Comma list or range, e.g. f1..f6")->capture_default_str();
  bench->add_option("--deltas", deltas, "Comma-separated noise levels")->capture_default_str();
  bench->add_option("--seeds", seeds, "Seeds 1..K per cell")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--methods", methods, "m1,m2")->capture_default_str();
  bench->add_option("--outdir", outdir, "Output directory")->required();
  bench->add_option("--a", ba, "Left end of the interval")->capture_default_str();
  bench->add_option("--b", bb, "Right end of the interval")->capture_default_str();
  bench->add_option("--m2-C", m2_C, "Baseline discrepancy constant")->capture_default_str();
  bench_flags.add(bench);

  // precompute
  auto* pre = app.add_subcommand("precompute", "Build and cache the shared operators");
  std::string cache_out;
  ConfigFlags pre_flags;
  pre->add_option("--cache", cache_out, "Cache file to write")->required();
  pre_flags.add(pre);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*diff) {
      return run_differentiate(input, a_opt, b_opt, delta1, diff_flags, method, order, out,
                               with_function, trace, cache, delta_floor);
    }
    if (*bench) {
      BenchSpec spec;
      spec.functions = parse_functions(functions);
      spec.methods.clear();
      for (const auto& m : split_list(methods)) {
        const auto parsed = parse_method(m);
        if (!parsed) throw std::invalid_argument("unknown method: " + m);
        spec.methods.push_back(*parsed);
      }
      for (const auto& d : split_list(deltas)) spec.deltas.push_back(std::stod(d));
      spec.seeds.clear();
      for (int s = 1; s <= seeds; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
      spec.a = ba;
      spec.b = bb;
      spec.m2_C = m2_C;
      spec.config = bench_flags.build();
      const auto start = std::chrono::steady_clock::now();
      const auto records = run_benchmark(spec, fs::path(outdir));
      emit_plotdata(records, outdir);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << records.size() << " cells in " << secs << " s; results in " << outdir << '\n';
      return 0;
    }
    if (*pre) {
      const SpectralConfig cfg = pre_flags.build();
      const auto start = std::chrono::steady_clock::now();
      const PrecomputedOperators ops = build_operators(cfg);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      ops.save(cache_out);
      std::cout << "m=" << cfg.m << " L=" << cfg.L << " M=" << cfg.M << " sigma_max=" << ops.S()(0)
                << " sigma_min=" << ops.S()(ops.S().size() - 1) << " built in " << ms << " ms -> "
                << cache_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
