#include "fediff/bench_harness.hpp"

#include "fediff/csv_io.hpp"
#include "fediff/derivative_recon.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace fediff {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& file) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open output file: " + file.string());
  return os;
}

void check_written(const std::ofstream& os, const fs::path& file) {
  if (!os) throw std::runtime_error("failed writing output file: " + file.string());
}

std::vector<double> sample(double (*f)(double), const std::vector<double>& x) {
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), f);
  return y;
}

void write_manifest(const fs::path& file, const BenchSpec& spec, const BenchContext& ctx) {
  nlohmann::ordered_json j;
  j["command"] = "benchmark";
  j["interval"] = {spec.a, spec.b};
  const auto& c = ctx.config();
  j["m1"] = {{"n", c.n}, {"gamma", c.gamma}, {"T", c.T}, {"r", c.r}, {"rho", c.rho},
             {"m", c.m}, {"L", c.L}, {"M", c.M}};
  if (spec.delta_floor) j["m1"]["delta_floor"] = *spec.delta_floor;
  else j["m1"]["delta_floor"] = "1e-12*||y||/sqrt(M)";
  if (std::find(spec.methods.begin(), spec.methods.end(), Method::m2) != spec.methods.end()) {
    const auto& m2 = ctx.m2_solver().config();
    j["m2"] = {{"T2", m2.T2}, {"gamma2", m2.gamma2}, {"n2", m2.n2}, {"C", m2.C},
               {"alpha_lo", m2.alpha_lo}, {"alpha_hi", m2.alpha_hi}, {"rel_tol", m2.rel_tol},
               {"max_iter", m2.max_iter}, {"clamp_to_bracket", m2.clamp_to_bracket}};
  }
  std::vector<std::string> fns, methods;
  for (auto f : spec.functions) fns.push_back(test_function(f).name);
  for (auto m : spec.methods) methods.emplace_back(to_string(m));
  j["functions"] = fns;
  j["methods"] = methods;
  j["deltas"] = spec.deltas;
  j["seeds"] = spec.seeds;
  j["noise"] = "uniform on [-delta1, delta1], mt19937_64";
  auto os = open_output(file);
  os << j.dump(2) << '\n';
  check_written(os, file);
}

void write_cell(const fs::path& dir, const CellResult& cell) {
  const std::string stem = cell_name(cell.record);
  std::vector<double> err(cell.x.size());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = cell.dfdx[i] - cell.exact[i];
  write_columns_csv(dir / (stem + ".csv"), {"x", "dfdx", "exact", "error"},
                    {&cell.x, &cell.dfdx, &cell.exact, &err});
  if (cell.partition) {
    const fs::path trace = dir / (stem + ".trace.tsv");
    auto os = open_output(trace);
    write_partition_trace(os, *cell.partition);
    check_written(os, trace);
  }
}

struct CellColumns {
  std::vector<double> x, dfdx, exact;
};

CellColumns read_cell(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open cell file: " + file.string());
  CellColumns c;
  std::string line;
  std::getline(is, line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v[4];
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
      const auto next = line.find(',', pos);
      try {
        v[k] = std::stod(line.substr(pos, next - pos));
      } catch (const std::exception&) {
        throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": malformed row");
      }
      pos = next == std::string::npos ? line.size() : next + 1;
    }
    c.x.push_back(v[0]);
    c.dfdx.push_back(v[1]);
    c.exact.push_back(v[2]);
  }
  return c;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::m1 ? "m1" : "m2"; }

std::optional<Method> parse_method(std::string_view name) {
  if (name == "m1") return Method::m1;
  if (name == "m2") return Method::m2;
  return std::nullopt;
}

std::vector<double> add_noise(std::span<const double> values, double delta1, std::uint64_t seed) {
  if (!(delta1 >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  std::vector<double> out(values.begin(), values.end());
  if (delta1 == 0.0) return out;
  std::mt19937_64 gen(seed);
  for (double& v : out) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    v += delta1 * (2.0 * u - 1.0);
  }
  return out;
}

double relative_error(std::span<const double> approx, std::span<const double> exact) {
  if (approx.size() != exact.size() || exact.empty())
    throw std::invalid_argument("relative error needs two non-empty vectors of equal length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = exact[i] - approx[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative error is undefined for an exact vector of zeros");
  return std::sqrt(num / den);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BenchContext::BenchContext(const SpectralConfig& cfg, double a, double b, double m2_C,
                           std::optional<double> delta_floor)
    : ops_(cfg), a_(a), b_(b), m2_C_(m2_C), delta_floor_(delta_floor) {
  if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
}

const M2Solver& BenchContext::m2_solver() const {
  if (!m2_) {
    M2Config cfg = make_m2_config(config().M, 2.0, 2.0, m2_C_);
    cfg.clamp_to_bracket = true;
    m2_.emplace(cfg, a_, b_, config().M);
  }
  return *m2_;
}

CellResult BenchContext::run_cell(FunctionId fn, Method method, double delta1,
                                  std::uint64_t seed) const {
  const auto& f = test_function(fn);
  const auto M = config().M;
  CellResult cell;
  cell.x = uniform_grid(a_, b_, M);
  cell.exact = sample(f.deriv, cell.x);
  const std::vector<double> noisy = add_noise(sample(f.eval, cell.x), delta1, seed);

  const auto start = std::chrono::steady_clock::now();
  if (method == Method::m1) {
    PartitionOptions opts;
    opts.delta_floor = delta_floor_;
    PartitionResult part = recursive_fit(a_, b_, noisy, delta1, ops_, opts);
    cell.dfdx = reconstruct_derivative(part, ops_, a_, b_).dvalues;
    cell.record.leaf_count = static_cast<int>(part.leaves.size());
    cell.partition = std::move(part);
  } else {
    const auto& solver = m2_solver();
    const double delta = delta1 * std::sqrt(static_cast<double>(M) / 3.0);
    const M2Fit fit = m2_fit(noisy, delta, solver);
    cell.dfdx = m2_derivative(fit, solver.config(), a_, b_, M);
    cell.record.alpha = fit.alpha;
  }
  const auto stop = std::chrono::steady_clock::now();

  cell.record.function = fn;
  cell.record.method = method;
  cell.record.delta1 = delta1;
  cell.record.seed = seed;
  cell.record.re = relative_error(cell.dfdx, cell.exact);
  cell.record.wall_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return cell;
}

std::string cell_name(const BenchRecord& r) {
  return test_function(r.function).name + "_" + std::string(to_string(r.method)) + "_d" +
         format_double(r.delta1) + "_s" + std::to_string(r.seed);
}

void write_summary_csv(const fs::path& file, const std::vector<BenchRecord>& records) {
  auto os = open_output(file);
  os << "function,method,delta1,seed,re,leaf_count,alpha\n";
  for (const auto& r : records) {
    os << test_function(r.function).name << ',' << to_string(r.method) << ','
       << format_double(r.delta1) << ',' << r.seed << ',' << format_double(r.re) << ',';
    if (r.method == Method::m1) os << r.leaf_count << ',';
    else os << ',' << format_double(r.alpha);
    os << '\n';
  }
  check_written(os, file);
}

std::vector<BenchRecord> run_benchmark(const BenchSpec& spec,
                                       const std::optional<fs::path>& outdir) {
  if (spec.functions.empty() || spec.methods.empty() || spec.deltas.empty() || spec.seeds.empty())
    throw std::invalid_argument("benchmark sweep is empty");
  for (double d : spec.deltas)
    if (!(d >= 0.0)) throw std::invalid_argument("noise levels must be >= 0");

  const BenchContext ctx(spec.config, spec.a, spec.b, spec.m2_C, spec.delta_floor);
  if (outdir) {
    fs::create_directories(*outdir / "cells");
    write_manifest(*outdir / "manifest.json", spec, ctx);
  }

  std::vector<BenchRecord> records;
  for (auto fn : spec.functions)
    for (auto method : spec.methods)
      for (double delta : spec.deltas)
        for (auto seed : spec.seeds) {
          CellResult cell = ctx.run_cell(fn, method, delta, seed);
          if (outdir) write_cell(*outdir / "cells", cell);
          records.push_back(cell.record);
        }

  if (outdir) {
    write_summary_csv(*outdir / "summary.csv", records);
    const fs::path timings = *outdir / "timings.csv";
    auto os = open_output(timings);
    os << "function,method,delta1,seed,wall_time_ms\n";
    for (const auto& r : records)
      os << test_function(r.function).name << ',' << to_string(r.method) << ','
         << format_double(r.delta1) << ',' << r.seed << ',' << r.wall_time_ms << '\n';
    check_written(os, timings);
  }
  return records;
}

void emit_plotdata(const std::vector<BenchRecord>& records, const fs::path& outdir) {
  if (records.empty()) throw std::invalid_argument("no benchmark records to plot");
  const fs::path plot = outdir / "plot";
  const fs::path cells = outdir / "cells";
  fs::create_directories(plot);

  // Panel (b): median RE per (method, delta1), one file per function.
  std::map<FunctionId, std::map<std::pair<Method, double>, std::vector<double>>> re_groups;
  for (const auto& r : records) re_groups[r.function][{r.method, r.delta1}].push_back(r.re);
  for (const auto& [fn, groups] : re_groups) {
    const fs::path file = plot / ("re_" + test_function(fn).name + ".tsv");
    auto os = open_output(file);
    os << "method\tdelta1\tmedian_re\tseeds\n";
    for (const auto& [key, values] : groups)
      os << to_string(key.first) << '\t' << format_double(key.second) << '\t'
         << format_double(median(values)) << '\t' << values.size() << '\n';
    check_written(os, file);
  }

  // Panel (c): derivative overlay at the lowest seed of each (function, delta1).
  std::map<std::pair<FunctionId, double>, std::map<Method, const BenchRecord*>> overlay;
  for (const auto& r : records) {
    auto& slot = overlay[{r.function, r.delta1}][r.method];
    if (slot == nullptr || r.seed < slot->seed) slot = &r;
  }
  for (const auto& [key, by_method] : overlay) {
    std::vector<std::string> header{"x", "exact"};
    std::vector<CellColumns> cols;
    for (const auto& [method, rec] : by_method) {
      header.push_back(std::string(to_string(method)) + "_s" + std::to_string(rec->seed));
      cols.push_back(read_cell(cells / (cell_name(*rec) + ".csv")));
    }
    const fs::path file =
        plot / ("deriv_" + test_function(key.first).name + "_d" + format_double(key.second) + ".tsv");
    auto os = open_output(file);
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "\t" : "") << header[j];
    os << '\n';
    for (std::size_t i = 0; i < cols.front().x.size(); ++i) {
      os << format_double(cols.front().x[i]) << '\t' << format_double(cols.front().exact[i]);
      for (const auto& c : cols) os << '\t' << format_double(c.dfdx[i]);
      os << '\n';
    }
    check_written(os, file);
  }

  // Panel (d): pointwise error and interior leaf boundaries.
  for (const auto& r : records) {
    const std::string stem = cell_name(r);
    const CellColumns c = read_cell(cells / (stem + ".csv"));
    const fs::path file = plot / ("error_" + stem + ".tsv");
    auto os = open_output(file);
    os << "kind\tx\tabs_error\n";
    for (std::size_t i = 0; i < c.x.size(); ++i)
      os << "error\t" << format_double(c.x[i]) << '\t' << format_double(std::abs(c.dfdx[i] - c.exact[i]))
         << '\n';
    if (r.method == Method::m1) {
      const fs::path trace_file = cells / (stem + ".trace.tsv");
      std::ifstream ts(trace_file);
      if (!ts) throw std::runtime_error("cannot open partition trace: " + trace_file.string());
      const auto trace = read_partition_trace(ts);
      for (std::size_t k = 0; k + 1 < trace.size(); ++k)
        os << "boundary\t" << format_double(trace[k].b) << "\t\n";
    }
    check_written(os, file);
  }
}

}  // namespace fediff
