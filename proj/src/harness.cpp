#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "isac/audit.hpp"
#include "isac/baselines.hpp"
#include "isac/central_opt.hpp"
#include "isac/decentral_opt.hpp"
#include "isac/sensing.hpp"

namespace isac {

namespace {

constexpr std::array<const char*, 4> kSchemeNames{"central", "decentral", "baseline1", "baseline2"};
constexpr std::array<const char*, 4> kSweepNames{"R_info", "P_max", "mse_target", "N"};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string short_num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::string to_string(SchemeKind s) { return kSchemeNames[static_cast<int>(s)]; }
std::string to_string(SweepVar v) { return kSweepNames[static_cast<int>(v)]; }

SchemeKind parse_scheme(const std::string& s) {
  for (size_t i = 0; i < kSchemeNames.size(); ++i)
    if (s == kSchemeNames[i]) return static_cast<SchemeKind>(i);
  throw ConfigError("unknown scheme: " + s);
}

SweepVar parse_sweep(const std::string& s) {
  for (size_t i = 0; i < kSweepNames.size(); ++i)
    if (s == kSweepNames[i]) return static_cast<SweepVar>(i);
  throw ConfigError("unknown sweep variable: " + s);
}

void ExperimentSpec::validate() const {
  if (schemes.empty()) throw ValidationError("no schemes selected");
  if (grid.empty()) throw ValidationError("empty sweep grid");
  for (size_t j = 1; j < grid.size(); ++j)
    if (!(grid[j] > grid[j - 1])) throw ValidationError("sweep grid must be strictly increasing");
  if (seeds < 1) throw ValidationError("seeds must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (mse_relative && sweep != SweepVar::mse_target) throw ValidationError("relative grid needs the mse_target sweep");
  if (sweep == SweepVar::mse_target || sweep == SweepVar::R_info)
    if (!(grid.front() > 0.0)) throw ValidationError("grid values must be positive");
  if (sweep == SweepVar::N)
    for (double g : grid)
      if (g < 1.0 || g != std::round(g)) throw ValidationError("N grid must hold positive integers");
  if (sweep == SweepVar::mse_target)
    for (SchemeKind s : schemes)
      if (s != SchemeKind::baseline2) throw ValidationError("mse_target sweep applies to baseline2 only");
  const bool b2 = std::find(schemes.begin(), schemes.end(), SchemeKind::baseline2) != schemes.end();
  if (b2 && sweep != SweepVar::mse_target && !(mse_target && *mse_target > 0.0))
    throw ValidationError("baseline2 needs an mse_target sweep or a positive mse_target");
}

SystemConfig ExperimentSpec::base_config() const {
  const SystemConfig base = full ? SystemConfig::full_default() : SystemConfig::desk_default();
  return config_path.empty() ? base : load_config(config_path, base);
}

SystemConfig point_config(const ExperimentSpec& spec, double point, std::uint64_t seed) {
  SystemConfig c = spec.base_config();
  c.rng_seed = seed;
  switch (spec.sweep) {
    case SweepVar::R_info:
      c.R_info = point;
      break;
    case SweepVar::P_max:
      c.P_max = point;
      break;
    case SweepVar::N:
      c.N = static_cast<int>(std::lround(point));
      break;
    case SweepVar::mse_target:
      break;
  }
  c.validate();
  return c;
}

namespace {

struct Task {
  SchemeKind scheme;
  int point_index;
  double point;
  std::uint64_t seed;
};

struct TaskOutput {
  ResultRow row;
  std::string trace, messages;
};

void fill_from_solution(ResultRow& row, const BeamformingSolution& sol, const Scenario& sc) {
  const PowerBreakdown pw = total_power(sol, sc);
  row.power_W = pw.total;
  row.power_dBm = watts_to_dbm(pw.total);
  row.per_bs_W = pw.per_bs;
  row.trace_q = centralized_fim(sol, sc).trace_crb();
  const AuditReport rep = audit_solution(sol, sc);
  row.power_ok = rep.power_ok;
  row.rate_ok = rep.rate_ok;
  row.leak_ok = rep.leak_ok;
  row.solution_json = solution_to_json(sol);
}

TaskOutput run_task(const ExperimentSpec& spec, const Task& task, const std::map<std::uint64_t, double>& adaptive) {
  TaskOutput out;
  ResultRow& row = out.row;
  row.scheme = task.scheme;
  row.point_index = task.point_index;
  row.point = task.point;
  row.seed = task.seed;
  std::ostringstream trace, messages;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Scenario sc = build_scenario(point_config(spec, task.point, task.seed));
    switch (task.scheme) {
      case SchemeKind::central: {
        CentralOptions opt;
        opt.trace = &trace;
        const CentralResult r = run_algorithm1(sc, opt);
        row.status = r.state.status;
        row.iterations = r.state.iterations;
        row.objective_history = r.state.objective_history;
        fill_from_solution(row, r.solution, sc);
        break;
      }
      case SchemeKind::decentral:
      case SchemeKind::baseline2: {
        DecentralOptions opt;
        opt.trace = &trace;
        opt.messages = &messages;
        DecentralResult r;
        if (task.scheme == SchemeKind::decentral) {
          r = run_algorithm2(sc, opt);
        } else {
          double target = spec.mse_target.value_or(0.0);
          if (spec.sweep == SweepVar::mse_target) {
            target = task.point;
            if (spec.mse_relative) {
              const auto it = adaptive.find(task.seed);
              if (it == adaptive.end()) throw Infeasible("adaptive reference run failed for this seed");
              target *= it->second;
            }
          }
          r = run_baseline2(sc, target, opt);
        }
        row.status = r.state.status;
        row.iterations = r.state.iterations;
        row.objective_history = r.state.objective_history;
        fill_from_solution(row, r.solution, sc);
        break;
      }
      case SchemeKind::baseline1: {
        const Baseline1Result r = run_baseline1(sc);
        row.status = r.status;
        row.iterations = 1;
        fill_from_solution(row, r.solution, sc);
        break;
      }
    }
  } catch (const Infeasible& e) {
    row.status = "infeasible";
    row.message = e.what();
  } catch (const std::exception& e) {
    row.status = "failed";
    row.message = e.what();
  }
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.trace = trace.str();
  out.messages = messages.str();
  return out;
}

template <typename F>
void parallel_for(size_t n, int workers, F&& f) {
  std::atomic<size_t> next{0};
  auto loop = [&] {
    for (size_t j = next++; j < n; j = next++) f(j);
  };
  const int extra = std::min<int>(workers, static_cast<int>(n)) - 1;
  std::vector<std::thread> pool;
  for (int w = 0; w < extra; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

std::string file_key(const ResultRow& r) {
  return to_string(r.scheme) + "_" + short_num(r.point) + "_" + std::to_string(r.seed);
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  spec.base_config();  // surfaces config errors before any work
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < spec.seeds; ++s) seeds.push_back(spec.first_seed + s);

  // per-seed adaptive MSE for relative grids
  std::map<std::uint64_t, double> adaptive;
  if (spec.mse_relative) {
    std::vector<double> mse(seeds.size(), -1.0);
    parallel_for(seeds.size(), spec.workers, [&](size_t j) {
      ExperimentSpec ref = spec;
      ref.sweep = SweepVar::R_info;
      const SystemConfig base = spec.base_config();
      ref.grid = {base.R_info};
      const TaskOutput o = run_task(ref, {SchemeKind::decentral, 0, base.R_info, seeds[j]}, {});
      if (o.row.solved()) mse[j] = o.row.trace_q;
    });
    for (size_t j = 0; j < seeds.size(); ++j)
      if (mse[j] > 0.0) adaptive[seeds[j]] = mse[j];
  }

  std::vector<Task> tasks;
  for (SchemeKind s : spec.schemes)
    for (size_t p = 0; p < spec.grid.size(); ++p)
      for (std::uint64_t seed : seeds) tasks.push_back({s, static_cast<int>(p), spec.grid[p], seed});

  ResultTable table;
  table.sweep = spec.sweep;
  table.rows.resize(tasks.size());
  const bool write = !spec.out_dir.empty();
  if (write) std::filesystem::create_directories(spec.out_dir);
  parallel_for(tasks.size(), spec.workers, [&](size_t j) {
    TaskOutput o = run_task(spec, tasks[j], adaptive);
    if (write && spec.write_traces) {
      const std::filesystem::path dir(spec.out_dir);
      const std::string key = file_key(o.row);
      write_file(dir / ("trace_" + key + ".jsonl"), o.trace);
      if (!o.messages.empty()) write_file(dir / ("messages_" + key + ".jsonl"), o.messages);
      if (o.row.solved()) write_file(dir / ("solution_" + key + ".json"), o.row.solution_json);
    }
    table.rows[j] = std::move(o.row);
  });
  if (write) write_file(std::filesystem::path(spec.out_dir) / "results.csv", results_csv(table));
  return table;
}

namespace {

const std::vector<std::string> kColumns{"scheme",    "sweep",      "point_index", "point",    "seed",
                                        "status",    "power_W",    "power_dBm",   "per_bs_W", "trace_q",
                                        "iterations", "wall_time_s", "power_ok",  "rate_ok",  "leak_ok",
                                        "message"};

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

std::string results_csv(const ResultTable& t, bool with_wall_time) {
  std::ostringstream os;
  for (size_t c = 0; c < kColumns.size(); ++c) os << (c ? "," : "") << kColumns[c];
  os << '\n';
  for (const ResultRow& r : t.rows) {
    std::string per_bs;
    for (size_t m = 0; m < r.per_bs_W.size(); ++m) per_bs += (m ? ";" : "") + num(r.per_bs_W[m]);
    const bool ok = r.solved() || r.power_W > 0.0;
    os << to_string(r.scheme) << ',' << to_string(t.sweep) << ',' << r.point_index << ',' << num(r.point) << ','
       << r.seed << ',' << r.status << ',' << (ok ? num(r.power_W) : "") << ',' << (ok ? num(r.power_dBm) : "")
       << ',' << per_bs << ',' << (ok ? num(r.trace_q) : "") << ',' << r.iterations << ','
       << (with_wall_time ? num(r.wall_time_s) : "") << ',' << r.power_ok << ',' << r.rate_ok << ',' << r.leak_ok
       << ',' << quoted(r.message) << '\n';
  }
  return os.str();
}

ResultTable read_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("results: empty input");
  const auto header = split_csv_line(line);
  std::map<std::string, size_t> col;
  for (size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  for (const auto& name : kColumns)
    if (!col.count(name)) throw ValidationError("results: missing column " + name);
  ResultTable t;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ValidationError("results: ragged row");
    auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    auto dbl = [&](const char* name) { return get(name).empty() ? 0.0 : std::stod(get(name)); };
    ResultRow r;
    r.scheme = parse_scheme(get("scheme"));
    if (first) t.sweep = parse_sweep(get("sweep"));
    first = false;
    r.point_index = std::stoi(get("point_index"));
    r.point = dbl("point");
    r.seed = std::stoull(get("seed"));
    r.status = get("status");
    r.power_W = dbl("power_W");
    r.power_dBm = dbl("power_dBm");
    std::istringstream bs(get("per_bs_W"));
    for (std::string v; std::getline(bs, v, ';');) r.per_bs_W.push_back(std::stod(v));
    r.trace_q = dbl("trace_q");
    r.iterations = std::stoi(get("iterations"));
    r.wall_time_s = dbl("wall_time_s");
    r.power_ok = get("power_ok") == "1";
    r.rate_ok = get("rate_ok") == "1";
    r.leak_ok = get("leak_ok") == "1";
    r.message = get("message");
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::array<bool, 3> reaudit(const ResultRow& row, const ExperimentSpec& spec) {
  if (!row.solved()) throw ValidationError("reaudit: row has no stored solution");
  const Scenario sc = build_scenario(point_config(spec, row.point, row.seed));
  const AuditReport rep = audit_solution(solution_from_json(row.solution_json), sc);
  return {rep.power_ok, rep.rate_ok, rep.leak_ok};
}

namespace {

void add_stats(Series& s, double x, const std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  s.x.push_back(x);
  s.mean.push_back(mean);
  s.stddev.push_back(v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0);
}

}  // namespace

Figure make_figure(const ResultTable& t, PlotKind kind) {
  Figure f;
  const std::string sweep = to_string(t.sweep);
  std::map<SchemeKind, std::map<int, std::vector<const ResultRow*>>> groups;
  for (const ResultRow& r : t.rows)
    if (r.power_W > 0.0) groups[r.scheme][r.point_index].push_back(&r);

  if (kind == PlotKind::convergence) {
    f.title = "Convergence";
    f.xlabel = "iteration";
    f.ylabel = "total power (dBm)";
    for (const auto& [scheme, points] : groups)
      for (const auto& [p, rows] : points) {
        size_t len = 0;
        for (const ResultRow* r : rows) len = std::max(len, r->objective_history.size());
        if (len == 0) continue;
        Series s;
        s.label = to_string(scheme) + " " + sweep + "=" + short_num(rows.front()->point);
        for (size_t n = 0; n < len; ++n) {
          std::vector<double> v;
          for (const ResultRow* r : rows)
            if (!r->objective_history.empty())
              v.push_back(watts_to_dbm(r->objective_history[std::min(n, r->objective_history.size() - 1)]));
          add_stats(s, static_cast<double>(n), v);
        }
        f.series.push_back(std::move(s));
      }
  } else {
    const bool mse_y = kind == PlotKind::mse_vs_sweep;
    f.title = mse_y ? "Sensing MSE" : "Total power";
    f.xlabel = kind == PlotKind::power_vs_mse ? "MSE target" : sweep;
    f.ylabel = mse_y ? "MSE (dB m^2)" : "total power (dBm)";
    f.log_x = kind == PlotKind::power_vs_mse;
    for (const auto& [scheme, points] : groups) {
      if (kind == PlotKind::power_vs_mse && scheme != SchemeKind::baseline2) continue;
      if (mse_y && scheme == SchemeKind::baseline2) continue;
      Series s;
      s.label = to_string(scheme);
      for (const auto& [p, rows] : points) {
        std::vector<double> v;
        for (const ResultRow* r : rows) v.push_back(mse_y ? 10.0 * std::log10(r->trace_q) : r->power_dBm);
        add_stats(s, rows.front()->point, v);
      }
      if (!s.x.empty()) f.series.push_back(std::move(s));
    }
  }
  if (f.series.empty()) throw ValidationError("no rows fit the requested plot");
  return f;
}

std::string figure_csv(const Figure& f) {
  std::ostringstream os;
  os << "series,x,mean,std\n";
  for (const Series& s : f.series)
    for (size_t j = 0; j < s.x.size(); ++j)
      os << quoted(s.label) << ',' << num(s.x[j]) << ',' << num(s.mean[j]) << ',' << num(s.stddev[j]) << '\n';
  return os.str();
}

namespace {

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
};

Axis make_axis(double lo, double hi, bool log) {
  if (log) {
    lo = std::max(lo, 1e-300);
    hi = std::max(hi, lo);
    if (hi / lo < 1.0001) {
      lo /= 2.0;
      hi *= 2.0;
    }
    return {lo, hi, true};
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5 * std::max(1.0, std::abs(lo));
    hi += 0.5 * std::max(1.0, std::abs(hi));
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, false};
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_svg(const Figure& f) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  static constexpr std::array<const char*, 6> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const Series& s : f.series)
    for (size_t j = 0; j < s.x.size(); ++j) {
      xlo = std::min(xlo, s.x[j]);
      xhi = std::max(xhi, s.x[j]);
      ylo = std::min(ylo, s.mean[j] - s.stddev[j]);
      yhi = std::max(yhi, s.mean[j] + s.stddev[j]);
    }
  const Axis ax = make_axis(xlo, xhi, f.log_x), ay = make_axis(ylo, yhi, false);
  auto px = [&](double x) { return ax.map(x, L, W - R); };
  auto py = [&](double y) { return ay.map(y, H - B, T); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(f.title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - R - L << "\" height=\"" << H - B - T
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int j = 0; j <= 4; ++j) {
    const double fx = ax.log ? std::pow(10.0, std::log10(ax.lo) + j * (std::log10(ax.hi) - std::log10(ax.lo)) / 4)
                             : ax.lo + j * (ax.hi - ax.lo) / 4;
    const double fy = ay.lo + j * (ay.hi - ay.lo) / 4;
    std::ostringstream lx, ly;
    lx << std::setprecision(3) << fx;
    ly << std::setprecision(4) << fy;
    os << "<line x1=\"" << px(fx) << "\" y1=\"" << H - B << "\" x2=\"" << px(fx) << "\" y2=\"" << H - B + 4
       << "\" stroke=\"black\"/><text x=\"" << px(fx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << lx.str() << "</text>\n";
    os << "<line x1=\"" << L - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << L << "\" y2=\"" << py(fy)
       << "\" stroke=\"black\"/><text x=\"" << L - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
       << ly.str() << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << esc(f.xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << esc(f.ylabel) << "</text>\n";
  for (size_t s = 0; s < f.series.size(); ++s) {
    const Series& se = f.series[s];
    const char* c = colors[s % colors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (size_t j = 0; j < se.x.size(); ++j) os << (j ? " " : "") << px(se.x[j]) << ',' << py(se.mean[j]);
    os << "\"/>\n";
    for (size_t j = 0; j < se.x.size(); ++j) {
      if (se.stddev[j] > 0.0)
        os << "<line x1=\"" << px(se.x[j]) << "\" y1=\"" << py(se.mean[j] - se.stddev[j]) << "\" x2=\"" << px(se.x[j])
           << "\" y2=\"" << py(se.mean[j] + se.stddev[j]) << "\" stroke=\"" << c << "\"/>\n";
      os << "<circle cx=\"" << px(se.x[j]) << "\" cy=\"" << py(se.mean[j]) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    const double ly = T + 14 + 16 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/><text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">"
       << esc(se.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void plot_results(const ResultTable& t, PlotKind kind, const std::string& stem) {
  const Figure f = make_figure(t, kind);
  write_file(stem + ".svg", render_svg(f));
  write_file(stem + ".csv", figure_csv(f));
}

}  // namespace isac
