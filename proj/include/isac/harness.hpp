#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

class ValidationError : public Error {
 public:
  using Error::Error;
};

enum class SchemeKind { central, decentral, baseline1, baseline2 };
enum class SweepVar { R_info, P_max, mse_target, N };

std::string to_string(SchemeKind s);
std::string to_string(SweepVar v);
/// Accepts the CLI names (central, decentral, baseline1, baseline2); throws ConfigError otherwise.
SchemeKind parse_scheme(const std::string& s);
SweepVar parse_sweep(const std::string& s);

struct ExperimentSpec {
  std::string config_path;  // empty: built-in defaults
  bool full = false;         // paper-scale defaults instead of desk scale
  std::vector<SchemeKind> schemes;
  SweepVar sweep = SweepVar::R_info;
  std::vector<double> grid;
  /// mse_target only: grid entries multiply each seed's adaptive (decentralized) MSE.
  bool mse_relative = false;
  /// Target for baseline2 when the sweep is not mse_target, m^2.
  std::optional<double> mse_target;
  int seeds = 1;
  std::uint64_t first_seed = 1;
  std::string out_dir;  // empty: nothing written
  int workers = 1;
  bool write_traces = true;

  /// Throws ValidationError (empty or non-increasing grid, seeds < 1, ...).
  void validate() const;
  SystemConfig base_config() const;
};

struct ResultRow {
  SchemeKind scheme = SchemeKind::central;
  int point_index = 0;
  double point = 0.0;
  std::uint64_t seed = 0;
  std::string status;  // converged, iteration_limit, nonconvergent, infeasible, failed
  std::string message;
  double power_W = 0.0;
  double power_dBm = 0.0;
  std::vector<double> per_bs_W;
  double trace_q = 0.0;  // Tr Q of the stage-1 estimate, m^2
  int iterations = 0;
  double wall_time_s = 0.0;
  bool power_ok = false, rate_ok = false, leak_ok = false;
  std::vector<double> objective_history;  // watts
  std::string solution_json;              // empty when the run failed

  bool solved() const { return !solution_json.empty(); }
  bool audit_passed() const { return power_ok && rate_ok && leak_ok; }
};

struct ResultTable {
  SweepVar sweep = SweepVar::R_info;
  std::vector<ResultRow> rows;  // ordered by (scheme, point, seed)
};

/// Runs every (scheme, grid point, seed). Failures are recorded in the row, never thrown.
ResultTable run_experiment(const ExperimentSpec& spec);

/// Scenario of one grid point.
SystemConfig point_config(const ExperimentSpec& spec, double point, std::uint64_t seed);

std::string results_csv(const ResultTable& t, bool with_wall_time = true);
/// Parses results_csv output; throws ValidationError on missing columns.
ResultTable read_results_csv(const std::string& text);

/// Re-audits a stored solution against its scenario; returns {power_ok, rate_ok, leak_ok}.
std::array<bool, 3> reaudit(const ResultRow& row, const ExperimentSpec& spec);

enum class PlotKind { convergence, power_vs_sweep, mse_vs_sweep, power_vs_mse };

struct Series {
  std::string label;
  std::vector<double> x, mean, stddev;
};

struct Figure {
  std::string title, xlabel, ylabel;
  bool log_x = false;
  std::vector<Series> series;
};

/// Mean and standard deviation across seeds per grid point, one series per scheme
/// (convergence: per grid point). Throws ValidationError when nothing fits the kind.
Figure make_figure(const ResultTable& t, PlotKind kind);
std::string figure_csv(const Figure& f);
std::string render_svg(const Figure& f);
/// Writes <stem>.svg and <stem>.csv.
void plot_results(const ResultTable& t, PlotKind kind, const std::string& stem);

}  // namespace isac
