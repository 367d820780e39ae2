#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "isac/baselines.hpp"
#include "isac/harness.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw isac::ConfigError("bad grid value: " + item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run networked ISAC beamforming experiments"};
  isac::ExperimentSpec spec;
  std::vector<std::string> schemes;
  std::string sweep = "R_info", grid;
  double mse_target = 0.0;
  bool no_plots = false;
  app.add_option("--config", spec.config_path, "scenario config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--scheme", schemes, "central, decentral, baseline1, baseline2 (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  app.add_option("--sweep", sweep, "R_info, P_max, mse_target or N");
  app.add_option("--grid", grid, "comma-separated values; 'auto' for a relative mse_target grid")->required();
  app.add_option("--seeds", spec.seeds, "channel realizations per grid point");
  app.add_option("--first-seed", spec.first_seed, "first channel seed");
  app.add_option("--out", spec.out_dir, "output directory")->required();
  app.add_option("--workers", spec.workers, "parallel workers");
  app.add_option("--mse-target", mse_target, "baseline2 target (m^2) outside an mse_target sweep");
  app.add_flag("--full", spec.full, "paper-scale defaults (M=3, N=4, K=2, L=1024)");
  app.add_flag("--no-plots", no_plots, "skip the SVG plots");
  CLI11_PARSE(app, argc, argv);

  isac::ResultTable table;
  try {
    for (const auto& s : schemes) spec.schemes.push_back(isac::parse_scheme(s));
    spec.sweep = isac::parse_sweep(sweep);
    if (grid == "auto") {
      spec.mse_relative = true;
      spec.grid = isac::mse_grid(1.0);
    } else {
      spec.grid = parse_grid(grid);
    }
    if (mse_target > 0.0) spec.mse_target = mse_target;
    spec.validate();
    spec.base_config();
  } catch (const isac::Error& e) {
    std::cerr << "isac-run: " << e.what() << '\n';
    return 2;
  }

  table = isac::run_experiment(spec);
  int failed = 0;
  for (const auto& r : table.rows)
    if (r.status == "failed") ++failed;
  if (failed) std::cerr << "isac-run: warning: " << failed << " run(s) failed; see results.csv\n";

  if (!no_plots) {
    const std::filesystem::path dir(spec.out_dir);
    std::vector<std::pair<isac::PlotKind, std::string>> plots{{isac::PlotKind::convergence, "convergence"}};
    if (spec.sweep == isac::SweepVar::mse_target) {
      plots.emplace_back(isac::PlotKind::power_vs_mse, "power_vs_mse");
    } else {
      plots.emplace_back(isac::PlotKind::power_vs_sweep, "power_vs_" + sweep);
      plots.emplace_back(isac::PlotKind::mse_vs_sweep, "mse_vs_" + sweep);
    }
    for (const auto& [kind, name] : plots) {
      try {
        isac::plot_results(table, kind, (dir / name).string());
      } catch (const isac::ValidationError& e) {
        std::cerr << "isac-run: skipped plot " << name << ": " << e.what() << '\n';
      }
    }
  }
  std::cout << "wrote " << table.rows.size() << " rows to " << (std::filesystem::path(spec.out_dir) / "results.csv")
            << '\n';
  return 0;
}
