// Command-line workbench around the smoother library: fit the sin demo with
// and without the response, reproduce the equal-complexity kernel fits, run
// the selection benchmark, scan the closed-form risk ratio, and train the
// network smoother with response-free stopping monitors.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "yfree/workbench.hpp"

namespace {

std::string norm_suffix(const std::string& norm) {
  if (norm == "frobenius" || norm == "fro") return "fro";
  if (norm == "nuclear" || norm == "spectral" || norm == "trace") return norm;
  throw CLI::ValidationError("--norm", "unknown norm '" + norm + "'");
}

// --norm only re-targets the criteria that carry a matrix norm; explicit
// names like msv-nuclear always win.
void apply_norm(std::vector<std::string>& criteria, const std::string& norm) {
  const std::string suffix = norm_suffix(norm);
  for (auto& name : criteria) {
    if (name == "msv-norm") {
      name = "msv-" + suffix;
    } else if (name == "gcv-yfree" && suffix != "fro") {
      if (suffix == "trace")
        throw CLI::ValidationError("--norm", "gcv-yfree has no trace-norm form");
      name = "gcv-yfree-" + suffix;
    }
  }
}

void print_select(const yfree::SelectOutcome& out, const std::string& model) {
  std::printf("%-14s %-8s %-18s %9s %9s %9s\n", "data", "model", "method",
              out.classify ? "acc q1" : "r2 q1", "q2", "q3");
  for (const auto& s : out.summary)
    std::printf("%-14s %-8s %-18s %9.4f %9.4f %9.4f\n", out.data_label.c_str(), model.c_str(),
                s.method.c_str(), s.q1, s.q2, s.q3);
}

}  // namespace

int main(int argc, char** argv) {
  yfree::RunConfig cfg;
  cfg.workers = yfree::env_workers(1);
  std::string norm = "frobenius";

  CLI::App app{"linear-smoother workbench with response-free model selection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags win");

  app.add_option("--out", cfg.out, "output directory for this run");
  app.add_option("--seed", cfg.seed, "master seed; every stream derives from it");
  app.add_option("--workers", cfg.workers,
                 "parallel repetitions (default: YFREE_WORKERS or 1)");

  app.add_option("--demo-n", cfg.demo_n, "training points for the sin demos");
  app.add_option("--demo-noise", cfg.demo_noise, "noise standard deviation");
  app.add_option("--demo-grid", cfg.demo_grid, "hyperparameter grid resolution");
  app.add_option("--demo-epochs", cfg.demo_epochs, "network training epochs in the demo");
  app.add_option("--demo-trees", cfg.demo_trees, "forest size in the demo");
  app.add_option("--sigmas", cfg.sigmas, "bandwidths for the equal-complexity demo")
      ->delimiter(',');

  app.add_option("--data", cfg.data, "CSV dataset; omit for the synthetic task");
  app.add_option("--target", cfg.target, "target column name in --data");
  app.add_flag("--classify", cfg.classify, "treat the target as class labels");
  app.add_option("--label", cfg.label, "dataset label in the summary output");
  app.add_option("--model", cfg.model, "lrr | gf | krr | knn | spline | forest");
  app.add_option("--criterion", cfg.criteria,
                 "selection criterion, repeatable (msv, msv-tr, msv-expected, msv-norm, "
                 "msv-fro, msv-nuclear, msv-spectral, msv-trace, gcv, gcv-yfree, loocv, cv, "
                 "in-sample-msv)")
      ->delimiter(',');
  app.add_option("--norm", norm, "matrix norm for msv-norm/gcv-yfree criteria "
                                 "(frobenius | nuclear | spectral | trace)");
  app.add_option("--reps", cfg.reps, "number of repetitions");
  app.add_option("--n-train", cfg.n_train, "training rows per repetition");
  app.add_option("--n-test", cfg.n_test, "test rows per repetition");
  app.add_option("--n-val", cfg.n_val, "sampled validation covariates");
  app.add_option("--folds", cfg.folds, "folds for the cv criterion");
  app.add_option("--grid-points", cfg.grid_points, "points per hyperparameter axis");
  app.add_option("--synth-d", cfg.synth_d, "covariate dimension of the synthetic task");
  app.add_option("--synth-snr", cfg.synth_snr, "signal-to-noise ratio of the synthetic task");
  app.add_option("--forest-trees", cfg.forest_trees, "forest size in the benchmark");

  app.add_option("--gamma-min", cfg.gamma_min, "smallest p/n aspect ratio");
  app.add_option("--gamma-max", cfg.gamma_max, "largest p/n aspect ratio");
  app.add_option("--gamma-step", cfg.gamma_step, "aspect-ratio step");
  app.add_option("--snr", cfg.snr, "signal-to-noise ratios to scan")->delimiter(',');

  app.add_option("--ntk-task", cfg.ntk_task, "sin | blobs");
  app.add_option("--ntk-n", cfg.ntk_n, "training rows (keep small; cost is printed)");
  app.add_option("--ntk-classes", cfg.ntk_classes, "classes for the blobs task");
  app.add_option("--ntk-hidden", cfg.ntk_hidden, "hidden width");
  app.add_option("--ntk-epochs", cfg.ntk_epochs, "training epochs");
  app.add_option("--ntk-eta", cfg.ntk_eta, "learning rate");
  app.add_option("--ntk-gamma", cfg.ntk_gamma, "momentum");
  app.add_option("--ntk-extra", cfg.ntk_extra, "held-out rows the smoother extends to");
  app.add_flag("--ntk-paired,!--no-ntk-paired", cfg.ntk_paired,
               "also run the all-zeros build target");

  auto* demo = app.add_subcommand("demo-sin", "five model families on noisy sin data, "
                                              "selected with and without the response");
  auto* complexity = app.add_subcommand(
      "complexity-demo", "equal-complexity kernel interpolants that disagree off sample");
  auto* select = app.add_subcommand(
      "select", "repeated-split benchmark of selection criteria on one model family");
  auto* asym = app.add_subcommand(
      "asymptotics", "closed-form high-dimensional ridge risk, optimal vs response-free");
  auto* bench = app.add_subcommand(
      "bench-ntk", "network smoother with response-free stopping monitors");
  for (auto* sc : {demo, complexity, select, asym, bench}) sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_norm(cfg.criteria, norm);

    if (app.got_subcommand(demo)) {
      auto out = yfree::run_demo_sin(cfg);
      std::printf("%-8s %-8s %8s  %s\n", "model", "method", "r2", "params");
      for (const auto& r : out.rows)
        std::printf("%-8s %-8s %8.4f  %s\n", r.model.c_str(), r.method.c_str(), r.r2,
                    r.params.c_str());
    } else if (app.got_subcommand(complexity)) {
      auto out = yfree::run_complexity_demo(cfg);
      std::printf("%-12s %14s %14s %16s\n", "sigma", "edof", "max residual", "msv-tr");
      for (const auto& s : out.settings)
        std::printf("%-12.6g %14.8f %14.3e %16.6f\n", s.sigma, s.edof, s.max_residual,
                    s.msv_tr);
      std::printf("equal complexity (spread %.2e); smallest msv-tr at sigma = %g\n",
                  out.edof_spread, out.settings[out.best].sigma);
    } else if (app.got_subcommand(select)) {
      print_select(yfree::run_select_benchmark(cfg), cfg.model);
    } else if (app.got_subcommand(asym)) {
      auto out = yfree::run_asymptotics(cfg);
      std::printf("%zu gammas x %zu snr values\n", out.gammas.size(), cfg.snr.size());
      std::printf("max risk ratio %.6f at gamma=%.3f snr=%g\n", out.scan.max_ratio,
                  out.scan.gamma_at, out.scan.snr_at);
    } else if (app.got_subcommand(bench)) {
      auto out = yfree::run_bench_ntk(cfg);
      std::printf("%s\n", out.cost_note.c_str());
      std::printf("%-8s %-10s %6s %14s %10s\n", "build", "monitor", "stop", "monitor value",
                  out.classify ? "accuracy" : "r2");
      for (const auto& r : out.rows)
        std::printf("%-8s %-10s %6d %14.6g %10.4f\n", r.build.c_str(), r.monitor.c_str(),
                    r.stop_epoch, r.monitor_value, r.metric);
    }
    std::printf("wrote %s\n", cfg.out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
