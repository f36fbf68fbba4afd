// Experiment drivers behind the command line workbench. Each run_* function
// takes a RunConfig, writes CSV artifacts plus a manifest into cfg.out, and
// returns everything it wrote so callers can assert on the numbers directly.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "yfree/asymptotics.hpp"
#include "yfree/criteria.hpp"
#include "yfree/csv.hpp"
#include "yfree/data.hpp"
#include "yfree/forest.hpp"
#include "yfree/kernel_exact.hpp"
#include "yfree/ntk.hpp"
#include "yfree/selection.hpp"
#include "yfree/smoothers.hpp"
#include "yfree/spline.hpp"

namespace yfree {

struct RunConfig {
  std::string out = "yfree-out";
  std::uint64_t seed = 1;
  int workers = 1;

  // demo-sin
  int demo_n = 10;
  double demo_noise = 0.3;
  int demo_grid = 100;   // grid points per tuned hyperparameter axis
  int demo_epochs = 2000;
  int demo_trees = 100;

  // complexity-demo: bandwidths that share edof = n at lambda = 0
  std::vector<double> sigmas = {1.0 / std::sqrt(2.6), 1.0 / std::sqrt(0.32),
                                1.0 / std::sqrt(0.02)};

  // select
  std::string data;    // CSV path; empty runs the synthetic generator
  std::string target;  // response column name, required with a CSV
  bool classify = false;
  std::string label = "synthetic";
  std::string model = "lrr";
  std::vector<std::string> criteria = {"msv-fro", "cv", "gcv-yfree"};
  int reps = 10;
  int n_train = 500;
  int n_test = 100;
  int n_val = 500;
  int folds = 10;
  int grid_points = 200;
  int synth_d = 20;
  double synth_snr = 5.0;
  int forest_trees = 100;

  // asymptotics
  double gamma_min = 0.5;
  double gamma_max = 2.0;
  double gamma_step = 0.01;
  std::vector<double> snr = {1.0, 5.0, 20.0, 80.0};

  // bench-ntk
  std::string ntk_task = "sin";  // sin | blobs
  int ntk_n = 30;
  int ntk_classes = 3;
  int ntk_hidden = 20;
  int ntk_epochs = 400;
  double ntk_eta = 0.002;
  double ntk_gamma = 0.5;
  int ntk_extra = 200;
  bool ntk_paired = true;
};

inline int env_workers(int fallback = 1) {
  if (const char* v = std::getenv("YFREE_WORKERS")) {
    int w = std::atoi(v);
    if (w >= 1) return w;
  }
  return fallback;
}

inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  auto num = [](double v) { return fmt_g17(v); };
  auto count = [](std::int64_t v) { return std::to_string(v); };
  auto flag = [](bool v) { return std::string(v ? "true" : "false"); };
  auto nums = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
  };
  auto words = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  return {
      {"out", c.out},
      {"seed", std::to_string(c.seed)},
      {"workers", count(c.workers)},
      {"demo-n", count(c.demo_n)},
      {"demo-noise", num(c.demo_noise)},
      {"demo-grid", count(c.demo_grid)},
      {"demo-epochs", count(c.demo_epochs)},
      {"demo-trees", count(c.demo_trees)},
      {"sigmas", nums(c.sigmas)},
      {"data", c.data},
      {"target", c.target},
      {"classify", flag(c.classify)},
      {"label", c.label},
      {"model", c.model},
      {"criteria", words(c.criteria)},
      {"reps", count(c.reps)},
      {"n-train", count(c.n_train)},
      {"n-test", count(c.n_test)},
      {"n-val", count(c.n_val)},
      {"folds", count(c.folds)},
      {"grid-points", count(c.grid_points)},
      {"synth-d", count(c.synth_d)},
      {"synth-snr", num(c.synth_snr)},
      {"forest-trees", count(c.forest_trees)},
      {"gamma-min", num(c.gamma_min)},
      {"gamma-max", num(c.gamma_max)},
      {"gamma-step", num(c.gamma_step)},
      {"snr", nums(c.snr)},
      {"ntk-task", c.ntk_task},
      {"ntk-n", count(c.ntk_n)},
      {"ntk-classes", count(c.ntk_classes)},
      {"ntk-hidden", count(c.ntk_hidden)},
      {"ntk-epochs", count(c.ntk_epochs)},
      {"ntk-eta", num(c.ntk_eta)},
      {"ntk-gamma", num(c.ntk_gamma)},
      {"ntk-extra", count(c.ntk_extra)},
      {"ntk-paired", flag(c.ntk_paired)},
  };
}

// Deterministic run record: command, generator identity, full configuration.
inline void write_manifest(const RunConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(cfg.out);
  std::ofstream out(std::filesystem::path(cfg.out) / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + cfg.out);
  out << "command = " << command << '\n';
  out << "rng = " << kRngStream << '\n';
  for (const auto& [key, value] : config_entries(cfg)) out << key << " = " << value << '\n';
}

// Criterion names accepted by the select and demo commands.
inline CriterionSpec parse_criterion(const std::string& name, int folds) {
  CriterionSpec c;
  c.folds = folds;
  c.norm = MatrixNorm::frobenius;
  auto is = [&](const char* s) { return name == s; };
  if (is("msv")) c.kind = CriterionKind::msv;
  else if (is("msv-tr")) c.kind = CriterionKind::msv_tr;
  else if (is("msv-expected")) c.kind = CriterionKind::msv_expected;
  else if (is("msv-fro")) c.kind = CriterionKind::msv_norm;
  else if (is("msv-nuclear")) { c.kind = CriterionKind::msv_norm; c.norm = MatrixNorm::nuclear; }
  else if (is("msv-spectral")) { c.kind = CriterionKind::msv_norm; c.norm = MatrixNorm::spectral; }
  else if (is("msv-trace")) { c.kind = CriterionKind::msv_norm; c.norm = MatrixNorm::trace; }
  else if (is("gcv")) c.kind = CriterionKind::gcv;
  else if (is("gcv-yfree")) c.kind = CriterionKind::gcv_yfree;
  else if (is("gcv-yfree-nuclear")) { c.kind = CriterionKind::gcv_yfree; c.norm = MatrixNorm::nuclear; }
  else if (is("gcv-yfree-spectral")) { c.kind = CriterionKind::gcv_yfree; c.norm = MatrixNorm::spectral; }
  else if (is("loocv")) c.kind = CriterionKind::loocv;
  else if (is("cv")) c.kind = CriterionKind::kfold_cv;
  else if (is("in-sample-msv")) c.kind = CriterionKind::in_sample_msv_yfree;
  else throw std::invalid_argument("unknown criterion '" + name + "'");
  return c;
}

inline FamilySpec select_family(const std::string& model) {
  if (model == "lrr") return FamilySpec(Family::lrr);
  if (model == "gf") return FamilySpec(Family::gf);
  if (model == "krr") return FamilySpec(Family::krr);
  if (model == "knn") return FamilySpec(Family::knn);
  if (model == "spline") return FamilySpec(Family::spline);
  if (model == "forest") return FamilySpec(Family::forest);
  throw std::invalid_argument("select: unknown model '" + model + "'");
}

// Benchmark defaults per family; ridge grids follow the library default of
// 1e-4..20 plus an effectively-infinite endpoint.
inline HyperGrid select_grid(const RunConfig& cfg, Family kind, int n_train) {
  auto lambdas = [&] {
    auto v = log_grid(1e-4, 20.0, cfg.grid_points);
    v.push_back(1e6);
    return v;
  };
  switch (kind) {
    case Family::lrr:
    case Family::spline:
      return HyperGrid::single_axis("lambda", lambdas());
    case Family::gf:
      return HyperGrid::single_axis("t", log_grid(1e-4, 1e4, cfg.grid_points));
    case Family::krr: {
      HyperGrid g;
      g.names = {"lambda", "sigma"};
      g.axes = {lambdas(), log_grid(1e-4, 20.0, cfg.grid_points)};
      return g;
    }
    case Family::knn:
      return HyperGrid::single_axis("k", default_k_values(n_train));
    case Family::forest:
      return HyperGrid::single_axis("trees", {static_cast<double>(cfg.forest_trees)});
  }
  throw std::logic_error("select_grid: unknown family");
}

namespace detail {

template <typename Fn>
inline void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::min(std::max(workers, 1), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr err;
  auto drain = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(drain);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Type-7 quantile (linear interpolation of order statistics) on sorted input.
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  const double h = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string format_params(const SelectionResult& sel) {
  std::string s;
  for (std::size_t a = 0; a < sel.names.size(); ++a) {
    if (a) s += ';';
    s += sel.names[a] + "=" + format_value(sel.chosen[a]);
  }
  return s;
}

// Heavy-ball gradient descent with a held-out split; returns the parameters
// from the epoch with the smallest validation error.
struct EarlyStopFit {
  Network net;
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
};

inline EarlyStopFit train_early_stopping(Network net, const Mat& X_tr, const Vec& y_tr,
                                         const Mat& X_val, const Vec& y_val, double eta,
                                         double gamma, int epochs) {
  if (X_tr.rows() < 1 || X_val.rows() < 1)
    throw std::invalid_argument("early stopping: empty split");
  auto val_mse = [&](const Network& candidate) {
    return (candidate.forward(X_val).col(0) - y_val).squaredNorm() /
           static_cast<double>(X_val.rows());
  };
  EarlyStopFit out;
  out.net = net;
  out.best_val = val_mse(net);
  Vec theta = net.params();
  Vec vel = Vec::Zero(theta.size());
  for (int k = 1; k <= epochs; ++k) {
    Vec resid = y_tr - net.forward(X_tr).col(0);
    Vec grad = net.jacobian(X_tr).transpose() * resid;
    vel = gamma * vel + eta * grad;
    theta += vel;
    net.set_params(theta);
    const double v = val_mse(net);
    if (!std::isfinite(v))
      throw std::runtime_error("early stopping: diverged at epoch " + std::to_string(k));
    if (v < out.best_val) {
      out.best_val = v;
      out.best_epoch = k;
      out.net = net;
    }
  }
  return out;
}

// Smoother rows of the selected model on query covariates; forests are grown
// with the same seed the selection run used, so the evaluated forest is the
// selected one.
inline Mat select_smoother_rows(const FamilySpec& fam, const SelectionResult& sel,
                                const Dataset& train, const Mat& X_q, std::uint64_t seed) {
  switch (fam.kind) {
    case Family::lrr: {
      auto F = LrrFactor::fit(train.X);
      return F.smoother_rows(X_q, F.lambda_eff(sel.at("lambda"), fam.scaling));
    }
    case Family::gf:
      return GfFactor::fit(train.X).smoother_rows(X_q, sel.at("t"));
    case Family::krr:
      return KernelFactor::fit(train.X, sel.at("sigma")).smoother_rows(X_q, sel.at("lambda"));
    case Family::knn:
      return knn_smoother(train.X, X_q, static_cast<int>(sel.at("k")));
    case Family::spline:
      return SplineFactor::fit(train.X.col(0)).smoother_rows(X_q.col(0), sel.at("lambda"));
    case Family::forest: {
      TreeParams params = fam.tree;
      Vec build;
      if (fam.forest_build) {
        build = *fam.forest_build;
      } else if (train.labels) {
        params.task = TreeTask::classification;
        build = Vec(train.n());
        for (int i = 0; i < train.n(); ++i) build(i) = (*train.labels)[i];
      } else {
        build = require_response(train, "select");
      }
      auto forest = fit_forest(train.X, build, static_cast<int>(sel.at("trees")), seed, params);
      return rf_smoother(forest, train.X, X_q);
    }
  }
  throw std::logic_error("select_smoother_rows: unknown family");
}

struct BlobData {
  Mat X;
  std::vector<int> labels;
};

// Gaussian blobs with unit noise around class centers on a circle.
inline BlobData make_blobs(int n, int c, double radius, std::uint64_t seed) {
  if (n < 1 || c < 2) throw std::invalid_argument("make_blobs: bad shape");
  Rng rng = Rng(seed).derive("blobs");
  BlobData out;
  out.X = Mat(n, 2);
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
    const double ang = 2.0 * std::numbers::pi * cls / c;
    out.X(i, 0) = radius * std::cos(ang) + rng.normal();
    out.X(i, 1) = radius * std::sin(ang) + rng.normal();
    out.labels[i] = cls + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// demo-sin: five model families fitted to a noisy sine, each tuned twice --
// once with its response-based criterion, once response-free -- and always
// evaluated with the observed response attached through the smoother.

struct DemoSinRow {
  std::string model;
  std::string method;  // "y-based" | "y-free"
  std::string params;
  double r2 = 0.0;
};

struct DemoSinOutcome {
  SinDemoData data;
  std::vector<DemoSinRow> rows;
  std::map<std::string, Vec> curves;  // "model/method" -> fitted grid values
};

inline DemoSinOutcome run_demo_sin(const RunConfig& cfg) {
  if (cfg.demo_n < 4) throw std::invalid_argument("demo-sin: need at least four points");
  write_manifest(cfg, "demo-sin");
  const std::filesystem::path dir(cfg.out);

  DemoSinOutcome out;
  out.data = synth_sin(cfg.demo_n, cfg.demo_noise, cfg.seed);
  const SinDemoData& sd = out.data;
  const int n = sd.train.n();
  const int m = static_cast<int>(sd.grid.rows());
  const Vec& y = *sd.train.response;

  CriterionSpec loo;
  loo.kind = CriterionKind::loocv;
  CriterionSpec msv_fro;
  msv_fro.kind = CriterionKind::msv_norm;
  msv_fro.norm = MatrixNorm::frobenius;

  const auto lam_axis = log_grid(1e-4, 1.0, cfg.demo_grid);
  const std::uint64_t sel_seed = Rng(cfg.seed).derive("demo-select").seed();

  auto push = [&](const std::string& model, const std::string& method, const Vec& curve,
                  std::string params) {
    out.rows.push_back({model, method, std::move(params), r_squared(sd.grid_true, curve)});
    out.curves[model + "/" + method] = curve;
    CsvWriter w((dir / ("curve_" + model + "_" + (method == "y-based" ? "ybased" : "yfree") +
                        ".csv")).string());
    w.header({"x", "f_hat", "f_true"});
    for (int i = 0; i < m; ++i) w.row({sd.grid(i, 0), curve(i), sd.grid_true(i)});
  };

  {  // smoothing spline
    FamilySpec fam(Family::spline);
    HyperGrid g = HyperGrid::single_axis("lambda", lam_axis);
    auto F = SplineFactor::fit(sd.train.X.col(0));
    auto based = grid_select(fam, g, loo, sd.train, sd.grid, sel_seed);
    push("spline", "y-based", F.smoother_rows(sd.grid.col(0), based.at("lambda")) * y,
         detail::format_params(based));
    auto pick = grid_select(fam, g, msv_fro, sd.train, sd.grid, sel_seed);
    push("spline", "y-free", F.smoother_rows(sd.grid.col(0), pick.at("lambda")) * y,
         detail::format_params(pick));
  }

  {  // kernel ridge, raw lambda against K + lambda I
    FamilySpec fam(Family::krr);
    HyperGrid g;
    g.names = {"lambda", "sigma"};
    g.axes = {lam_axis, lam_axis};
    auto curve_at = [&](const SelectionResult& sel) {
      return Vec(KernelFactor::fit(sd.train.X, sel.at("sigma"))
                     .smoother_rows(sd.grid, sel.at("lambda")) *
                 y);
    };
    auto based = grid_select(fam, g, loo, sd.train, sd.grid, sel_seed);
    push("krr", "y-based", curve_at(based), detail::format_params(based));
    auto pick = grid_select(fam, g, msv_fro, sd.train, sd.grid, sel_seed);
    push("krr", "y-free", curve_at(pick), detail::format_params(pick));
  }

  {  // k nearest neighbors, k = 1..10; the response-based pick is exact
     // leave-one-out by refitting, which leaves k = n unscorable and skips it
    std::vector<double> ks;
    for (int k = 1; k <= std::min(10, n); ++k) ks.push_back(k);
    HyperGrid g = HyperGrid::single_axis("k", ks);
    FamilySpec fam(Family::knn);
    auto based = kfold_cv_select(fam, g, n, sd.train, sel_seed);
    push("knn", "y-based",
         knn_smoother(sd.train.X, sd.grid, static_cast<int>(based.at("k"))) * y,
         detail::format_params(based));
    auto pick = grid_select(fam, g, msv_fro, sd.train, sd.grid, sel_seed);
    push("knn", "y-free",
         knn_smoother(sd.train.X, sd.grid, static_cast<int>(pick.at("k"))) * y,
         detail::format_params(pick));
  }

  const Vec y_r = random_response_gaussian(n, Rng(cfg.seed).derive("demo-random-build").seed());

  {  // random forest, untuned; the response-free variant grows its trees on a
     // synthetic Gaussian target and only then meets the observed response
    const std::uint64_t fseed = Rng(cfg.seed).derive("demo-forest").seed();
    const std::string trees = "trees=" + std::to_string(cfg.demo_trees);
    auto f_y = fit_forest(sd.train.X, y, cfg.demo_trees, fseed, TreeParams{});
    push("forest", "y-based", rf_smoother(f_y, sd.train.X, sd.grid) * y, trees);
    auto f_r = fit_forest(sd.train.X, y_r, cfg.demo_trees, fseed, TreeParams{});
    push("forest", "y-free", rf_smoother(f_r, sd.train.X, sd.grid) * y, trees);
  }

  {  // shallow tanh network, eta 0.01, momentum 0.95
    const double eta = 0.01, gamma = 0.95;
    Network net = Network::init_tanh(1, 20, 1, Rng(cfg.seed).derive("demo-net").seed());

    auto split = Rng(cfg.seed).derive("demo-net-split").permutation(static_cast<std::size_t>(n));
    const int n_tr = std::max(1, (4 * n) / 5);
    Mat X_tr(n_tr, 1), X_val(n - n_tr, 1);
    Vec y_tr(n_tr), y_val(n - n_tr);
    for (int i = 0; i < n; ++i) {
      const int r = static_cast<int>(split[i]);
      if (i < n_tr) {
        X_tr(i, 0) = sd.train.X(r, 0);
        y_tr(i) = y(r);
      } else {
        X_val(i - n_tr, 0) = sd.train.X(r, 0);
        y_val(i - n_tr) = y(r);
      }
    }
    auto fit = detail::train_early_stopping(net, X_tr, y_tr, X_val, y_val, eta, gamma,
                                            cfg.demo_epochs);
    push("nn", "y-based", fit.net.forward(sd.grid).col(0),
         "epochs=" + std::to_string(fit.best_epoch));

    auto monitor = [&](const Mat& S_v) { return msv_norm(S_v, MatrixNorm::frobenius).value; };
    auto res = train_smoother(net, sd.train.X, sd.grid, Mat(y_r), LossKind::squared, eta, gamma,
                              cfg.demo_epochs, MonitorRows::extra, monitor, 1);
    Vec curve = res.S_star.bottomRows(m) * (y - res.f0.head(n)) + res.f0.tail(m);
    push("nn", "y-free", curve, "epochs=" + std::to_string(res.best_epoch));
  }

  CsvWriter w((dir / "summary.csv").string());
  w.header({"model", "method", "r2", "params"});
  for (const auto& row : out.rows)
    w.write_strings({row.model, row.method, fmt_g17(row.r2), row.params});
  return out;
}

// ---------------------------------------------------------------------------
// complexity-demo: kernel interpolants at lambda = 0 all have edof = n, yet
// their out-of-sample behavior ranges from spiky to flat; the trace-form MSV
// separates them where edof cannot. Runs in extended precision because the
// flattest kernel is singular at double epsilon.

struct ComplexitySetting {
  double sigma = 0.0;
  double edof = 0.0;
  double max_residual = 0.0;  // in-sample interpolation gap
  double msv_tr = 0.0;
  Vec curve;
};

struct ComplexityOutcome {
  SinDemoData data;
  std::vector<ComplexitySetting> settings;
  double edof_spread = 0.0;    // max pairwise edof difference
  double min_curve_gap = 0.0;  // min pairwise sup-distance between curves
  int best = 0;                // index with the smallest msv_tr
};

inline ComplexityOutcome run_complexity_demo(const RunConfig& cfg) {
  if (cfg.sigmas.size() < 2)
    throw std::invalid_argument("complexity-demo: need at least two bandwidths");
  write_manifest(cfg, "complexity-demo");
  const std::filesystem::path dir(cfg.out);

  ComplexityOutcome out;
  out.data = synth_sin(cfg.demo_n, cfg.demo_noise, cfg.seed);
  const SinDemoData& sd = out.data;

  for (double sigma : cfg.sigmas) {
    if (!(sigma > 0.0)) throw std::invalid_argument("complexity-demo: bandwidths must be positive");
    auto rep = exact_krr_report(sd.train.X, *sd.train.response, sigma, 0.0, sd.grid);
    out.settings.push_back(
        {sigma, rep.edof, rep.in_sample_max_residual, rep.msv_tr, rep.predictions});
  }

  double edof_lo = out.settings.front().edof, edof_hi = edof_lo;
  for (const auto& s : out.settings) {
    edof_lo = std::min(edof_lo, s.edof);
    edof_hi = std::max(edof_hi, s.edof);
  }
  out.edof_spread = edof_hi - edof_lo;
  if (out.edof_spread > 1e-6)
    throw std::runtime_error("complexity-demo: settings do not share complexity (edof spread " +
                             detail::format_value(out.edof_spread) + ")");

  out.min_curve_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.settings.size(); ++i)
    for (std::size_t j = i + 1; j < out.settings.size(); ++j)
      out.min_curve_gap = std::min(
          out.min_curve_gap,
          (out.settings[i].curve - out.settings[j].curve).cwiseAbs().maxCoeff());
  for (std::size_t i = 1; i < out.settings.size(); ++i)
    if (out.settings[i].msv_tr < out.settings[out.best].msv_tr) out.best = static_cast<int>(i);

  CsvWriter table((dir / "complexity.csv").string());
  table.header({"sigma", "edof", "max_residual", "msv_tr"});
  for (const auto& s : out.settings) table.row({s.sigma, s.edof, s.max_residual, s.msv_tr});

  CsvWriter curves((dir / "curves.csv").string());
  std::vector<std::string> head{"x", "f_true"};
  for (std::size_t i = 0; i < out.settings.size(); ++i)
    head.push_back("f_hat_" + std::to_string(i + 1));
  curves.header(head);
  for (int r = 0; r < sd.grid.rows(); ++r) {
    std::vector<double> row{sd.grid(r, 0), sd.grid_true(r)};
    for (const auto& s : out.settings) row.push_back(s.curve(r));
    curves.row(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// select: repeated train/test/validation splits scored by each requested
// criterion; regression reports R^2, classification reports accuracy.

struct SelectRepResult {
  int rep = 0;
  std::string method;
  double metric = 0.0;
  std::string params;
};

struct SelectMethodSummary {
  std::string method;
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;
};

struct SelectOutcome {
  bool classify = false;
  std::string data_label;
  std::vector<SelectRepResult> rep_rows;
  std::vector<SelectMethodSummary> summary;
};

namespace detail {

struct SelectSource {
  bool synthetic = false;
  bool classify = false;
  Mat X;
  Vec y;
  std::vector<int> labels;
  int n_classes = 0;
};

inline SelectSource load_select_source(const RunConfig& cfg) {
  SelectSource src;
  if (cfg.data.empty()) {
    if (cfg.classify)
      throw std::invalid_argument("select: the synthetic task is regression only");
    src.synthetic = true;
    return src;
  }
  if (cfg.target.empty()) throw std::invalid_argument("select: target column is required");
  CsvTable t = read_numeric_csv(cfg.data);
  const int tc = t.column_index(cfg.target);
  const int n = static_cast<int>(t.values.rows());
  const int d = static_cast<int>(t.values.cols()) - 1;
  if (d < 1) throw std::invalid_argument("select: no feature columns besides the target");
  if (n < 2) throw std::invalid_argument("select: need at least two rows");
  src.X = Mat(n, d);
  for (int j = 0, at = 0; j < t.values.cols(); ++j) {
    if (j == tc) continue;
    src.X.col(at++) = t.values.col(j);
  }
  Vec target = t.values.col(tc);
  src.classify = cfg.classify;
  if (!cfg.classify) {
    src.y = target;
    return src;
  }
  double lo = target.minCoeff();
  for (int i = 0; i < n; ++i)
    if (target(i) != std::floor(target(i)) || target(i) < 0.0 || target(i) > 1e6)
      throw std::invalid_argument("select: class labels must be small non-negative integers");
  const int offset = lo == 0.0 ? 1 : 0;  // zero-based label files shift to 1..c
  src.labels.resize(n);
  int c = 0;
  for (int i = 0; i < n; ++i) {
    src.labels[i] = static_cast<int>(target(i)) + offset;
    c = std::max(c, src.labels[i]);
  }
  if (c < 2) throw std::invalid_argument("select: need at least two classes");
  src.n_classes = c;
  return src;
}

struct SelectRepData {
  Dataset train;
  Mat X_test;
  Vec y_test;  // raw scale
  std::vector<int> test_labels;
  double y_center = 0.0;
};

inline SelectRepData make_rep_data(const RunConfig& cfg, const SelectSource& src,
                                   std::uint64_t rep_seed) {
  SelectRepData out;
  Mat X_tr_raw, X_te_raw;
  Vec y_tr_raw;
  if (src.synthetic) {
    auto lin = synth_linear(cfg.n_train, cfg.n_test, cfg.synth_d, cfg.synth_snr, rep_seed);
    X_tr_raw = std::move(lin.X_train);
    X_te_raw = std::move(lin.X_test);
    y_tr_raw = std::move(lin.y_train);
    out.y_test = std::move(lin.y_test);
  } else {
    const int n = static_cast<int>(src.X.rows());
    if (cfg.n_train + cfg.n_test > n)
      throw std::invalid_argument("select: dataset has " + std::to_string(n) +
                                  " rows, need n_train + n_test");
    auto perm = Rng(rep_seed).derive("select-split").permutation(static_cast<std::size_t>(n));
    X_tr_raw = Mat(cfg.n_train, src.X.cols());
    X_te_raw = Mat(cfg.n_test, src.X.cols());
    if (!src.classify) {
      y_tr_raw = Vec(cfg.n_train);
      out.y_test = Vec(cfg.n_test);
    }
    std::vector<int> lab_tr;
    for (int i = 0; i < cfg.n_train; ++i) {
      const int r = static_cast<int>(perm[i]);
      X_tr_raw.row(i) = src.X.row(r);
      if (src.classify) lab_tr.push_back(src.labels[r]);
      else y_tr_raw(i) = src.y(r);
    }
    for (int i = 0; i < cfg.n_test; ++i) {
      const int r = static_cast<int>(perm[cfg.n_train + i]);
      X_te_raw.row(i) = src.X.row(r);
      if (src.classify) out.test_labels.push_back(src.labels[r]);
      else out.y_test(i) = src.y(r);
    }
    if (src.classify) {
      out.train.labels = std::move(lab_tr);
      out.train.n_classes = src.n_classes;
    }
  }
  auto st = fit_standardization(X_tr_raw);
  out.train.X = apply_standardization(X_tr_raw, st);
  out.X_test = apply_standardization(X_te_raw, st);
  if (!src.classify) {
    out.y_center = y_tr_raw.mean();
    out.train.response = (y_tr_raw.array() - out.y_center).matrix();
  }
  return out;
}

}  // namespace detail

inline SelectOutcome run_select_benchmark(const RunConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("select: need at least one repetition");
  if (cfg.criteria.empty()) throw std::invalid_argument("select: no criteria requested");
  write_manifest(cfg, "select");
  const std::filesystem::path dir(cfg.out);

  auto src = detail::load_select_source(cfg);
  const FamilySpec base = select_family(cfg.model);
  std::vector<CriterionSpec> specs;
  for (const auto& name : cfg.criteria) specs.push_back(parse_criterion(name, cfg.folds));
  const int n_crit = static_cast<int>(specs.size());

  SelectOutcome out;
  out.classify = src.classify;
  out.data_label = cfg.data.empty() || cfg.label != "synthetic"
                       ? cfg.label
                       : std::filesystem::path(cfg.data).stem().string();

  std::vector<std::vector<double>> metric(n_crit, std::vector<double>(cfg.reps));
  std::vector<std::vector<std::string>> params(n_crit, std::vector<std::string>(cfg.reps));

  detail::parallel_for(cfg.reps, cfg.workers, [&](int r) {
    const std::uint64_t rep_seed =
        Rng(cfg.seed).derive("select-rep-" + std::to_string(r)).seed();
    auto rep = detail::make_rep_data(cfg, src, rep_seed);
    const HyperGrid grid = select_grid(cfg, base.kind, rep.train.n());
    Mat X_v = sample_validation_covariates(rep.train.X, cfg.n_val, rep_seed);
    for (int ci = 0; ci < n_crit; ++ci) {
      FamilySpec fam = base;
      if (fam.kind == Family::forest) {
        fam.tree.task = src.classify ? TreeTask::classification : TreeTask::regression;
        if (criterion_is_yfree(specs[ci].kind)) {
          if (src.classify) {
            Rng rng = Rng(rep_seed).derive("forest-build");
            Vec b(rep.train.n());
            for (int i = 0; i < rep.train.n(); ++i)
              b(i) = static_cast<double>(
                  rng.uniform_int(static_cast<std::uint64_t>(src.n_classes)) + 1);
            fam.forest_build = std::move(b);
          } else {
            fam.forest_build = random_response_gaussian(
                rep.train.n(), Rng(rep_seed).derive("forest-build").seed());
          }
        }
      }
      SelectionResult sel =
          specs[ci].kind == CriterionKind::kfold_cv
              ? kfold_cv_select(fam, grid, cfg.folds, rep.train, rep_seed)
              : grid_select(fam, grid, specs[ci], rep.train, X_v, rep_seed);
      Mat S = detail::select_smoother_rows(fam, sel, rep.train, rep.X_test, rep_seed);
      double value;
      if (src.classify) {
        Mat Y = one_hot_compact(*rep.train.labels, src.n_classes).Y;
        value = accuracy(rep.test_labels, decode_labels(S * Y, src.n_classes));
      } else {
        Vec pred = (S * *rep.train.response).array() + rep.y_center;
        value = r_squared(rep.y_test, pred);
      }
      metric[ci][r] = value;
      params[ci][r] = detail::format_params(sel);
    }
  });

  const std::string metric_name = src.classify ? "accuracy" : "r2";
  CsvWriter reps((dir / "reps.csv").string());
  reps.header({"rep", "method", metric_name, "params"});
  for (int r = 0; r < cfg.reps; ++r)
    for (int ci = 0; ci < n_crit; ++ci) {
      reps.write_strings(
          {std::to_string(r), cfg.criteria[ci], fmt_g17(metric[ci][r]), params[ci][r]});
      out.rep_rows.push_back({r, cfg.criteria[ci], metric[ci][r], params[ci][r]});
    }

  CsvWriter summary((dir / "summary.csv").string());
  summary.header({"data", "model", "method", "q1", "q2", "q3"});
  for (int ci = 0; ci < n_crit; ++ci) {
    std::vector<double> sorted = metric[ci];
    std::sort(sorted.begin(), sorted.end());
    SelectMethodSummary s{cfg.criteria[ci], detail::quantile_sorted(sorted, 0.25),
                          detail::quantile_sorted(sorted, 0.5),
                          detail::quantile_sorted(sorted, 0.75)};
    summary.write_strings({out.data_label, cfg.model, s.method, fmt_g17(s.q1), fmt_g17(s.q2),
                           fmt_g17(s.q3)});
    out.summary.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// asymptotics: closed-form risk curves for ridge regression in the
// proportional limit, comparing the y-free regularization level against the
// risk-optimal one.

struct AsymptoticsOutcome {
  std::vector<double> gammas;
  RatioScanResult scan;
};

inline AsymptoticsOutcome run_asymptotics(const RunConfig& cfg) {
  if (!(cfg.gamma_min > 0.0) || !(cfg.gamma_step > 0.0) || cfg.gamma_max < cfg.gamma_min)
    throw std::invalid_argument("asymptotics: bad gamma range");
  if (cfg.snr.empty()) throw std::invalid_argument("asymptotics: no snr values");
  for (double s : cfg.snr)
    if (!(s > 0.0)) throw std::invalid_argument("asymptotics: snr must be positive");
  write_manifest(cfg, "asymptotics");
  const std::filesystem::path dir(cfg.out);

  AsymptoticsOutcome out;
  const int count =
      static_cast<int>(std::floor((cfg.gamma_max - cfg.gamma_min) / cfg.gamma_step + 1e-9)) + 1;
  out.gammas.resize(count);
  for (int i = 0; i < count; ++i) out.gammas[i] = cfg.gamma_min + i * cfg.gamma_step;
  out.scan = ratio_scan(out.gammas, cfg.snr, 1.0, true);

  CsvWriter curves((dir / "risk_curves.csv").string());
  curves.header(
      {"gamma", "snr", "lambda_opt", "lambda_t", "risk_opt", "risk_t", "risk_zero", "ratio"});
  for (const auto& p : out.scan.table)
    curves.row({p.gamma, p.snr, lambda_opt(p.gamma, p.snr), lambda_T(p.gamma), p.r_opt, p.r_T,
                p.r_zero, p.ratio});

  CsvWriter summary((dir / "summary.csv").string());
  summary.header({"max_ratio", "gamma_at", "snr_at"});
  summary.row({out.scan.max_ratio, out.scan.gamma_at, out.scan.snr_at});
  return out;
}

// ---------------------------------------------------------------------------
// bench-ntk: train the network smoother on a synthetic target (or on zeros),
// log both response-free monitors every epoch, stop each at its minimum, then
// attach the observed response and score out of sample.

struct NtkBenchRow {
  std::string build;    // "random" | "zeros"
  std::string monitor;  // "msv-fro" | "gcv-yfree"
  int stop_epoch = 0;
  double monitor_value = 0.0;
  double metric = 0.0;  // R^2 or accuracy with the response attached
};

struct NtkTrace {
  std::string build;
  std::vector<double> loss;             // per epoch
  std::vector<double> msv_fro, gcv_yfree;  // epoch 0 first, then per epoch
};

struct NtkBenchOutcome {
  bool classify = false;
  std::vector<NtkBenchRow> rows;
  std::vector<NtkTrace> traces;
  std::string cost_note;
};

inline NtkBenchOutcome run_bench_ntk(const RunConfig& cfg) {
  const bool classify = cfg.ntk_task == "blobs";
  if (!classify && cfg.ntk_task != "sin")
    throw std::invalid_argument("bench-ntk: unknown task '" + cfg.ntk_task + "'");
  if (cfg.ntk_n < 2 || cfg.ntk_extra < 2) throw std::invalid_argument("bench-ntk: too few rows");
  if (classify && cfg.ntk_classes < 2)
    throw std::invalid_argument("bench-ntk: need at least two classes");
  write_manifest(cfg, "bench-ntk");
  const std::filesystem::path dir(cfg.out);

  const int n = cfg.ntk_n;
  const int c = classify ? cfg.ntk_classes : 0;
  const int q = classify ? c - 1 : 1;
  const LossKind loss = classify ? LossKind::cross_entropy : LossKind::squared;

  Mat X, X_extra;
  Vec truth;                     // regression targets on the extra block
  std::vector<int> extra_labels;
  Mat Y_true;                    // attached response, n x q
  int m = 0;
  if (classify) {
    auto tr = detail::make_blobs(n, c, 3.0, Rng(cfg.seed).derive("bench-train").seed());
    auto ex = detail::make_blobs(cfg.ntk_extra, c, 3.0, Rng(cfg.seed).derive("bench-extra").seed());
    X = std::move(tr.X);
    X_extra = std::move(ex.X);
    extra_labels = std::move(ex.labels);
    Y_true = one_hot_compact(tr.labels, c).Y;
    m = cfg.ntk_extra;
  } else {
    auto sd = synth_sin(n, cfg.demo_noise, cfg.seed);
    X = sd.train.X;
    Y_true = Mat(*sd.train.response);
    m = std::min(cfg.ntk_extra, static_cast<int>(sd.grid.rows()));
    X_extra = Mat(m, 1);
    truth = Vec(m);
    for (int i = 0; i < m; ++i) {
      const int r = i * static_cast<int>(sd.grid.rows()) / m;
      X_extra(i, 0) = sd.grid(r, 0);
      truth(i) = sd.grid_true(r);
    }
  }
  const Vec y_vec = detail::vectorize_rows(Y_true);

  const Network net0 =
      Network::init_tanh(static_cast<int>(X.cols()), cfg.ntk_hidden, q,
                         Rng(cfg.seed).derive("bench-net").seed());

  NtkBenchOutcome out;
  out.classify = classify;
  {
    const double p = net0.n_params();
    const double rows_all = static_cast<double>((n + m) * q), cols = static_cast<double>(n * q);
    const double per_epoch = 2.0 * rows_all * p * (1.0 + cols) + 2.0 * rows_all * cols * cols;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "estimated %.2g flop over %d epochs (n=%d, extra=%d, params=%d)",
                  per_epoch * cfg.ntk_epochs, cfg.ntk_epochs, n, m, net0.n_params());
    out.cost_note = buf;
  }

  auto score = [&](const Vec& f_hat_extra) {
    if (!classify) return r_squared(truth, f_hat_extra);
    Mat F(m, q);
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < q; ++a) F(i, a) = f_hat_extra(i * q + a);
    return accuracy(extra_labels, decode_labels(F, c));
  };

  std::vector<std::string> builds{"random"};
  if (cfg.ntk_paired) builds.push_back("zeros");

  for (const auto& build : builds) {
    Mat y_build;
    if (build == "zeros") {
      y_build = Mat::Zero(n, q);
    } else if (classify) {
      y_build = random_response_categorical(n, c, Rng(cfg.seed).derive("bench-build").seed()).Y;
    } else {
      y_build = Mat(random_response_gaussian(n, Rng(cfg.seed).derive("bench-build").seed()));
    }

    NtkTrace trace;
    trace.build = build;
    auto monitor = [&](const Mat& S_all) {
      Mat S_v = S_all.bottomRows(m * q);
      Mat S_tr = S_all.topRows(n * q);
      const double mv = msv_norm(S_v, MatrixNorm::frobenius).value;
      double gv;
      try {
        gv = gcv_yfree(S_tr, MatrixNorm::frobenius).value;
      } catch (const std::domain_error&) {
        gv = std::numeric_limits<double>::quiet_NaN();
      }
      trace.msv_fro.push_back(mv);
      trace.gcv_yfree.push_back(gv);
      return mv;
    };

    auto res = train_smoother(net0, X, X_extra, y_build, loss, cfg.ntk_eta, cfg.ntk_gamma,
                              cfg.ntk_epochs, MonitorRows::all, monitor, 1);
    trace.loss = res.log.loss;

    {
      Mat S_extra = res.S_star.bottomRows(m * q);
      Vec f_hat = S_extra * (y_vec - res.f0.head(n * q)) + res.f0.tail(m * q);
      out.rows.push_back({build, "msv-fro", res.best_epoch, trace.msv_fro[res.best_epoch],
                          score(f_hat)});
    }

    int e_gcv = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t e = 0; e < trace.gcv_yfree.size(); ++e) {
      const double v = trace.gcv_yfree[e];
      if (std::isnan(v)) continue;
      if (!found || v < best) {
        best = v;
        e_gcv = static_cast<int>(e);
        found = true;
      }
    }
    if (!found) throw std::runtime_error("bench-ntk: every epoch was degenerate under gcv");
    Vec f_hat_g;
    if (e_gcv == 0) {
      f_hat_g = res.f0.tail(m * q);
    } else {
      auto rerun = train_smoother(net0, X, X_extra, y_build, loss, cfg.ntk_eta, cfg.ntk_gamma,
                                  e_gcv, MonitorRows::extra);
      f_hat_g = rerun.S_star_last.bottomRows(m * q) * (y_vec - rerun.f0.head(n * q)) +
                rerun.f0.tail(m * q);
    }
    out.rows.push_back({build, "gcv-yfree", e_gcv, best, score(f_hat_g)});

    CsvWriter w((dir / ("trace_" + build + ".csv")).string());
    w.header({"epoch", "loss", "msv_fro", "gcv_yfree"});
    for (std::size_t e = 0; e < trace.msv_fro.size(); ++e)
      w.row({static_cast<double>(e),
             e == 0 ? std::numeric_limits<double>::quiet_NaN() : trace.loss[e - 1],
             trace.msv_fro[e], trace.gcv_yfree[e]});
    out.traces.push_back(std::move(trace));
  }

  CsvWriter summary((dir / "summary.csv").string());
  summary.header({"build", "monitor", "stop_epoch", "monitor_value",
                  classify ? "accuracy" : "r2"});
  for (const auto& row : out.rows)
    summary.write_strings({row.build, row.monitor, std::to_string(row.stop_epoch),
                           fmt_g17(row.monitor_value), fmt_g17(row.metric)});
  return out;
}

}  // namespace yfree
