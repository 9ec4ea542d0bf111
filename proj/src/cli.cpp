#include "pmoe/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmoe/data_io.hpp"
#include "pmoe/diagnostics.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/metrics.hpp"
#include "pmoe/rules.hpp"
#include "pmoe/solvers.hpp"

namespace pmoe {

namespace {

namespace fs = std::filesystem;

std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}

SplitSpec parse_split(const std::string& text, std::uint64_t seed) {
  std::vector<double> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("cli", "bad --split value '" + text + "'");
    }
  }
  if (parts.size() != 3) throw InvalidArgument("cli", "--split needs three fractions");
  SplitSpec spec{parts[0], parts[1], parts[2], seed};
  spec.validate();
  return spec;
}

GuidelineVector pick(const GuidelineVector& g, const std::vector<std::size_t>& index) {
  GuidelineVector out;
  out.reserve(index.size());
  for (auto i : index) out.push_back(g[i]);
  return out;
}

// Raw data, bound rules and the guideline on every row.
struct Inputs {
  Dataset raw;
  RuleSet rules;
  GuidelineVector guideline;
};

Inputs load_inputs(const std::string& data_path, const std::string& rules_path) {
  Inputs in;
  in.raw = load_csv(data_path);
  in.rules = RuleSet::load(rules_path).bind(in.raw.columns);
  in.guideline = in.rules.evaluate(in.raw.features);
  return in;
}

struct Part {
  Dataset data;  // standardized
  GuidelineVector guideline;
};

struct Parts {
  Part train, val, test;
};

Parts split_and_standardize(const Inputs& in, const SplitSpec& spec,
                            const std::optional<Standardization>& fixed_record) {
  const DataSplit split = split_dataset(in.raw, spec);
  const Standardization record =
      fixed_record ? *fixed_record : fit_standardization(split.train.features);
  Parts parts;
  parts.train = {apply_standardization(split.train, record), pick(in.guideline, split.train_index)};
  parts.val = {apply_standardization(split.val, record), pick(in.guideline, split.val_index)};
  parts.test = {apply_standardization(split.test, record), pick(in.guideline, split.test_index)};
  return parts;
}

void check_schema(const MoEModel& model, const Dataset& data) {
  if (model.columns != data.columns) {
    throw SchemaError("cli", "model columns do not match the data header");
  }
  if (!model.standardization) {
    throw SchemaError("cli", "model file has no standardization record");
  }
}

std::optional<double> maybe_auc(const Vector& scores, const Vector& labels) {
  const bool has0 = (labels.array() == 0.0).any();
  const bool has1 = (labels.array() == 1.0).any();
  if (!has0 || !has1) return std::nullopt;
  return auc(std::span<const double>(scores.data(), scores.size()),
             std::span<const double>(labels.data(), labels.size()));
}

fs::path sibling(const fs::path& base, const std::string& suffix) {
  return fs::path(base.string() + suffix);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, rules, out, warm;
  std::string solver = "unconstrained";
  std::string split = "0.7,0.15,0.15";
  double gamma = 0.0;
  double epsilon = 0.1;
  double t = 5.0;
  double lr = 0.1;
  int max_iters = 1000;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
  bool applicable_only = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(a.data, a.rules);
  SolverConfig config;
  config.kind = parse_solver_kind(a.solver);
  config.gamma = a.gamma;
  config.epsilon = a.epsilon;
  config.t = a.t;
  config.learning_rate = a.lr;
  config.max_iters = a.max_iters;
  config.grad_tol = a.grad_tol;
  config.seed = a.seed;
  config.coverage_applicable_only = a.applicable_only;
  config.validate();

  std::optional<MoEModel> warm;
  if (!a.warm.empty()) {
    warm = load_model(fs::path(a.warm));
    if (config.kind == SolverKind::kUnconstrained) {
      throw InvalidArgument("cli", "--warm applies only to constrained solvers");
    }
  }
  const Parts parts = split_and_standardize(in, parse_split(a.split, a.seed),
                                            warm ? warm->standardization : std::nullopt);
  if (warm) check_schema(*warm, parts.train.data);

  const PipelineResult result = train_pipeline(parts.train.data, parts.train.guideline, config, warm);
  const TrainResult& final = result.final;
  const fs::path out_path(a.out);
  save_model(final.model, out_path);
  {
    std::ofstream report(sibling(out_path, ".report.csv"), std::ios::binary);
    final.report.write_csv(report);
  }
  if (config.kind != SolverKind::kUnconstrained && !warm) {
    save_model(result.warm.model, sibling(out_path, ".warm"));
  }

  if (final.report.status == TrainStatus::kInfeasibleInit) {
    err << "error [solvers]: " << final.report.message << '\n';
    return kExitInfeasibleInit;
  }
  if (final.report.status == TrainStatus::kProjectionFailed) {
    err << "error [solvers]: " << final.report.message << '\n';
    return kExitSolverAbort;
  }

  const Evaluation ev = evaluate(final.model, parts.val.data.features, parts.val.guideline);
  const auto val_auc = maybe_auc(ev.mixture, parts.val.data.labels);
  out << "status: " << to_string(final.report.status) << '\n';
  out << "iterations: " << final.report.records.size() << '\n';
  out << "train_loss: " << fixed(loss(final.model, parts.train.data, parts.train.guideline)) << '\n';
  out << "val_auc: " << (val_auc ? fixed(*val_auc) : std::string("undefined")) << '\n';
  out << "val_soft_coverage: "
      << (parts.val.data.rows() ? fixed(soft_coverage(final.model, parts.val.data))
                                : std::string("undefined"))
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model, data, rules;
  std::string baseline = "none";
  std::string split;
  std::string part = "all";
  std::string objective = "accuracy";
  std::uint64_t seed = 0;
};

// Standardized evaluation part plus the part used for threshold calibration.
struct EvalData {
  Part eval;
  Part calibration;
};

EvalData eval_data(const EvalArgs& a, const MoEModel& model) {
  const Inputs in = load_inputs(a.data, a.rules);
  if (model.columns != in.raw.columns) {
    throw SchemaError("cli", "model columns do not match the data header");
  }
  if (!model.standardization) {
    throw SchemaError("cli", "model file has no standardization record");
  }
  if (a.split.empty()) {
    if (a.part != "all") throw InvalidArgument("cli", "--part needs --split");
    Part all{apply_standardization(in.raw, *model.standardization), in.guideline};
    return {all, all};
  }
  Parts parts = split_and_standardize(in, parse_split(a.split, a.seed), model.standardization);
  const Part* chosen = nullptr;
  if (a.part == "train") chosen = &parts.train;
  if (a.part == "val") chosen = &parts.val;
  if (a.part == "test") chosen = &parts.test;
  if (!chosen) throw InvalidArgument("cli", "--part must be train, val or test with --split");
  const Part& calib = parts.val.data.rows() ? parts.val : parts.train;
  return {*chosen, calib};
}

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  MoEModel model = load_model(fs::path(a.model));
  if (a.baseline == "standard-moe" && model.solver != "unconstrained") {
    const fs::path warm = sibling(a.model, ".warm");
    if (!fs::exists(warm)) {
      throw InvalidArgument("cli", "standard-moe baseline needs " + warm.string());
    }
    model = load_model(warm);
  }
  const EvalData d = eval_data(a, model);
  const Dataset& data = d.eval.data;
  if (data.rows() == 0) throw InvalidArgument("cli", "selected part has no rows");
  const CalibrationObjective objective = a.objective == "youden"
                                             ? CalibrationObjective::kYouden
                                             : CalibrationObjective::kAccuracy;
  if (a.objective != "accuracy" && a.objective != "youden") {
    throw InvalidArgument("cli", "--objective must be accuracy or youden");
  }

  const std::span<const double> labels(data.labels.data(), data.labels.size());
  out << "baseline: " << a.baseline << '\n';
  out << "rows: " << data.rows() << '\n';

  if (a.baseline == "human-only") {
    const int fallback = model.base_rate >= 0.5 ? 1 : 0;
    Vector scores(data.rows());
    Vector hard(data.rows());
    for (std::size_t n = 0; n < data.rows(); ++n) {
      const Guideline g = d.eval.guideline[n];
      scores[static_cast<Eigen::Index>(n)] = applicable(g) ? to_int(g) : model.base_rate;
      hard[static_cast<Eigen::Index>(n)] = applicable(g) ? to_int(g) : fallback;
    }
    const auto a_uc = maybe_auc(scores, data.labels);
    out << "auc: " << (a_uc ? fixed(*a_uc) : std::string("undefined")) << '\n';
    out << "accuracy: "
        << fixed(accuracy(std::span<const double>(hard.data(), hard.size()), labels, 0.5)) << '\n';
    out << "soft_coverage: " << fixed(100.0) << '\n';
    out << "hard_coverage: " << fixed(100.0) << '\n';
    return kExitOk;
  }

  const bool ml_only = a.baseline == "ml-only";
  if (!ml_only && a.baseline != "none" && a.baseline != "standard-moe") {
    throw InvalidArgument("cli", "unknown baseline '" + a.baseline + "'");
  }
  const GuidelineVector none(data.rows(), Guideline::kNotApplicable);
  const GuidelineVector& g = ml_only ? none : d.eval.guideline;
  const GuidelineVector calib_none(d.calibration.data.rows(), Guideline::kNotApplicable);
  const GuidelineVector& calib_g = ml_only ? calib_none : d.calibration.guideline;

  const Evaluation ev = evaluate(model, data.features, g);
  const Thresholds th =
      calibrate_thresholds(model, d.calibration.data, calib_g, objective);
  double correct = 0.0;
  for (Eigen::Index n = 0; n < ev.mixture.size(); ++n) {
    const int label = hard_gated_label(ev.expert[n], ev.gate[n], g[static_cast<std::size_t>(n)],
                                       th.gate, th.pred);
    correct += label == data.labels[n] ? 1.0 : 0.0;
  }
  const auto a_uc = maybe_auc(ml_only ? ev.expert : ev.mixture, data.labels);
  out << "auc: " << (a_uc ? fixed(*a_uc) : std::string("undefined")) << '\n';
  out << "loss: " << fixed(loss(model, data, g)) << '\n';
  out << "gate_threshold: " << fixed(th.gate) << '\n';
  out << "pred_threshold: " << fixed(th.pred) << '\n';
  out << "accuracy: " << fixed(100.0 * correct / static_cast<double>(data.rows())) << '\n';
  if (ml_only) {
    out << "soft_coverage: " << fixed(0.0) << '\n';
    out << "hard_coverage: " << fixed(0.0) << '\n';
  } else {
    out << "soft_coverage: " << fixed(soft_coverage(model, data)) << '\n';
    out << "hard_coverage: " << fixed(hard_coverage(model, data, th.gate)) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CurveArgs {
  std::string model, data, rules, out;
  int grid_points = 101;
  bool frontier = false;
};

std::vector<double> uniform_grid(int points) {
  if (points < 2) throw InvalidArgument("cli", "--grid-points must be at least 2");
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(static_cast<double>(i) / (points - 1));
  return grid;
}

int cmd_curve(const CurveArgs& a, std::ostream& out) {
  const MoEModel model = load_model(fs::path(a.model));
  const Inputs in = load_inputs(a.data, a.rules);
  check_schema(model, in.raw);
  const Dataset data = apply_standardization(in.raw, *model.standardization);
  const auto grid = a.grid_points == 101 ? default_grid() : uniform_grid(a.grid_points);
  const Curve curve = accuracy_coverage_curve(model, data, in.guideline, grid, grid);
  const auto& points = a.frontier ? curve.frontier : curve.points;
  if (a.out.empty()) {
    write_curve_csv(out, points);
  } else {
    std::ofstream file(a.out, std::ios::binary);
    if (!file) throw InvalidArgument("cli", "cannot write " + a.out);
    write_curve_csv(file, points);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_gating_report(const std::string& model_path, int top_k, std::ostream& out) {
  if (top_k < 1) throw InvalidArgument("cli", "--top-k must be positive");
  const MoEModel model = load_model(fs::path(model_path));
  const auto d = static_cast<Eigen::Index>(model.dim());
  std::vector<Eigen::Index> order;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (model.w[j] != 0.0) order.push_back(j);
  }
  if (order.empty()) {
    out << "notice: all gate weights are zero; nothing to report\n";
    return kExitOk;
  }
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(model.w[x]) > std::abs(model.w[y]);
  });
  if (order.size() > static_cast<std::size_t>(top_k)) order.resize(static_cast<std::size_t>(top_k));
  out << "rank,feature,weight\n";
  char buf[64];
  int rank = 1;
  for (auto j : order) {
    std::snprintf(buf, sizeof(buf), "%.6f", model.w[j]);
    const std::string name = static_cast<std::size_t>(j) < model.columns.size()
                                 ? model.columns[static_cast<std::size_t>(j)]
                                 : "x" + std::to_string(j);
    out << rank++ << ',' << name << ',' << buf << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_data, out_rules, out_truth;
  std::string regime = "custom";
  std::string consequent = "positive";
  std::size_t n = 1000;
  std::size_t d = 4;
  double alpha = 1.0;
  double class_balance = 0.5;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg;
  if (a.regime == "A") {
    cfg = regime_config(Regime::kA, a.n, a.d, a.seed);
  } else if (a.regime == "B") {
    cfg = regime_config(Regime::kB, a.n, a.d, a.seed);
  } else if (a.regime == "adversarial") {
    cfg = regime_config(Regime::kAdversarial, a.n, a.d, a.seed);
  } else if (a.regime == "custom") {
    static const std::map<std::string, ConsequentMode> modes = {
        {"negative", ConsequentMode::kNegative},
        {"positive", ConsequentMode::kPositive},
        {"majority", ConsequentMode::kMajority},
        {"minority", ConsequentMode::kMinority}};
    const auto it = modes.find(a.consequent);
    if (it == modes.end()) throw InvalidArgument("cli", "unknown --consequent " + a.consequent);
    cfg.n = a.n;
    cfg.d = a.d;
    cfg.seed = a.seed;
    cfg.alpha = a.alpha;
    cfg.consequent = it->second;
  } else {
    throw InvalidArgument("cli", "unknown --regime " + a.regime);
  }
  cfg.class_balance = a.class_balance;
  cfg.noise_sigma = a.noise;
  const SyntheticData synth = generate_synthetic(cfg);
  write_csv(fs::path(a.out_data), synth.data);
  {
    std::ofstream rules(a.out_rules, std::ios::binary);
    rules << synth.rules.to_text();
  }
  const std::string truth_path = a.out_truth.empty() ? a.out_data + ".truth.txt" : a.out_truth;
  {
    std::ofstream truth(truth_path, std::ios::binary);
    truth << synth.truth.to_text();
  }
  out << "rows: " << synth.data.rows() << '\n';
  out << "in_region_rows: " << synth.truth.in_region_rows << '\n';
  out << "positive_rate: " << fixed(synth.truth.realized_positive_rate) << '\n';
  if (synth.truth.empty_region) out << "warning: rule region is empty\n";
  if (!synth.truth.balance_attainable) out << "warning: class balance not attainable\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string model, data, rules;
  std::string check = "all";
  double lambda = 0.5;
  double fd_step = 1e-6;
  double tol = 1e-5;
  double epsilon = -1.0;
  std::uint64_t seed = 0;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const MoEModel model = load_model(fs::path(a.model));
  const Inputs in = load_inputs(a.data, a.rules);
  check_schema(model, in.raw);
  const Dataset data = apply_standardization(in.raw, *model.standardization);
  const bool all = a.check == "all";
  if (!all && a.check != "gradients" && a.check != "monotonicity" && a.check != "assumptions") {
    throw InvalidArgument("cli", "unknown --check " + a.check);
  }
  if (all || a.check == "gradients") {
    out << "[gradients]\n" << check_gradients(model, data, in.guideline, a.fd_step, a.tol).to_text();
  }
  if (all || a.check == "monotonicity") {
    out << "[monotonicity]\n" << monotonicity_diagnostic(model, data, in.guideline, a.lambda).to_text();
  }
  if (all || a.check == "assumptions") {
    SolverConfig config;
    config.epsilon = a.epsilon >= 0.0 ? a.epsilon : model.epsilon;
    config.seed = a.seed;
    out << "[assumptions]\n" << check_assumptions(model, data, in.guideline, config).to_text();
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_rule_report(const std::string& model_path, const std::string& data_path,
                    const std::string& rules_path, double threshold, std::ostream& out) {
  const MoEModel model = load_model(fs::path(model_path));
  const Inputs in = load_inputs(data_path, rules_path);
  check_schema(model, in.raw);
  const Dataset data = apply_standardization(in.raw, *model.standardization);
  const Evaluation ev = evaluate(model, data.features, in.guideline);
  const auto stats = rule_report(in.rules, in.raw.features, in.raw.labels, ev.mixture, threshold);
  out << "rule,applicable_rows,applicability,compliance,rule_accuracy\n";
  char buf[64];
  for (const auto& s : stats) {
    out << s.name << ',' << s.applicable_rows << ',';
    std::snprintf(buf, sizeof(buf), "%.2f", s.applicability);
    out << buf << ',';
    if (s.compliance) {
      std::snprintf(buf, sizeof(buf), "%.2f", *s.compliance);
      out << buf;
    }
    out << ',';
    if (s.rule_accuracy) {
      std::snprintf(buf, sizeof(buf), "%.2f", *s.rule_accuracy);
      out << buf;
    }
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preferential mixture of experts: combine rule-based guidelines with a learned "
               "expert through a gating function."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit a model (step 1, optionally followed by a "
                                              "constrained solver)");
  c_train->add_option("--data", train.data, "Training CSV; last column 'label'")->required();
  c_train->add_option("--rules", train.rules, "Rules file")->required();
  c_train->add_option("--out", train.out, "Model output path; writes <out>.report.csv and, for "
                                          "constrained solvers without --warm, <out>.warm")
      ->required();
  c_train->add_option("--solver", train.solver, "unconstrained | log-barrier | projected-gradient")
      ->capture_default_str();
  c_train->add_option("--gamma", train.gamma,
                      "L1 weight on the gate; suggested sweep {0.0, 0.001, 0.01, 0.05, 0.1, 1.0}")
      ->capture_default_str();
  c_train->add_option("--epsilon", train.epsilon, "Allowed relative loss increase over step 1")
      ->capture_default_str();
  c_train->add_option("--t", train.t, "Coverage weight of the log-barrier objective")
      ->capture_default_str();
  c_train->add_option("--lr", train.lr,
                      "Initial step size; suggested grid {1e-4, 1e-3, 0.01, 0.1}")
      ->capture_default_str();
  c_train->add_option("--max-iters", train.max_iters, "Iteration limit per solver")
      ->capture_default_str();
  c_train->add_option("--grad-tol", train.grad_tol, "Convergence tolerance")->capture_default_str();
  c_train->add_option("--seed", train.seed, "Seed for initialization and the split")
      ->capture_default_str();
  c_train->add_option("--warm", train.warm, "Step-1 model to start a constrained solver from");
  c_train->add_option("--split", train.split, "train,val,test fractions")->capture_default_str();
  c_train->add_flag("--coverage-applicable-only", train.applicable_only,
                    "Sum the coverage objective over rows where a rule applies");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Report AUC, accuracy and coverage");
  c_eval->add_option("--model", ev.model, "Model file")->required();
  c_eval->add_option("--data", ev.data, "CSV to evaluate")->required();
  c_eval->add_option("--rules", ev.rules, "Rules file")->required();
  c_eval->add_option("--baseline", ev.baseline,
                     "none | ml-only (expert alone) | human-only (rules, majority class "
                     "elsewhere) | standard-moe (the <model>.warm step-1 model)")
      ->capture_default_str();
  c_eval->add_option("--split", ev.split, "Re-create a training split, e.g. 0.7,0.15,0.15");
  c_eval->add_option("--seed", ev.seed, "Split seed")->capture_default_str();
  c_eval->add_option("--part", ev.part, "all | train | val | test")->capture_default_str();
  c_eval->add_option("--objective", ev.objective, "Threshold calibration: accuracy | youden")
      ->capture_default_str();

  CurveArgs cv;
  auto* c_curve = app.add_subcommand("curve", "Accuracy against hard coverage as CSV");
  c_curve->add_option("--model", cv.model, "Model file")->required();
  c_curve->add_option("--data", cv.data, "CSV to evaluate")->required();
  c_curve->add_option("--rules", cv.rules, "Rules file")->required();
  c_curve->add_option("--out", cv.out, "Output CSV (stdout when omitted)");
  c_curve->add_option("--grid-points", cv.grid_points, "Points per threshold grid on [0, 1]")
      ->capture_default_str();
  c_curve->add_flag("--frontier", cv.frontier, "Only the best prediction threshold per gate threshold");

  std::string gr_model;
  int top_k = 10;
  auto* c_gr = app.add_subcommand("gating-report", "Largest gate weights by magnitude");
  c_gr->add_option("--model", gr_model, "Model file")->required();
  c_gr->add_option("--top-k", top_k, "Number of weights to list")->capture_default_str();

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with one rule");
  c_synth->add_option("--out-data", sy.out_data, "CSV output")->required();
  c_synth->add_option("--out-rules", sy.out_rules, "Rules output")->required();
  c_synth->add_option("--out-truth", sy.out_truth, "Ground-truth sidecar (default <data>.truth.txt)");
  c_synth->add_option("--regime", sy.regime, "A | B | adversarial | custom")->capture_default_str();
  c_synth->add_option("--n", sy.n, "Rows")->capture_default_str();
  c_synth->add_option("--d", sy.d, "Features")->capture_default_str();
  c_synth->add_option("--alpha", sy.alpha, "In-region label replacement rate (custom regime)")
      ->capture_default_str();
  c_synth->add_option("--consequent", sy.consequent,
                      "negative | positive | majority | minority (custom regime)")
      ->capture_default_str();
  c_synth->add_option("--class-balance", sy.class_balance, "Target class-1 fraction")
      ->capture_default_str();
  c_synth->add_option("--noise", sy.noise, "Std-dev of latent logit noise")->capture_default_str();
  c_synth->add_option("--seed", sy.seed, "Generator seed")->capture_default_str();

  DiagnoseArgs dg;
  auto* c_diag = app.add_subcommand("diagnose", "Gradient, monotonicity and assumption checks");
  c_diag->add_option("--model", dg.model, "Model file")->required();
  c_diag->add_option("--data", dg.data, "CSV (keep it small for monotonicity)")->required();
  c_diag->add_option("--rules", dg.rules, "Rules file")->required();
  c_diag->add_option("--check", dg.check, "all | gradients | monotonicity | assumptions")
      ->capture_default_str();
  c_diag->add_option("--lambda", dg.lambda, "Multiplier for the monotonicity check")
      ->capture_default_str();
  c_diag->add_option("--fd-step", dg.fd_step, "Finite-difference step for the gradient check")
      ->capture_default_str();
  c_diag->add_option("--tol", dg.tol, "Gradient check tolerance")->capture_default_str();
  c_diag->add_option("--epsilon", dg.epsilon, "Margin for the feasibility check (model's when < 0)")
      ->capture_default_str();
  c_diag->add_option("--seed", dg.seed, "Seed for the concavity probe")->capture_default_str();

  std::string rr_model, rr_data, rr_rules;
  double rr_threshold = 0.5;
  auto* c_rr = app.add_subcommand("rule-report", "Per-rule applicability, compliance and accuracy");
  c_rr->add_option("--model", rr_model, "Model file")->required();
  c_rr->add_option("--data", rr_data, "CSV")->required();
  c_rr->add_option("--rules", rr_rules, "Rules file")->required();
  c_rr->add_option("--threshold", rr_threshold, "Prediction threshold")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_train) return cmd_train(train, out, err);
    if (*c_eval) return cmd_evaluate(ev, out);
    if (*c_curve) return cmd_curve(cv, out);
    if (*c_gr) return cmd_gating_report(gr_model, top_k, out);
    if (*c_synth) return cmd_synth(sy, out);
    if (*c_diag) return cmd_diagnose(dg, out);
    if (*c_rr) return cmd_rule_report(rr_model, rr_data, rr_rules, rr_threshold, out);
  } catch (const SolverError& e) {
    err << "error [" << e.component() << "]: " << e.what() << '\n';
    return kExitSolverAbort;
  } catch (const Error& e) {
    err << "error [" << e.component() << "]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error [cli]: " << e.what() << '\n';
    return kExitSolverAbort;
  }
  return kExitUsage;
}

}  // namespace pmoe
