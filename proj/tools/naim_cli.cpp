// Command-line front end: train / evaluate / grid / impute / gradcheck.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "naim/naim.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
  std::optional<std::string> method;
  std::optional<std::vector<double>> train_missing;
  std::optional<std::vector<double>> test_missing;
};

naim::ExperimentConfig resolve_config(const CommonOpts& o) {
  naim::ExperimentConfig cfg = naim::ExperimentConfig::from_json_file(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.method) cfg.method = *o.method;
  if (o.train_missing) cfg.train_missing = *o.train_missing;
  if (o.test_missing) cfg.test_missing = *o.test_missing;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config JSON")->required();
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--out", o.out_dir, "override the output directory");
  cmd->add_option("--jobs", o.jobs, "parallel cell workers");
  cmd->add_option("--method", o.method, "override the method (naim, naim-no-reg, naim-no-reg+mean, naim-no-reg+knn)");
  cmd->add_option("--train-missing", o.train_missing, "override train missing-rate grid (fractions)")->delimiter(',');
  cmd->add_option("--test-missing", o.test_missing, "override test missing-rate grid (fractions)")->delimiter(',');
}

int cmd_train(const CommonOpts& o) {
  naim::ExperimentConfig cfg = resolve_config(o);
  const naim::FeatureSchema schema = naim::FeatureSchema::from_json_file(cfg.schema_path);
  const naim::TabularDataset raw = naim::load_csv(cfg.dataset_path, schema);
  const naim::FoldPlan plan = naim::stratified_kfold(raw.labels, static_cast<int>(schema.class_count()),
                                                     cfg.folds, naim::fold_plan_seed(cfg));
  std::filesystem::create_directories(cfg.output_dir);

  const double tp = cfg.train_missing.front();
  const double tq = cfg.test_missing.front();
  naim::TrainHistory history;
  naim::NaimParameters params;
  naim::Preprocessor prep;
  const naim::ScoredFold scored = naim::run_cell(raw, plan, cfg, tp, tq, 0, &history, &params, &prep);

  const std::string ckpt = cfg.output_dir + "/model.naim";
  naim::save_checkpoint(ckpt, params, prep);
  naim::detail::write_file_atomic(cfg.output_dir + "/history.csv", naim::history_csv(history));
  std::cout << "trained fold 0 at train_missing=" << tp << " test_missing=" << tq << "\n"
            << "best epoch " << history.best_epoch << " (val loss " << history.best_val_loss << ")\n"
            << "fold-0 test AUC " << scored.auc << "\n"
            << "checkpoint: " << ckpt << "\n";
  return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_path, const std::string& scores_path,
                 double test_missing, std::uint64_t seed) {
  naim::Checkpoint ck = naim::load_checkpoint(ckpt_path);
  naim::TabularDataset raw = naim::load_csv(data_path, ck.preprocessor.schema);
  if (raw.n == 0) throw naim::DataError("evaluate: dataset is empty");
  if (test_missing > 0.0) raw = naim::inject_mcar(raw, naim::McarSpec{test_missing, seed});
  const naim::TabularDataset enc = ck.preprocessor.apply(raw);
  const std::vector<double> scores = naim::predict_scores(ck.params, enc);
  const double a = naim::auc(scores, enc.labels);
  std::cout << "samples " << enc.n << "\nAUC " << a << "\n";
  if (!scores_path.empty()) {
    std::string csv = "index,label,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i)
      csv += std::to_string(i) + "," + std::to_string(enc.labels[i]) + "," +
             naim::detail::fmt_g17(scores[i]) + "\n";
    naim::detail::write_file_atomic(scores_path, csv);
    std::cout << "scores: " << scores_path << "\n";
  }
  return 0;
}

int cmd_grid(const CommonOpts& o) {
  naim::ExperimentConfig cfg = resolve_config(o);
  const naim::GridReport report = naim::run_grid(cfg);
  std::size_t failed = 0;
  for (const naim::CellOutcome& c : report.cells) failed += c.ok ? 0 : 1;
  std::cout << "cells: " << report.cells.size() << " (" << failed << " failed)\n"
            << "results: " << report.results_csv_path << "\n"
            << "table:   " << report.grid_txt_path << "\n"
            << "manifest: " << report.manifest_path << "\n";
  std::ifstream grid(report.grid_txt_path);
  std::cout << "\n" << std::string(std::istreambuf_iterator<char>(grid), {});
  return failed == 0 ? 0 : 3;
}

int cmd_impute(const std::string& data_path, const std::string& schema_path, const std::string& imputer,
               std::size_t k, const std::string& out_path) {
  const naim::FeatureSchema schema = naim::FeatureSchema::from_json_file(schema_path);
  const naim::TabularDataset raw = naim::load_csv(data_path, schema);
  if (raw.n == 0) throw naim::DataError("impute: dataset is empty");
  const naim::Preprocessor prep = naim::Preprocessor::fit(raw);
  const naim::TabularDataset enc = prep.apply(raw);
  naim::TabularDataset filled;
  if (imputer == "mean") {
    filled = naim::MeanImputer::fit(enc).apply(enc);
  } else if (imputer == "knn") {
    filled = naim::KnnImputer::fit(enc, std::min(k, enc.n)).apply(enc);
  } else {
    throw naim::DataError("impute: imputer must be 'mean' or 'knn'");
  }
  naim::detail::write_file_atomic(out_path, naim::decoded_csv(filled, prep));
  std::cout << "imputed " << filled.n << " rows -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"naim: missing-aware tabular transformer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("naim ") + naim::kVersion);

  CommonOpts train_opts, grid_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "fit one model (fold 0) and write a checkpoint");
  add_common(train_cmd, train_opts);
  CLI::App* grid_cmd = app.add_subcommand("grid", "run the full missingness grid");
  add_common(grid_cmd, grid_opts);

  std::string eval_ckpt, eval_data, eval_scores;
  double eval_missing = 0.0;
  std::uint64_t eval_seed = 0;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a CSV");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "CSV to score")->required();
  eval_cmd->add_option("--scores", eval_scores, "optional per-sample score CSV");
  eval_cmd->add_option("--test-missing", eval_missing, "inject MCAR at this rate before scoring");
  eval_cmd->add_option("--seed", eval_seed, "seed for the injection");

  std::string imp_data, imp_schema, imp_kind = "mean", imp_out = "imputed.csv";
  std::size_t imp_k = 5;
  CLI::App* imp_cmd = app.add_subcommand("impute", "run an imputer standalone");
  imp_cmd->add_option("--data", imp_data, "input CSV")->required();
  imp_cmd->add_option("--schema", imp_schema, "schema JSON")->required();
  imp_cmd->add_option("--imputer", imp_kind, "mean | knn");
  imp_cmd->add_option("--k", imp_k, "neighbor count for knn");
  imp_cmd->add_option("--out", imp_out, "output CSV path");

  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts);
    if (*grid_cmd) return cmd_grid(grid_opts);
    if (*eval_cmd) return cmd_evaluate(eval_ckpt, eval_data, eval_scores, eval_missing, eval_seed);
    if (*imp_cmd) return cmd_impute(imp_data, imp_schema, imp_kind, imp_k, imp_out);
    if (*gc_cmd) {
      std::cout << "gradient checks (tolerance 1e-4):\n";
      const bool ok = naim::run_gradcheck_suite(std::cout);
      std::cout << (ok ? "all checks passed\n" : "FAILURES detected\n");
      return ok ? 0 : 3;
    }
  } catch (const naim::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const naim::SplitError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const naim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
