#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "naim/checkpoint.hpp"
#include "naim/common.hpp"
#include "naim/data.hpp"
#include "naim/folds.hpp"
#include "naim/gradcheck.hpp"
#include "naim/imputers.hpp"
#include "naim/metrics.hpp"
#include "naim/missingness.hpp"
#include "naim/model.hpp"
#include "naim/trainer.hpp"

namespace naim {

constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {"naim", "naim-no-reg", "naim-no-reg+mean",
                                                   "naim-no-reg+knn"};
  return methods;
}

// One JSON document drives everything; every omitted field falls back to the
// defaults of the reference setup, so a config holding only dataset/schema
// paths reproduces it. Missing rates are fractions in [0, 1).
struct ExperimentConfig {
  std::string dataset_path;
  std::string schema_path;
  std::string output_dir = "out";
  std::string method = "naim";
  std::vector<double> train_missing{0.0};
  std::vector<double> test_missing{0.0};
  int folds = 5;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::size_t knn_k = 5;
  std::string validation_missing = "train-rate";  // or "test-rate"
  NaimConfig model;
  TrainConfig train;

  void validate() const {
    if (dataset_path.empty() || schema_path.empty())
      throw DataError("config: 'dataset' and 'schema' paths are required");
    const auto& methods = known_methods();
    if (std::find(methods.begin(), methods.end(), method) == methods.end())
      throw DataError("config: unknown method '" + method + "'");
    for (double p : train_missing)
      if (!(p >= 0.0 && p < 1.0)) throw DataError("config: train_missing rates must be in [0, 1)");
    for (double p : test_missing)
      if (!(p >= 0.0 && p < 1.0)) throw DataError("config: test_missing rates must be in [0, 1)");
    if (train_missing.empty() || test_missing.empty())
      throw DataError("config: missingness grids must be non-empty");
    if (folds < 2) throw DataError("config: folds must be >= 2");
    if (jobs < 1) throw DataError("config: jobs must be >= 1");
    if (validation_missing != "train-rate" && validation_missing != "test-rate")
      throw DataError("config: validation_missing must be 'train-rate' or 'test-rate'");
    model.validate();
    train.validate();
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.dataset_path = j.value("dataset", "");
    c.schema_path = j.value("schema", "");
    c.output_dir = j.value("output", c.output_dir);
    c.method = j.value("method", c.method);
    if (j.contains("train_missing")) c.train_missing = j["train_missing"].get<std::vector<double>>();
    if (j.contains("test_missing")) c.test_missing = j["test_missing"].get<std::vector<double>>();
    c.folds = j.value("folds", c.folds);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    c.knn_k = j.value("knn_k", c.knn_k);
    c.validation_missing = j.value("validation_missing", c.validation_missing);
    if (j.contains("model")) {
      const auto& m = j["model"];
      c.model.embed_dim = m.value("embed_dim", c.model.embed_dim);
      c.model.layers = m.value("layers", c.model.layers);
      c.model.heads = m.value("heads", c.model.heads);
      c.model.ff_dim = m.value("ff_dim", c.model.ff_dim);
      c.model.embedding_bias = m.value("embedding_bias", c.model.embedding_bias);
      c.model.double_masking = m.value("double_masking", c.model.double_masking);
      c.model.ln_eps = m.value("ln_eps", c.model.ln_eps);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.patience = t.value("patience", c.train.patience);
      c.train.warmup_epochs = t.value("warmup_epochs", c.train.warmup_epochs);
      c.train.plateau_window = t.value("plateau_window", c.train.plateau_window);
      c.train.lr_drop_factor = t.value("lr_drop_factor", c.train.lr_drop_factor);
      c.train.initial_lr = t.value("initial_lr", c.train.initial_lr);
      c.train.l1 = t.value("l1", c.train.l1);
      c.train.l2 = t.value("l2", c.train.l2);
    }
    return c;
  }

  static ExperimentConfig from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw DataError("config: invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dataset"] = dataset_path;
    j["schema"] = schema_path;
    j["output"] = output_dir;
    j["method"] = method;
    j["train_missing"] = train_missing;
    j["test_missing"] = test_missing;
    j["folds"] = folds;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["knn_k"] = knn_k;
    j["validation_missing"] = validation_missing;
    j["model"] = Checkpoint::config_json(model);
    j["train"] = {{"max_epochs", train.max_epochs},         {"batch_size", train.batch_size},
                  {"patience", train.patience},             {"warmup_epochs", train.warmup_epochs},
                  {"plateau_window", train.plateau_window}, {"lr_drop_factor", train.lr_drop_factor},
                  {"initial_lr", train.initial_lr},         {"l1", train.l1},
                  {"l2", train.l2}};
    return j;
  }
};

// Stable seed derivation: every per-cell stream hangs off
// (master seed, train rate, test rate, fold, method) plus a purpose label.
inline std::uint64_t cell_seed(const ExperimentConfig& cfg, double tp, double tq, int fold) {
  return mix64({cfg.seed, hash_double(tp), hash_double(tq), static_cast<std::uint64_t>(fold),
                hash_str(cfg.method)});
}

inline std::uint64_t fold_plan_seed(const ExperimentConfig& cfg) {
  return mix64({cfg.seed, hash_str("folds")});
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_rate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// 0.25 -> "25", 0.125 -> "12p5" (filesystem-safe percent tag)
inline std::string pct_tag(double p) {
  const double pct = p * 100.0;
  char buf[64];
  if (std::fabs(pct - std::nearbyint(pct)) < 1e-9)
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(pct)));
  else {
    std::snprintf(buf, sizeof buf, "%g", pct);
    for (char* c = buf; *c; ++c)
      if (*c == '.') *c = 'p';
  }
  return buf;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw DataError("cannot open '" + tmp + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw DataError("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

// Encoded, injection-applied splits for one grid cell.
struct CellData {
  TabularDataset train, val, test;
  Preprocessor prep;
};

// split -> inject train-grid MCAR (train+validation together under the
// default policy, separately at their own rates under "test-rate") -> inject
// test MCAR -> fit preprocessor on the injected training split -> encode ->
// optional imputer (fit on train, applied everywhere).
inline CellData prepare_cell(const TabularDataset& raw, const FoldPlan::Fold& fold,
                             const ExperimentConfig& cfg, double tp, double tq, std::uint64_t seed) {
  CellData cd;
  TabularDataset train_raw, val_raw;
  if (cfg.validation_missing == "train-rate") {
    std::vector<int> combined = fold.train;
    combined.insert(combined.end(), fold.validation.begin(), fold.validation.end());
    TabularDataset both = inject_mcar(raw.subset(combined),
                                      McarSpec{tp, mix64({seed, hash_str("inject-train")})});
    std::vector<int> head(fold.train.size()), tail(fold.validation.size());
    std::iota(head.begin(), head.end(), 0);
    std::iota(tail.begin(), tail.end(), static_cast<int>(fold.train.size()));
    train_raw = both.subset(head);
    val_raw = both.subset(tail);
  } else {
    train_raw = inject_mcar(raw.subset(fold.train), McarSpec{tp, mix64({seed, hash_str("inject-train")})});
    val_raw = inject_mcar(raw.subset(fold.validation), McarSpec{tq, mix64({seed, hash_str("inject-val")})});
  }
  TabularDataset test_raw =
      inject_mcar(raw.subset(fold.test), McarSpec{tq, mix64({seed, hash_str("inject-test")})});

  cd.prep = Preprocessor::fit(train_raw);
  cd.train = cd.prep.apply(train_raw);
  cd.val = cd.prep.apply(val_raw);
  cd.test = cd.prep.apply(test_raw);

  if (cfg.method == "naim-no-reg+mean") {
    const MeanImputer imp = MeanImputer::fit(cd.train);
    cd.train = imp.apply(cd.train);
    cd.val = imp.apply(cd.val);
    cd.test = imp.apply(cd.test);
  } else if (cfg.method == "naim-no-reg+knn") {
    const KnnImputer imp = KnnImputer::fit(cd.train, std::min(cfg.knn_k, cd.train.n));
    cd.train = imp.apply(cd.train);
    cd.val = imp.apply(cd.val);
    cd.test = imp.apply(cd.test);
  }
  return cd;
}

// Full pipeline for one (train rate, test rate, fold) cell; optionally hands
// back the training history and the trained parameters.
inline ScoredFold run_cell(const TabularDataset& raw, const FoldPlan& plan, const ExperimentConfig& cfg,
                           double tp, double tq, int fold, TrainHistory* history_out = nullptr,
                           NaimParameters* params_out = nullptr, Preprocessor* prep_out = nullptr) {
  const std::uint64_t seed = cell_seed(cfg, tp, tq, fold);
  const CellData cd = prepare_cell(raw, plan.folds[static_cast<std::size_t>(fold)], cfg, tp, tq, seed);

  NaimParameters init = init_naim(cfg.model, ModelSpec::from(cd.prep), mix64({seed, hash_str("init")}));
  TrainConfig tc = cfg.train;
  tc.augmentation = (cfg.method == "naim");
  tc.seed = mix64({seed, hash_str("train")});

  TrainResult res = train(init, cd.train, cd.val, tc);

  ScoredFold sf;
  sf.fold = fold;
  sf.scores = predict_scores(res.params, cd.test);
  sf.labels = cd.test.labels;
  sf.auc = auc(sf.scores, sf.labels);
  if (history_out) *history_out = std::move(res.history);
  if (params_out) *params_out = std::move(res.params);
  if (prep_out) *prep_out = cd.prep;
  return sf;
}

inline std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss,val_auc,lr,masked_cells\n";
  for (const EpochStats& e : h.epochs) {
    out += std::to_string(e.epoch) + "," + detail::fmt_g17(e.train_loss) + "," +
           detail::fmt_g17(e.val_loss) + "," + detail::fmt_g17(e.val_auc) + "," +
           detail::fmt_g17(e.lr) + "," + std::to_string(e.masked_cells) + "\n";
  }
  return out;
}

struct CellOutcome {
  double train_missing = 0.0;
  double test_missing = 0.0;
  int fold = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
  ScoredFold scored;
};

struct GridReport {
  std::vector<CellOutcome> cells;      // grid order: train rate, test rate, fold
  std::vector<GridCell> aggregates;    // cells with >= 2 successful folds
  std::string results_csv_path, grid_txt_path, manifest_path;
};

// Cartesian product of train rates x test rates x folds, run on up to
// cfg.jobs threads. A failing cell is recorded and isolated; everything else
// proceeds. results.csv is byte-deterministic for a fixed (config, seed);
// wall-clock lives only in manifest.json.
inline GridReport run_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const FeatureSchema schema = FeatureSchema::from_json_file(cfg.schema_path);
  const TabularDataset raw = load_csv(cfg.dataset_path, schema);
  if (raw.n == 0) throw DataError("run_grid: dataset is empty");
  const FoldPlan plan = stratified_kfold(raw.labels, static_cast<int>(schema.class_count()), cfg.folds,
                                         fold_plan_seed(cfg));
  std::filesystem::create_directories(cfg.output_dir);

  GridReport report;
  for (double tp : cfg.train_missing)
    for (double tq : cfg.test_missing)
      for (int f = 0; f < cfg.folds; ++f) {
        CellOutcome c;
        c.train_missing = tp;
        c.test_missing = tq;
        c.fold = f;
        c.seed = cell_seed(cfg, tp, tq, f);
        report.cells.push_back(std::move(c));
      }

  std::mutex next_mutex;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= report.cells.size()) return;
        i = next++;
      }
      CellOutcome& c = report.cells[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainHistory hist;
        c.scored = run_cell(raw, plan, cfg, c.train_missing, c.test_missing, c.fold, &hist);
        c.ok = true;
        const std::string hist_path = cfg.output_dir + "/history_" + cfg.method + "_tr" +
                                      detail::pct_tag(c.train_missing) + "_te" +
                                      detail::pct_tag(c.test_missing) + "_fold" +
                                      std::to_string(c.fold) + ".csv";
        detail::write_file_atomic(hist_path, history_csv(hist));
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
      }
      c.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  {
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), report.cells.size());
    for (std::size_t t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
  }

  // aggregate per (train rate, test rate)
  for (double tp : cfg.train_missing)
    for (double tq : cfg.test_missing) {
      std::vector<ScoredFold> ok_folds;
      for (const CellOutcome& c : report.cells)
        if (c.ok && c.train_missing == tp && c.test_missing == tq) ok_folds.push_back(c.scored);
      if (ok_folds.size() >= 2) report.aggregates.push_back(aggregate_cell(cfg.method, tp, tq, ok_folds));
    }

  // results.csv: one row per cell, fixed order and formatting
  std::string csv = "method,train_missing,test_missing,fold,n_test,auc,status,error\n";
  for (const CellOutcome& c : report.cells) {
    csv += cfg.method + "," + detail::fmt_rate(c.train_missing) + "," + detail::fmt_rate(c.test_missing) +
           "," + std::to_string(c.fold) + ",";
    if (c.ok) {
      csv += std::to_string(c.scored.labels.size()) + "," + detail::fmt_g17(c.scored.auc) + ",ok,";
    } else {
      csv += ",,failed," + detail::csv_quote(c.error);
    }
    csv += "\n";
  }
  report.results_csv_path = cfg.output_dir + "/results.csv";
  detail::write_file_atomic(report.results_csv_path, csv);

  // grid.txt: train-rate rows x test-rate columns, AUC x100 "mean (stderr)"
  {
    std::ostringstream os;
    os << "method: " << cfg.method << "  dataset: " << cfg.dataset_path << "  folds: " << cfg.folds
       << "  seed: " << cfg.seed << "\n";
    os << "AUC x100, mean (standard error) over folds\n\n";
    char buf[64];
    os << "train\\test";
    for (double tq : cfg.test_missing) {
      std::snprintf(buf, sizeof buf, " | %12s%%", detail::pct_tag(tq).c_str());
      os << buf;
    }
    os << "\n";
    for (double tp : cfg.train_missing) {
      std::snprintf(buf, sizeof buf, "%9s%%", detail::pct_tag(tp).c_str());
      os << buf;
      for (double tq : cfg.test_missing) {
        const GridCell* cell = nullptr;
        for (const GridCell& g : report.aggregates)
          if (g.train_missing == tp && g.test_missing == tq) cell = &g;
        if (cell)
          std::snprintf(buf, sizeof buf, " | %6.2f (%4.2f)", 100.0 * cell->mean_auc, 100.0 * cell->stderr_auc);
        else
          std::snprintf(buf, sizeof buf, " | %13s", "--");
        os << buf;
      }
      os << "\n";
    }
    report.grid_txt_path = cfg.output_dir + "/grid.txt";
    detail::write_file_atomic(report.grid_txt_path, os.str());
  }

  // manifest.json: resolved config, per-cell seeds and wall clock
  {
    nlohmann::json m;
    m["version"] = kVersion;
    m["config"] = cfg.to_json();
    m["fold_plan_seed"] = fold_plan_seed(cfg);
    m["cells"] = nlohmann::json::array();
    for (const CellOutcome& c : report.cells) {
      nlohmann::json jc;
      jc["train_missing"] = c.train_missing;
      jc["test_missing"] = c.test_missing;
      jc["fold"] = c.fold;
      jc["seed"] = c.seed;
      jc["wall_ms"] = c.wall_ms;
      jc["status"] = c.ok ? "ok" : "failed";
      if (!c.ok) jc["error"] = c.error;
      if (c.ok) jc["auc"] = c.scored.auc;
      m["cells"].push_back(std::move(jc));
    }
    report.manifest_path = cfg.output_dir + "/manifest.json";
    detail::write_file_atomic(report.manifest_path, m.dump(2) + "\n");
  }
  return report;
}

// Inverse of the preprocessor encoding, for standalone imputation output:
// numericals back to original units, categoricals back to their labels.
inline std::string decoded_csv(const TabularDataset& encoded, const Preprocessor& prep) {
  const FeatureSchema& schema = encoded.schema;
  const std::size_t F = schema.feature_count();
  std::string out;
  for (std::size_t f = 0; f < F; ++f) out += schema.features[f].name + ",";
  out += schema.label.name.empty() ? "label" : schema.label.name;
  out += "\n";
  for (std::size_t r = 0; r < encoded.n; ++r) {
    for (std::size_t f = 0; f < F; ++f) {
      if (encoded.present_at(r, f)) {
        if (schema.features[f].kind == FeatureKind::Numerical) {
          const Preprocessor::NumStat& s = prep.num[f];
          out += detail::fmt_g17(s.degenerate ? s.lo : s.lo + encoded.value_at(r, f) * (s.hi - s.lo));
        } else {
          const auto code = static_cast<std::size_t>(std::llround(encoded.value_at(r, f)));
          if (code >= prep.cats[f].size()) throw DataError("decoded_csv: code out of range");
          out += prep.cats[f][code];
        }
      }
      out += ",";
    }
    out += schema.label.classes[static_cast<std::size_t>(encoded.labels[r])];
    out += "\n";
  }
  return out;
}

// Finite-difference verification of every tape primitive plus an end-to-end
// toy model loss. Prints one line per check; returns true when all pass.
inline bool run_gradcheck_suite(std::ostream& os) {
  constexpr double kTol = 1e-4;
  bool all_ok = true;
  auto report = [&](const std::string& name, double err) {
    const bool ok = err < kTol;
    all_ok &= ok;
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-28s max rel err %.3e  %s\n", name.c_str(), err, ok ? "ok" : "FAIL");
    os << buf;
  };

  Rng rng(20240915);
  auto rand_tensor = [&](std::size_t r, std::size_t c) {
    Tensor t = Tensor::zeros({r, c});
    for (double& v : t.data) v = rng.uniform(-1.5, 1.5);
    return t;
  };

  const Tensor x34 = rand_tensor(3, 4);
  const Tensor x43 = rand_tensor(4, 3);
  const Tensor row4 = rand_tensor(1, 4);
  const Tensor w42 = rand_tensor(4, 2);
  const Tensor b12 = rand_tensor(1, 2);
  const Tensor m412 = rand_tensor(4, 12);
  const Tensor m44 = rand_tensor(4, 4);
  const Tensor k34 = rand_tensor(3, 4);
  const Tensor v34 = rand_tensor(3, 4);

  report("matmul", finite_difference_check(
                       [&](Tape& t, Tape::NodeId x) { return t.sum(t.matmul(x, t.leaf(x43))); }, x34));
  report("transpose", finite_difference_check(
                          [&](Tape& t, Tape::NodeId x) { return t.sum(t.mul(t.transpose(x), t.leaf(x43))); }, x34));
  report("add", finite_difference_check(
                    [&](Tape& t, Tape::NodeId x) { return t.sum(t.mul(t.add(x, t.leaf(x34)), t.leaf(x34))); }, x34));
  report("add_rowvec", finite_difference_check(
                           [&](Tape& t, Tape::NodeId x) {
                             return t.sum(t.mul(t.add_rowvec(t.leaf(x34), x), t.leaf(x34)));
                           },
                           row4));
  report("scale+mul", finite_difference_check(
                          [&](Tape& t, Tape::NodeId x) { return t.sum(t.mul(t.scale(x, -1.7), x)); }, x34));
  report("relu", finite_difference_check(
                     [&](Tape& t, Tape::NodeId x) { return t.sum(t.mul(t.relu(x), t.leaf(x34))); }, x34));
  report("linear", finite_difference_check(
                       [&](Tape& t, Tape::NodeId x) {
                         return t.sum(t.linear(x, t.leaf(w42), t.leaf(b12)));
                       },
                       x34));
  report("softmax_rows", finite_difference_check(
                             [&](Tape& t, Tape::NodeId x) {
                               return t.sum(t.mul(t.softmax_rows(x, {0, 1, 0, 0}), t.leaf(x34)));
                             },
                             x34));
  report("zero_rows", finite_difference_check(
                          [&](Tape& t, Tape::NodeId x) {
                            return t.sum(t.mul(t.zero_rows(x, {0, 1, 0}), t.leaf(x34)));
                          },
                          x34));
  report("layer_norm", finite_difference_check(
                           [&](Tape& t, Tape::NodeId x) {
                             return t.sum(t.mul(t.layer_norm(x, t.leaf(row4), t.leaf(row4)), t.leaf(x34)));
                           },
                           x34));
  report("concat+reshape", finite_difference_check(
                               [&](Tape& t, Tape::NodeId x) {
                                 Tape::NodeId c = t.concat_cols({x, t.leaf(x34)});
                                 Tape::NodeId r = t.concat_rows({c, c});
                                 return t.sum(t.mul(t.reshape(r, {4, 12}), t.leaf(m412)));
                               },
                               x34));
  report("gather_rows", finite_difference_check(
                            [&](Tape& t, Tape::NodeId x) {
                              std::vector<Tape::RowSpec> specs = {{x, 2, 1.0}, {Tape::kZeroRow, 0, 1.0}, {x, 0, -0.4}, {x, 2, 2.0}};
                              return t.sum(t.mul(t.gather_rows(specs, 4), t.leaf(m44)));
                            },
                            x34));
  report("cross_entropy_logits", finite_difference_check(
                                     [&](Tape& t, Tape::NodeId x) {
                                       return t.cross_entropy_logits(x, {1, 0, 3});
                                     },
                                     x34));
  report("masked_attention", finite_difference_check(
                                 [&](Tape& t, Tape::NodeId x) {
                                   Tape::NodeId a = double_masked_attention(t, x, t.leaf(k34), t.leaf(v34), {1, 0, 1});
                                   return t.sum(t.mul(a, t.leaf(x34)));
                                 },
                                 x34));

  // End-to-end: toy model, every parameter checked against finite differences.
  {
    NaimConfig config;
    config.embed_dim = 4;
    config.layers = 2;
    config.heads = 2;
    config.ff_dim = 8;
    config.embedding_bias = true;
    ModelSpec spec;
    spec.features = {{true, 3}, {false, 0}, {true, 2}, {false, 0}};
    spec.n_classes = 2;
    NaimParameters params = init_naim(config, spec, 7);
    // Jitter every parameter away from its symmetric init. Zero-initialized
    // embedding biases would leave missing-feature tokens exactly at the
    // layer-norm amplification threshold (a row with variance below eps stays
    // ~0; any nonzero row is renormalized to unit scale downstream), where the
    // loss has a near-cliff and finite differences cannot resolve the true
    // gradient. Checking at a generic point keeps the comparison meaningful.
    {
      Rng jitter(mix64({99, hash_str("gradcheck-jitter")}));
      for (const NamedParam& np : params.named())
        for (double& v : np.value->data) v += 0.05 + 0.2 * jitter.uniform();
    }

    const std::vector<std::vector<double>> values = {{1, 0.3, 0, 0.9}, {2, 0.7, 1, 0.2}};
    const std::vector<std::vector<std::uint8_t>> present = {{1, 1, 0, 1}, {1, 0, 1, 1}};
    const std::vector<int> labels = {0, 1};

    auto loss_value = [&]() {
      Tape tape;
      TapeModel tm = bind_model(tape, params);
      std::vector<Tape::NodeId> lg;
      for (std::size_t s = 0; s < values.size(); ++s) lg.push_back(forward(tape, tm, values[s], present[s]));
      return tape.value(tape.cross_entropy_logits(tape.concat_rows(lg), labels)).at(0, 0);
    };

    Tape tape;
    TapeModel tm = bind_model(tape, params);
    std::vector<Tape::NodeId> lg;
    for (std::size_t s = 0; s < values.size(); ++s) lg.push_back(forward(tape, tm, values[s], present[s]));
    tape.backward(tape.cross_entropy_logits(tape.concat_rows(lg), labels));

    double worst = 0.0;
    const double step = 1e-5;
    std::vector<NamedParam> named = params.named();
    for (std::size_t pi = 0; pi < named.size(); ++pi) {
      const Tensor& g_ad = tape.grad(tm.ordered[pi]);
      Tensor& pt = *named[pi].value;
      for (std::size_t i = 0; i < pt.data.size(); ++i) {
        const double orig = pt.data[i];
        pt.data[i] = orig + step;
        const double fp = loss_value();
        pt.data[i] = orig - step;
        const double fm = loss_value();
        pt.data[i] = orig;
        const double g_fd = (fp - fm) / (2.0 * step);
        const double denom = std::max({1.0, std::fabs(g_ad.data[i]), std::fabs(g_fd)});
        worst = std::max(worst, std::fabs(g_ad.data[i] - g_fd) / denom);
      }
    }
    report("end-to-end toy loss", worst);
  }
  return all_ok;
}

}  // namespace naim
