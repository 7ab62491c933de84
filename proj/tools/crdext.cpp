#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crdext/datagen.hpp"
#include "crdext/error.hpp"
#include "crdext/eval.hpp"
#include "crdext/gencrd.hpp"
#include "crdext/parser.hpp"
#include "crdext/punq.hpp"

using namespace crdext;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string schema;
  std::string db;
  std::string out;
  std::string format = "table";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(g.out, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + g.out);
  out << text;
}

Database open_db(const Globals& g) {
  if (g.db.empty()) throw UsageError("--db is required");
  if (g.schema.empty()) return Database::load(g.db);
  auto schema = Schema::load(g.schema);
  std::vector<Table> tables;
  for (const auto& t : schema.tables()) tables.push_back(load_csv(fs::path(g.db) / (t.name + ".csv"), t));
  return Database(std::move(schema), std::move(tables));
}

std::vector<std::size_t> parse_counts(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw UsageError("expected comma-separated counts, got '" + s + "'");
    }
  }
  return out;
}

struct EstimatorChoice {
  std::string name = "histogram";
  double sample_rate = 0.01;
  std::size_t buckets = kDefaultHistogramBuckets;
  std::string model;
};

EstimatorPtr make_estimator(const EstimatorChoice& c, const Database& db, std::uint64_t seed) {
  if (c.name == "oracle") return oracle_estimator(db);
  if (c.name == "histogram") return histogram_estimator(db, c.buckets);
  if (c.name == "sampling") return sampling_estimator(db, c.sample_rate, seed);
  throw UsageError("unknown estimator '" + c.name + "' (oracle, histogram, sampling)");
}

std::shared_ptr<PunqPredictor> load_predictor(const std::string& path, const Schema& schema) {
  auto model = std::make_shared<PunqModel>(load_model(path));
  check_compatible(*model, schema);
  return std::make_shared<PunqPredictor>(std::move(model));
}

void add_estimator_options(CLI::App* cmd, EstimatorChoice& c) {
  cmd->add_option("--estimator", c.name, "oracle, histogram or sampling")->capture_default_str();
  cmd->add_option("--sample-rate", c.sample_rate, "Bernoulli rate for the sampling estimator")->capture_default_str();
  cmd->add_option("--buckets", c.buckets, "Histogram buckets per column")->capture_default_str();
  cmd->add_option("--model", c.model, "Uniqueness model file (distinct and uniqueness modes)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardinality estimation extensions: DISTINCT via a uniqueness model, AND/OR/NOT via inclusion-exclusion"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--schema", g.schema, "Schema JSON overriding <db>/schema.json");
  app.add_option("--db", g.db, "Database directory");
  app.add_option("--out", g.out, "Output path (stdout when omitted)");
  app.add_option("--format", g.format, "Report format: csv, json or table")->capture_default_str();

  // gen-db
  auto* gen_db_cmd = app.add_subcommand("gen-db", "Generate a synthetic database directory");
  std::string gen_config;
  double scale = 1.0;
  gen_db_cmd->add_option("--config", gen_config, "Generator config JSON (default: built-in star schema)");
  gen_db_cmd->add_option("--scale", scale, "Row-count multiplier for the built-in config")->capture_default_str();
  bool dump_config = false;
  gen_db_cmd->add_flag("--print-config", dump_config, "Print the generator config and exit");

  // gen-workload
  auto* gen_wl_cmd = app.add_subcommand("gen-workload", "Generate a query workload");
  std::string spec_path, joins = "150,150,150", dnf_sizes;
  WorkloadSpec wspec;
  gen_wl_cmd->add_option("--spec", spec_path, "Workload spec JSON (overrides the flags below)");
  gen_wl_cmd->add_option("--joins", joins, "Queries per join count, e.g. 150,150,150")->capture_default_str();
  gen_wl_cmd->add_option("--dnf-sizes", dnf_sizes, "Queries per DNF size 1..5; makes a general workload");
  gen_wl_cmd->add_option("--max-preds", wspec.max_preds_per_table, "Max predicates per table")->capture_default_str();
  gen_wl_cmd->add_option("--distinct-prob", wspec.distinct_prob, "Chance of SELECT DISTINCT")->capture_default_str();

  // label
  auto* label_cmd = app.add_subcommand("label", "Compute true cardinalities for a workload");
  std::string workload_path;
  label_cmd->add_option("--workload", workload_path, "Workload file")->required();

  // train-punq
  auto* train_cmd = app.add_subcommand("train-punq", "Train a uniqueness-rate model");
  std::string labels_path, log_path, layout_name = "standard";
  TrainParams hp;
  train_cmd->add_option("--workload", workload_path, "Workload file")->required();
  train_cmd->add_option("--labels", labels_path, "Labels JSON from `label`")->required();
  train_cmd->add_option("--hidden", hp.hidden, "Hidden width")->capture_default_str();
  train_cmd->add_option("--batch", hp.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", hp.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", hp.max_epochs, "Maximum epochs")->capture_default_str();
  train_cmd->add_option("--patience", hp.patience, "Early-stopping patience")->capture_default_str();
  train_cmd->add_option("--layout", layout_name, "standard or revised")->capture_default_str();
  train_cmd->add_option("--log", log_path, "Write the per-epoch training log (CSV)");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "Estimate one query");
  std::string query_text, mode_name = "dup";
  EstimatorChoice choice;
  est_cmd->add_option("query", query_text, "SQL text")->required();
  est_cmd->add_option("--mode", mode_name, "dup, distinct or general")->capture_default_str();
  add_estimator_options(est_cmd, choice);
  bool show_truth = false;
  est_cmd->add_flag("--truth", show_truth, "Also print the exact counts");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an estimator on a labeled workload");
  bool timing = false, no_implyfalse = false;
  eval_cmd->add_option("--workload", workload_path, "Workload file")->required();
  eval_cmd->add_option("--labels", labels_path, "Labels JSON")->required();
  eval_cmd->add_option("--mode", mode_name, "dup, distinct, general or uniqueness")->capture_default_str();
  add_estimator_options(eval_cmd, choice);
  eval_cmd->add_flag("--timing", timing, "Add per-query timing columns");
  eval_cmd->add_flag("--no-implyfalse", no_implyfalse, "Disable contradiction pruning in general mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_db_cmd->parsed()) {
      auto cfg = gen_config.empty() ? DbGenConfig::imdb_like(scale, g.seed) : DbGenConfig::load(gen_config);
      if (!gen_config.empty() && app.get_option("--seed")->count() > 0) cfg.seed = g.seed;
      if (dump_config) {
        write_output(g, cfg.to_json_text());
        return 0;
      }
      if (g.out.empty()) throw UsageError("gen-db needs --out <directory>");
      auto db = gen_db(cfg);
      fs::create_directories(g.out);
      db.save(g.out);
      std::ofstream(fs::path(g.out) / "gen_config.json") << cfg.to_json_text();
      for (const auto& t : db.tables()) std::cerr << t.name() << ": " << t.row_count() << " rows\n";
    } else if (gen_wl_cmd->parsed()) {
      auto db = open_db(g);
      WorkloadSpec spec = wspec;
      if (!spec_path.empty()) {
        spec = WorkloadSpec::from_json_text(read_text(spec_path));
        if (app.get_option("--seed")->count() > 0) spec.seed = g.seed;
      } else {
        spec.joins = parse_counts(joins);
        if (!dnf_sizes.empty()) spec.dnf_sizes = parse_counts(dnf_sizes);
        spec.seed = g.seed;
      }
      auto queries = gen_workload(db, spec);
      std::string text;
      for (const auto& q : queries) text += render(q) + "\n";
      write_output(g, text);
    } else if (label_cmd->parsed()) {
      auto db = open_db(g);
      auto queries = load_workload(workload_path, db.schema());
      write_output(g, labels_to_json_text(label_workload(db, queries)));
    } else if (train_cmd->parsed()) {
      auto db = open_db(g);
      if (g.out.empty()) throw UsageError("train-punq needs --out <model file>");
      auto queries = load_workload(workload_path, db.schema());
      auto labels = load_labels(labels_path);
      auto samples = training_samples(queries, labels, db.schema());
      hp.seed = g.seed;
      auto layout = FeatLayout::from_database(db, feat_variant_from_string(layout_name));
      auto t0 = std::chrono::steady_clock::now();
      auto res = train(samples, layout, hp);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save(res.model, g.out);
      if (!log_path.empty()) {
        std::ofstream log(log_path);
        log << "epoch,train_loss,val_mean_qerror,val_median_qerror\n";
        for (const auto& e : res.log.epochs)
          log << e.epoch << ',' << e.train_loss << ',' << e.val_mean_qerror << ',' << e.val_median_qerror << '\n';
      }
      std::fprintf(stderr, "%zu samples, %u epochs%s, best epoch %u, validation mean q-error %.4f, %.1fs\n",
                   samples.size(), res.model.meta.epochs, res.log.stopped_early ? " (early stop)" : "",
                   res.model.meta.best_epoch, res.model.meta.best_val_qerror, secs);
    } else if (est_cmd->parsed()) {
      auto db = open_db(g);
      auto q = parse(query_text, db.schema());
      auto mode = eval_mode_from_string(mode_name);
      auto est = make_estimator(choice, db, g.seed);
      if (mode == EvalMode::Distinct || (mode == EvalMode::General && !choice.model.empty())) {
        if (choice.model.empty()) throw UsageError("distinct mode needs --model");
        est = punq_extended(est, load_predictor(choice.model, db.schema()));
      }
      double value = 0.0;
      std::ostringstream out;
      if (mode == EvalMode::General) {
        auto r = gen_crd(q, db.schema(), *est);
        value = r.estimate;
        out.precision(17);
        out << value << "\n";
        out << "dnf_size=" << r.stats.dnf_size << " estimator_calls=" << r.stats.estimator_calls
            << " pruned=" << r.stats.pruned_by_implyfalse << "\n";
      } else if (mode == EvalMode::Uniqueness) {
        if (choice.model.empty()) throw UsageError("uniqueness mode needs --model");
        value = load_predictor(choice.model, db.schema())->predict(to_conjunctive(q, db.schema()));
        out.precision(17);
        out << value << "\n";
      } else {
        value = checked_estimate(*est, to_conjunctive(q, db.schema()));
        out.precision(17);
        out << value << "\n";
      }
      if (show_truth) {
        auto r = execute_general(db, q);
        out << "card_dup=" << r.card_dup << " card_distinct=" << r.card_distinct
            << " uniqueness=" << r.uniqueness_rate << "\n";
      }
      write_output(g, out.str());
    } else if (eval_cmd->parsed()) {
      auto db = open_db(g);
      auto queries = load_workload(workload_path, db.schema());
      auto labels = load_labels(labels_path);
      auto mode = eval_mode_from_string(mode_name);
      auto format = report_format_from_string(g.format);
      EvalReport report;
      if (mode == EvalMode::Uniqueness) {
        if (choice.model.empty()) throw UsageError("uniqueness mode needs --model");
        report = evaluate_uniqueness(db.schema(), queries, labels, *load_predictor(choice.model, db.schema()), timing);
      } else {
        auto est = make_estimator(choice, db, g.seed);
        std::shared_ptr<PunqPredictor> u;
        if (!choice.model.empty()) u = load_predictor(choice.model, db.schema());
        EvalOptions opts;
        opts.mode = mode;
        opts.timing = timing;
        opts.gencrd.use_implyfalse = !no_implyfalse;
        report = evaluate(db.schema(), queries, labels, *est, u.get(), opts);
      }
      write_output(g, render(report, format));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    // Bad flag values surface as Config errors from the library.
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
