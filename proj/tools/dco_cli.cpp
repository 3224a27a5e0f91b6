// dco: simulate / p2d / train / report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dco/catalog.hpp"
#include "dco/config.hpp"
#include "dco/errors.hpp"
#include "dco/event_io.hpp"
#include "dco/metrics.hpp"
#include "dco/model_io.hpp"
#include "dco/p2d.hpp"
#include "dco/simulator.hpp"
#include "dco/table_io.hpp"
#include "dco/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string window;
};

dco::ExperimentConfig load_config(const Common& c) {
  if (c.config.empty()) throw dco::ConfigError("config", "--config is required");
  auto cfg = dco::load_experiment_config(c.config);
  if (c.seed) cfg.simulation.seed = *c.seed;
  if (!c.window.empty()) cfg.report_window = dco::parse_window(c.window);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dco::Error("cannot write '" + path.string() + "'");
  out << text;
}

json lift_json(const dco::Lift& l) {
  if (l.percent) return *l.percent;
  return json{{"absent", dco::to_string(l.status)}};
}

json summary_json(const dco::Simulator& sim, const dco::Report& report) {
  json buckets = json::array();
  for (const auto& b : report.buckets) {
    json cpa = b.cpa() ? json(*b.cpa()) : json(nullptr);
    buckets.push_back({{"name", b.name},
                       {"share", b.share},
                       {"impressions", b.counts.impressions},
                       {"clicks", b.counts.clicks},
                       {"conversions", b.counts.conversions},
                       {"spend", b.counts.spend},
                       {"cvr", b.cvr()},
                       {"ctr", b.ctr()},
                       {"cpm", b.cpm()},
                       {"cpa", cpa}});
  }
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"baseline", r.baseline},
                    {"cvr_lift", lift_json(r.cvr)},
                    {"ctr_lift", lift_json(r.ctr)},
                    {"delivery_lift", lift_json(r.delivery)},
                    {"cpm_lift", lift_json(r.cpm)},
                    {"cpa_lift", lift_json(r.cpa)},
                    {"cvr_p_value", r.cvr_p_value}});
  }
  return {{"seed", sim.settings().seed},
          {"ticks", sim.settings().ticks},
          {"model_version", sim.model().model_version()},
          {"events", sim.events_emitted()},
          {"pending_conversions", sim.pending_conversions()},
          {"ads_in_scope", report.included_ads},
          {"buckets", buckets},
          {"lifts", rows}};
}

std::vector<dco::BucketShare> shares_of(const dco::SimulationSettings& s) {
  std::vector<dco::BucketShare> out;
  for (const auto& b : s.buckets) out.push_back({b.name, b.share});
  return out;
}

std::string treatment_of(const dco::SimulationSettings& s) {
  for (const auto& b : s.buckets) {
    if (b.policy == dco::PolicyKind::conversion_dco) return b.name;
  }
  return "conversion-dco";
}

int cmd_simulate(const Common& c) {
  const auto cfg = load_config(c);
  const fs::path out(c.out_dir);
  fs::create_directories(out);

  dco::Simulator sim(dco::generate_world(cfg.world), cfg.simulation);
  dco::MetricsAccumulator metrics(cfg.report_window);
  sim.add_sink([&](const dco::Event& e) { metrics.add(e); });
  std::optional<dco::EventLogWriter> writer;
  if (cfg.write_events) {
    writer.emplace(out / "events.jsonl", dco::EventLogHeader{shares_of(cfg.simulation)});
    sim.add_sink([&](const dco::Event& e) { writer->write(e); });
  }
  sim.run();
  if (writer) writer->flush();

  dco::save_model_file(sim.model(), out / "model.jsonl");
  dco::save_table_file(sim.table(), out / "table.jsonl");
  dco::save_catalog_file(sim.catalog(), out / "catalog.json");
  const auto report =
      dco::build_report(metrics, shares_of(cfg.simulation), treatment_of(cfg.simulation));
  const std::string text = dco::render_report(report);
  write_text(out / "report.txt", text);
  write_text(out / "summary.json", summary_json(sim, report).dump(2) + "\n");
  std::cout << text;
  return 0;
}

struct P2DArgs {
  std::string model;
  std::string catalog;
  std::optional<double> beta, lambda_mix, r_ds;
};

int cmd_p2d(const Common& c, const P2DArgs& a) {
  dco::P2DParams params;
  if (!c.config.empty()) params = load_config(c).simulation.p2d;
  if (a.beta) params.beta = *a.beta;
  if (a.lambda_mix) params.lambda_mix = *a.lambda_mix;
  if (a.r_ds) params.r_ds = *a.r_ds;
  params.validate();

  const auto model = dco::load_model_file(a.model);
  const auto catalog = dco::load_catalog_file(a.catalog);
  if (catalog.model_version() && *catalog.model_version() != model.model_version()) {
    throw dco::StructuralError("catalog is pinned to model " + *catalog.model_version() +
                               " but the snapshot is " + model.model_version());
  }
  if (catalog.segments().keys != model.user_features()) {
    throw dco::StructuralError("catalog segment keys do not match the snapshot's user features");
  }
  const auto ads = catalog.dco_ads();
  const auto table = dco::generate_table(model, ads, catalog.segments(), params);
  const fs::path out = fs::path(c.out_dir) / "table.jsonl";
  dco::save_table_file(table, out);
  std::cout << "wrote " << out.string() << " (" << table.entries.size() << " entries, model "
            << table.model_version << ")\n";
  return 0;
}

struct TrainArgs {
  std::string events;
  std::string catalog;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  const auto cfg = load_config(c);
  const auto catalog = a.catalog.empty() ? dco::generate_world(cfg.world).catalog()
                                         : dco::load_catalog_file(a.catalog);
  dco::ModelState model = dco::initial_model(cfg.simulation, catalog.segments());
  const dco::Downsampler sampler(cfg.simulation.p2d.r_ds, cfg.simulation.downsample_seed());

  std::ifstream in(a.events);
  if (!in) throw dco::ConfigError("events", "cannot open '" + a.events + "'");
  std::vector<dco::TrainingExample> batch;
  dco::for_each_event(in, [&](const dco::Event& e) {
    if (auto ex = dco::to_training_example(e, catalog, model.user_features(), sampler)) {
      batch.push_back(std::move(*ex));
    }
  });
  const auto result = dco::train_period(model, std::move(batch));
  const fs::path out = fs::path(c.out_dir) / "model.jsonl";
  dco::save_model_file(model, out);
  std::cout << "wrote " << out.string() << " (trained " << result.trained << ", skipped "
            << result.skipped << ", model " << model.model_version() << ")\n";
  return 0;
}

struct ReportArgs {
  std::string events;
  std::string treatment = "conversion-dco";
  bool to_file = false;
};

int cmd_report(const Common& c, const ReportArgs& a) {
  dco::Window window;
  if (!c.config.empty()) window = load_config(c).report_window;
  if (!c.window.empty()) window = dco::parse_window(c.window);

  std::ifstream in(a.events);
  if (!in) throw dco::ConfigError("events", "cannot open '" + a.events + "'");
  dco::MetricsAccumulator metrics(window);
  const auto header = dco::for_each_event(in, [&](const dco::Event& e) { metrics.add(e); });
  const auto report = dco::build_report(metrics, header.buckets, a.treatment);
  const std::string text = dco::render_report(report);
  if (a.to_file) write_text(fs::path(c.out_dir) / "report.txt", text);
  std::cout << text;
  return 0;
}

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required();
  app->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "override the config seed");
  app->add_option("--window", c.window, "evaluation window begin:end in ticks");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversion-based dynamic creative optimization pipeline"};
  app.require_subcommand(1);

  Common common;
  P2DArgs p2d;
  TrainArgs train;
  ReportArgs report;

  auto* simulate_cmd = app.add_subcommand("simulate", "run an A/B marketplace simulation");
  add_common(simulate_cmd, common, true);

  auto* p2d_cmd = app.add_subcommand("p2d", "build a distribution table from a model snapshot");
  add_common(p2d_cmd, common, false);
  p2d_cmd->add_option("--model", p2d.model, "model snapshot (JSONL)")->required();
  p2d_cmd->add_option("--catalog", p2d.catalog, "ad catalog (JSON)")->required();
  p2d_cmd->add_option("--beta", p2d.beta, "SoftMax factor");
  p2d_cmd->add_option("--lambda", p2d.lambda_mix, "uniform mixing mass");
  p2d_cmd->add_option("--r-ds", p2d.r_ds, "negative downsampling factor");

  auto* train_cmd = app.add_subcommand("train", "train the auxiliary model on an event log");
  add_common(train_cmd, common, true);
  train_cmd->add_option("--events", train.events, "event log (JSONL)")->required();
  train_cmd->add_option("--catalog", train.catalog, "ad catalog; default: the config's world");

  auto* report_cmd = app.add_subcommand("report", "render the lift report of an event log");
  add_common(report_cmd, common, false);
  report_cmd->add_option("--events", report.events, "event log (JSONL)")->required();
  report_cmd->add_option("--treatment", report.treatment, "treatment bucket name")
      ->capture_default_str();
  report_cmd->add_flag("--write", report.to_file, "also write <out-dir>/report.txt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) return cmd_simulate(common);
    if (*p2d_cmd) return cmd_p2d(common, p2d);
    if (*train_cmd) return cmd_train(common, train);
    if (*report_cmd) return cmd_report(common, report);
  } catch (const dco::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
