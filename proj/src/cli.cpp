#include "huca/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "huca/checkpoint.hpp"
#include "huca/errors.hpp"

namespace huca::cli {

namespace fs = std::filesystem;

namespace {

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json kv_to_json(const KeyValues& kv) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

KeyValues kv_from_json(const nlohmann::json& j) {
  KeyValues kv;
  for (const auto& [k, v] : j.items()) kv[k] = v.get<std::string>();
  return kv;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const RunConfig& cfg, const TraceSource& source,
                    const nlohmann::json& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["created"] = now_utc();
  j["seed"] = cfg.train.seed;
  j["config"] = kv_to_json(to_key_values(cfg));
  j["traces"] = {{"mode", source.mode},
                 {"load_csv", source.load_csv},
                 {"price_csv", source.price_csv},
                 {"days", source.days},
                 {"content_hash", source.content_hash}};
  j["outputs"] = outputs;
  net::save_json((fs::path(dir) / "manifest.json").string(), j);
}

eval::BuiltinPolicy policy_from_string(const std::string& name) {
  if (name == "trained") return eval::BuiltinPolicy::trained;
  if (name == "random") return eval::BuiltinPolicy::random;
  if (name == "max-charge" || name == "max_charge")
    return eval::BuiltinPolicy::max_charge;
  throw ParseError("unknown policy '" + name + "'");
}

}  // namespace

std::string resolve_out_dir(const std::string& out) {
  const char* root = std::getenv("HUCA_RUN_DIR");
  fs::path p(out);
  if (root != nullptr && *root != '\0' && p.is_relative()) p = fs::path(root) / p;
  return p.string();
}

RunConfig resolve_config(const CliOptions& opts) {
  RunConfig cfg;
  if (opts.from_manifest) {
    const nlohmann::json manifest = net::load_json(*opts.from_manifest);
    apply_key_values(cfg, kv_from_json(manifest.at("config")));
  }
  if (!opts.config_path.empty())
    apply_key_values(cfg, load_config_file(opts.config_path));
  if (opts.seed) cfg.train.seed = *opts.seed;
  if (opts.scenario) cfg.train.scenario = scenario_from_string(*opts.scenario);
  if (opts.piles) cfg.station.n_piles = *opts.piles;
  if (opts.episodes) cfg.train.episodes = *opts.episodes;
  if (opts.ablation) cfg.train.ablation = trainer::ablation_from_string(*opts.ablation);
  if (opts.rho) cfg.train.rho = *opts.rho;
  if (opts.synthetic_days) cfg.synthetic_days = *opts.synthetic_days;
  if (opts.eval_days) cfg.eval_days = *opts.eval_days;
  return cfg;
}

TraceSource resolve_traces(const CliOptions& opts, const RunConfig& cfg) {
  TraceSource source;
  std::optional<std::string> load_csv = opts.load_csv;
  std::optional<std::string> price_csv = opts.price_csv;

  // Reproduction path: reuse the recorded trace source when the flags do
  // not name one.
  if (!load_csv && opts.from_manifest) {
    const nlohmann::json manifest = net::load_json(*opts.from_manifest);
    const auto& t = manifest.at("traces");
    if (t.at("mode").get<std::string>() == "files") {
      load_csv = t.at("load_csv").get<std::string>();
      price_csv = t.at("price_csv").get<std::string>();
    }
  }

  if (load_csv.has_value() != price_csv.has_value())
    throw ParseError("--load-csv and --price-csv must be given together");

  if (load_csv) {
    source.mode = "files";
    source.load_csv = *load_csv;
    source.price_csv = *price_csv;
    source.traces = ingest_traces(*load_csv, *price_csv);
    source.days = static_cast<int>(source.traces.whole_days());
  } else {
    source.mode = "synthetic";
    source.days = cfg.synthetic_days;
    Rng rng(derive_seed(cfg.train.seed, 10));
    source.traces = generate_synthetic_traces(rng, cfg.synthetic_days, cfg.profile);
  }
  source.content_hash = trace_content_hash(source.traces);
  return source;
}

int cmd_train(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const TraceSource source = resolve_traces(opts, cfg);
  const std::string out = resolve_out_dir(opts.out);
  fs::create_directories(fs::path(out) / "checkpoints");

  const trainer::CheckpointHook hook = [&](int episode, const trainer::PolicyBundle& b) {
    trainer::save_bundle(
        (fs::path(out) / "checkpoints" / ("episode_" + std::to_string(episode + 1)))
            .string(),
        b);
  };

  trainer::TrainResult result =
      trainer::train(cfg.train, source.traces, cfg.station, cfg.penalty,
                     cfg.train.checkpoint_every > 0 ? hook : trainer::CheckpointHook{});

  trainer::save_bundle((fs::path(out) / "checkpoints").string(), result.policy);
  result.log.write_csv((fs::path(out) / "logs.csv").string());
  std::ofstream summary((fs::path(out) / "summary.json").string(), std::ios::binary);
  summary << result.log.summary_json();
  summary.close();

  write_manifest(out, "train", cfg, source,
                 {{"checkpoints", "checkpoints"},
                  {"logs_csv", "logs.csv"},
                  {"summary_json", "summary.json"}});
  std::cout << "trained " << result.log.episodes.size() << " episodes -> " << out
            << (result.log.aborted ? " (aborted on numerical fault)" : "") << "\n";
  return result.log.aborted ? 1 : 0;
}

int cmd_eval(const CliOptions& opts) {
  CliOptions resolved = opts;
  const eval::BuiltinPolicy policy = policy_from_string(opts.policy);

  std::optional<trainer::PolicyBundle> bundle;
  if (policy == eval::BuiltinPolicy::trained) {
    if (!opts.run_dir) throw ParseError("eval with a trained policy needs --run");
    const fs::path run(*opts.run_dir);
    const fs::path checkpoints =
        fs::exists(run / "bundle.json") ? run : run / "checkpoints";
    bundle = trainer::load_bundle(checkpoints.string());
    // The run's manifest pins the world the checkpoint was trained in.
    if (!resolved.from_manifest && fs::exists(run / "manifest.json"))
      resolved.from_manifest = (run / "manifest.json").string();
  }

  const RunConfig cfg = resolve_config(resolved);
  const TraceSource source = resolve_traces(resolved, cfg);
  if (bundle && bundle->n_piles != cfg.station.n_piles)
    throw DomainError("checkpoint was trained with " +
                      std::to_string(bundle->n_piles) + " piles, config has " +
                      std::to_string(cfg.station.n_piles));

  eval::EvalConfig ecfg;
  ecfg.days = cfg.eval_days;
  ecfg.scenario = cfg.train.scenario;
  ecfg.seed = cfg.train.seed;
  ecfg.policy = policy;

  const eval::EvalResult result =
      eval::evaluate(bundle ? &*bundle : nullptr, ecfg, source.traces, cfg.station,
                     cfg.penalty);

  const std::string out = resolve_out_dir(opts.out);
  fs::create_directories(out);
  std::ofstream metrics((fs::path(out) / "metrics.json").string(), std::ios::binary);
  metrics << result.metrics.to_json();
  metrics.close();
  eval::write_ledger_csv((fs::path(out) / "ledger.csv").string(), result.ledger,
                         cfg.station.n_piles);
  write_manifest(out, "eval", cfg, source,
                 {{"metrics_json", "metrics.json"}, {"ledger_csv", "ledger.csv"}});
  std::cout << "eval " << opts.policy << ": total " << result.metrics.total_cost_usd
            << " USD (energy " << result.metrics.energy_cost_usd << ", penalty "
            << result.metrics.penalty_cost_usd << ") -> " << out << "\n";
  return 0;
}

int cmd_ablate(const CliOptions& opts) {
  const RunConfig base_cfg = resolve_config(opts);
  const TraceSource source = resolve_traces(opts, base_cfg);
  const std::string out = resolve_out_dir(opts.out);
  fs::create_directories(out);

  const trainer::Ablation ablations[] = {
      trainer::Ablation::full, trainer::Ablation::no_critic_aug,
      trainer::Ablation::no_high, trainer::Ablation::no_either};

  std::ofstream table((fs::path(out) / "ablation_table.csv").string(),
                      std::ios::binary);
  table << "ablation,penalty_cost_usd,energy_cost_usd,total_cost_usd,"
           "soc_fulfillment_pct,soc_maintenance_pct,user_satisfaction_pct\n";
  table.precision(10);
  std::cout << "ablation        penalty      energy       total        ful%    main%\n";

  for (const auto ablation : ablations) {
    RunConfig cfg = base_cfg;
    cfg.train.ablation = ablation;
    const std::string name = trainer::to_string(ablation);
    const std::string sub = (fs::path(out) / name).string();
    fs::create_directories(fs::path(sub) / "checkpoints");

    trainer::TrainResult result =
        trainer::train(cfg.train, source.traces, cfg.station, cfg.penalty);
    trainer::save_bundle((fs::path(sub) / "checkpoints").string(), result.policy);
    result.log.write_csv((fs::path(sub) / "logs.csv").string());

    eval::EvalConfig ecfg;
    ecfg.days = cfg.eval_days;
    ecfg.scenario = cfg.train.scenario;
    ecfg.seed = cfg.train.seed;
    const eval::EvalResult eval_result = eval::evaluate(
        &result.policy, ecfg, source.traces, cfg.station, cfg.penalty);
    std::ofstream metrics((fs::path(sub) / "metrics.json").string(), std::ios::binary);
    metrics << eval_result.metrics.to_json();

    const auto& m = eval_result.metrics;
    table << name << ',' << m.penalty_cost_usd << ',' << m.energy_cost_usd << ','
          << m.total_cost_usd << ',' << m.soc_fulfillment_pct << ','
          << m.soc_maintenance_pct << ',' << m.user_satisfaction_pct << '\n';
    std::printf("%-15s %-12.2f %-12.2f %-12.2f %-7.2f %-7.2f\n", name.c_str(),
                m.penalty_cost_usd, m.energy_cost_usd, m.total_cost_usd,
                m.soc_fulfillment_pct, m.soc_maintenance_pct);
  }
  table.close();
  write_manifest(out, "ablate", base_cfg, source,
                 {{"table_csv", "ablation_table.csv"}});
  return 0;
}

int cmd_oracle(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const TraceSource source = resolve_traces(opts, cfg);
  const std::string out = resolve_out_dir(opts.out);
  fs::create_directories(out);

  eval::EvalConfig ecfg;
  ecfg.days = cfg.eval_days;
  ecfg.scenario = cfg.train.scenario;
  ecfg.seed = cfg.train.seed;
  const auto sessions =
      eval::sample_horizon_sessions(ecfg, source.traces, cfg.station);
  const std::int64_t horizon = static_cast<std::int64_t>(ecfg.days) * 24;
  const eval::OracleResult result =
      eval::greedy_oracle(sessions, source.traces, cfg.station, cfg.penalty, horizon);

  std::ofstream sched((fs::path(out) / "schedule.csv").string(), std::ios::binary);
  sched << "slot,price,building_load,station_charge_kw,total_load_kw\n";
  sched.precision(10);
  for (std::int64_t t = 0; t < horizon; ++t) {
    const double charge = result.station_power_kw[static_cast<std::size_t>(t)];
    sched << t << ',' << source.traces.price.at(t) << ',' << source.traces.load.at(t)
          << ',' << charge << ',' << source.traces.load.at(t) + charge << '\n';
  }
  sched.close();
  std::ofstream metrics((fs::path(out) / "metrics.json").string(), std::ios::binary);
  metrics << result.metrics.to_json();
  metrics.close();
  write_manifest(out, "oracle", cfg, source,
                 {{"schedule_csv", "schedule.csv"}, {"metrics_json", "metrics.json"}});
  std::cout << "oracle: energy " << result.metrics.energy_cost_usd << " USD"
            << (result.all_feasible ? "" : " (some sessions infeasible)") << " -> "
            << out << "\n";
  return 0;
}

int run_command(const std::string& name, const CliOptions& opts) {
  const auto record = [](const char* kind, const std::exception& e) {
    nlohmann::json j{{"error", kind}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
  };
  try {
    if (name == "train") return cmd_train(opts);
    if (name == "eval") return cmd_eval(opts);
    if (name == "ablate") return cmd_ablate(opts);
    if (name == "oracle") return cmd_oracle(opts);
    std::cerr << R"({"error":"Usage","message":"unknown command )" << name << "\"}\n";
    return 2;
  } catch (const ParseError& e) {
    record("ParseError", e);
    return 2;
  } catch (const AlignmentError& e) {
    record("AlignmentError", e);
    return 1;
  } catch (const DomainError& e) {
    record("DomainError", e);
    return 1;
  } catch (const NumericalFault& e) {
    record("NumericalFault", e);
    return 1;
  } catch (const std::exception& e) {
    record("Error", e);
    return 1;
  }
}

}  // namespace huca::cli
