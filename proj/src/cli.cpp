#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "nsb/harness.hpp"
#include "nsb/util.hpp"

namespace nsb {
namespace harness {

namespace fs = std::filesystem;

namespace {

void save_json(const njson& j, const std::string& path, int indent = 1) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << j.dump(indent) << "\n";
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  auto stats = generate_scenario_dir(scenario::load_json_file(config_path), out_dir);
  std::cout << "generated " << stats.epoch_files << " epoch files for "
            << stats.satellites << " satellites in " << out_dir << "\n";
  if (stats.oracle_tasks > 0) {
    std::cout << "oracle routing injected " << stats.oracle_tasks << " route tasks";
    if (stats.reachability_gaps > 0) {
      std::cout << " (" << stats.reachability_gaps << " unreachable pair-epochs)";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_init(const std::string& scenario_dir, const std::string& workers_path,
             uint64_t seed, const std::string& out_path) {
  auto rt = load_scenario(scenario_dir);
  statestore::KeyValueStore store;

  std::map<std::string, std::string> worker_of_node;
  njson workers_json;
  if (!workers_path.empty()) {
    workers_json = scenario::load_json_file(workers_path);
    auto workers = placement::parse_workers(workers_json);

    placement::PlacementGraph graph;
    for (const auto& [name, cfg] : rt.merged_nodes) {
      placement::VertexDemand d;
      const njson& cpu = cfg.at("cpu-request");
      d.cpu = cpu.is_string() ? util::parse_cpu_quantity(cpu.get<std::string>())
                              : cpu.get<double>();
      const njson& mem = cfg.at("mem-request");
      d.mem = mem.is_string() ? util::parse_mem_quantity(mem.get<std::string>())
                              : mem.get<uint64_t>();
      graph.vertices[name] = d;
    }
    std::vector<scenario::EpochFile> files;
    for (const auto& p : rt.epoch_paths()) files.push_back(scenario::load_epoch_file(p));
    graph.edges = placement::link_activity_weights(files);

    auto result = placement::partition(graph, workers, seed);
    worker_of_node = result.assignment;
    std::cout << "placement: " << result.parts_used << " partitions, cut weight "
              << result.cut_weight << "\n";
  }

  populate_store(rt, store, worker_of_node.empty() ? nullptr : &worker_of_node,
                 workers_path.empty() ? nullptr : &workers_json);
  save_json(store.dump(), out_path);
  std::cout << "initialized " << rt.merged_nodes.size() << " nodes into " << out_path
            << "\n";
  return 0;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto result = run_experiment(cfg);
  write_outputs(result, out_dir);
  std::cout << result.summary.dump(1) << "\n";
  return 0;
}

int cmd_replay(const std::string& scenario_dir, double time_scale,
               const std::string& dump_path) {
  auto rt = load_scenario(scenario_dir);
  statestore::KeyValueStore store;
  populate_store(rt, store);
  statestore::DirectoryEpochSource source(rt.epoch_dir, rt.file_pattern);
  statestore::SimClock clock;
  int applied = 0;
  statestore::run_epochs(store, source, rt.gen.quant, time_scale, &clock,
                         [&](const scenario::EpochFile&, const statestore::MutationSummary&) {
                           ++applied;
                         });
  std::cout << "applied " << applied << " epoch files, clock at " << clock.now_s
            << " s\n";
  if (!dump_path.empty()) save_json(store.dump(), dump_path);
  return 0;
}

int cmd_realtime(const std::string& scenario_dir, const std::string& queue_dir,
                 double idle_timeout, const std::string& dump_path) {
  auto rt = load_scenario(scenario_dir);
  statestore::KeyValueStore store;
  populate_store(rt, store);
  std::set<std::string> seen;
  auto last_activity = std::chrono::steady_clock::now();
  int applied = 0;
  while (true) {
    bool any = false;
    for (const auto& path : scenario::list_epoch_files(queue_dir, rt.file_pattern)) {
      if (seen.contains(path)) continue;
      seen.insert(path);
      auto file = scenario::load_epoch_file(path);
      statestore::apply_epoch(store, file, rt.gen.quant,
                              fs::path(path).filename().string());
      ++applied;
      any = true;
    }
    if (any) {
      last_activity = std::chrono::steady_clock::now();
    } else {
      auto idle = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                last_activity);
      if (idle.count() > idle_timeout) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }
  std::cout << "applied " << applied << " epoch files from queue\n";
  if (!dump_path.empty()) save_json(store.dump(), dump_path);
  return 0;
}

int cmd_inject(const std::string& epoch_file, const std::string& node,
               const std::vector<std::string>& tasks) {
  njson j = scenario::load_json_file(epoch_file);
  if (!j.contains("run") || j["run"].is_null()) j["run"] = njson::object();
  for (const auto& task : tasks) {
    j["run"][node].push_back(task);
  }
  save_json(j, epoch_file);
  std::cout << "injected " << tasks.size() << " task(s) for " << node << " into "
            << epoch_file << "\n";
  return 0;
}

int cmd_exec(const std::string& state_path, const std::string& selector,
             const std::string& task, const std::string& out_path) {
  statestore::KeyValueStore store;
  store.load(scenario::load_json_file(state_path));
  auto nodes = store.list_prefix("/config/nodes/");
  if (nodes.empty()) throw ConfigError("no nodes in " + state_path);

  std::vector<std::string> selected;
  auto colon = selector.find(':');
  if (colon != std::string::npos) {
    const std::string key = selector.substr(0, colon);
    const std::string value = selector.substr(colon + 1);
    std::set<std::string> known_keys;
    for (const auto& [path, cfg] : nodes) {
      for (const auto& [k, v] : cfg.items()) known_keys.insert(k);
      if (!cfg.contains(key)) continue;
      const njson& v = cfg[key];
      std::string text = v.is_string() ? v.get<std::string>() : v.dump();
      if (text == value) selected.push_back(path.substr(std::string("/config/nodes/").size()));
    }
    if (!known_keys.contains(key)) {
      std::string keys;
      for (const auto& k : known_keys) keys += (keys.empty() ? "" : ", ") + k;
      throw ConfigError("unknown selector key '" + key + "'; valid keys: " + keys);
    }
  } else {
    if (!store.get("/config/nodes/" + selector)) {
      throw ConfigError("unknown node '" + selector +
                        "' (use key:value to match by property)");
    }
    selected.push_back(selector);
  }

  for (const auto& name : selected) {
    njson run = store.get("/config/run/" + name).value_or(njson::array());
    run.push_back(task);
    store.put("/config/run/" + name, run);
  }
  save_json(store.dump(), out_path.empty() ? state_path : out_path);
  std::cout << "targeted " << selected.size() << " node(s)";
  for (const auto& n : selected) std::cout << " " << n;
  std::cout << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format,
               const std::string& out_path) {
  std::ifstream f(fs::path(run_dir) / "traces.csv");
  if (!f) throw ConfigError("no traces.csv under " + run_dir);
  std::string header;
  std::getline(f, header);
  std::vector<std::string> columns = util::split(header, ',');

  std::ostream* out = &std::cout;
  std::ofstream file_out;
  if (!out_path.empty()) {
    file_out.open(out_path);
    if (!file_out) throw ConfigError("cannot write " + out_path);
    out = &file_out;
  }

  if (format == "csv") {
    *out << header << "\n";
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty()) *out << line << "\n";
    }
    return 0;
  }
  if (format != "json") throw ConfigError("format must be csv or json");
  njson rows = njson::array();
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = util::split(line, ',');
    njson row;
    for (size_t i = 0; i < columns.size() && i < fields.size(); ++i) {
      const std::string& col = columns[i];
      const std::string& value = fields[i];
      if (col == "t_s" || col == "rtt_ms") {
        if (!value.empty()) row[col] = std::stod(value);
        else row[col] = njson();
      } else if (col == "lost" || col == "hops") {
        row[col] = std::stol(value);
      } else {
        row[col] = value;
      }
    }
    rows.push_back(std::move(row));
  }
  *out << rows.dump(1) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"desk-scale LEO constellation emulation toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a scenario from a config");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "generator config JSON")->required();
  gen->add_option("--out", gen_out, "output scenario directory")->required();

  // init
  auto* init = app.add_subcommand("init", "merge configs, assign addresses, place nodes");
  std::string init_scenario, init_workers, init_out = "init-state.json";
  uint64_t init_seed = 1;
  init->add_option("--scenario", init_scenario, "scenario directory")->required();
  init->add_option("--workers", init_workers, "workers JSON file");
  init->add_option("--seed", init_seed, "placement seed");
  init->add_option("--out", init_out, "output store dump");

  // run
  auto* run = app.add_subcommand("run", "replay epochs and run the experiment");
  std::string run_scenario, run_strategy = "e2e:1,2,4", run_out = "run-out";
  std::string run_queue_dir, run_dump;
  std::vector<std::string> run_sessions;
  double run_duration = 0, run_probe_period = 10.0, run_time_scale = 0;
  double run_idle_timeout = 10.0;
  uint64_t run_seed = 1;
  bool run_no_loss = false, run_verify = false, run_replay_only = false;
  bool run_realtime = false;
  run->add_option("--scenario", run_scenario, "scenario directory")->required();
  run->add_option("--strategy", run_strategy,
                  "local-min-delay or e2e:<filter ids>");
  run->add_option("--duration", run_duration, "simulated seconds (0 = full)");
  run->add_option("--seed", run_seed, "probe loss RNG seed");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--probe-period-ms", run_probe_period, "ping probe period");
  run->add_option("--session", run_sessions, "user:gateway pair (repeatable)");
  run->add_flag("--no-loss", run_no_loss, "disable loss sampling");
  run->add_flag("--verify", run_verify, "verify every sample against the store");
  run->add_flag("--replay-only", run_replay_only, "replay epochs without probes");
  run->add_option("--time-scale", run_time_scale,
                  "wall seconds per simulated second in --replay-only");
  run->add_flag("--realtime", run_realtime, "apply queued epoch files as they appear");
  run->add_option("--queue-dir", run_queue_dir, "epoch queue directory (realtime)");
  run->add_option("--idle-timeout", run_idle_timeout,
                  "stop realtime mode after this many idle wall seconds");
  run->add_option("--dump-store", run_dump, "write the final store dump here");

  // inject
  auto* inject = app.add_subcommand("inject", "append run tasks to an epoch file");
  std::string inject_file, inject_node;
  std::vector<std::string> inject_tasks;
  inject->add_option("--epoch-file", inject_file, "epoch file to edit")->required();
  inject->add_option("--node", inject_node, "target node")->required();
  inject->add_option("--task", inject_tasks, "command string (repeatable)")->required();

  // exec
  auto* exec = app.add_subcommand("exec", "apply a task to selected nodes");
  std::string exec_state, exec_select, exec_task, exec_out;
  exec->add_option("--state", exec_state, "store dump from init")->required();
  exec->add_option("--select", exec_select, "node name or key:value matcher")->required();
  exec->add_option("--task", exec_task, "command string")->required();
  exec->add_option("--out", exec_out, "output store dump (default: in place)");

  // report
  auto* report = app.add_subcommand("report", "emit traces as CSV or JSON");
  std::string report_run, report_format = "csv", report_out;
  report->add_option("--run", report_run, "run output directory")->required();
  report->add_option("--format", report_format, "csv or json");
  report->add_option("--out", report_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(gen_config, gen_out);
    if (init->parsed()) return cmd_init(init_scenario, init_workers, init_seed, init_out);
    if (run->parsed()) {
      if (run_realtime) {
        if (run_queue_dir.empty()) throw ConfigError("--realtime needs --queue-dir");
        return cmd_realtime(run_scenario, run_queue_dir, run_idle_timeout, run_dump);
      }
      if (run_replay_only) {
        return cmd_replay(run_scenario, run_time_scale, run_dump);
      }
      ExperimentConfig cfg;
      cfg.scenario_dir = run_scenario;
      cfg.handover = parse_strategy(run_strategy);
      cfg.duration_s = run_duration;
      cfg.probe_period_ms = run_probe_period;
      cfg.seed = run_seed;
      cfg.loss_enabled = !run_no_loss;
      cfg.verify_traces = run_verify;
      for (const auto& text : run_sessions) {
        auto colon = text.find(':');
        if (colon == std::string::npos) {
          throw ConfigError("--session expects user:gateway");
        }
        cfg.sessions.push_back({text.substr(0, colon), text.substr(colon + 1)});
      }
      return cmd_run(cfg, run_out);
    }
    if (inject->parsed()) return cmd_inject(inject_file, inject_node, inject_tasks);
    if (exec->parsed()) return cmd_exec(exec_state, exec_select, exec_task, exec_out);
    if (report->parsed()) return cmd_report(report_run, report_format, report_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace harness
}  // namespace nsb
