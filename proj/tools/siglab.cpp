// Command-line experiment harness: generate scenarios, run them, sweep
// parameters and compare controllers, with CSV artifacts throughout.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "siglab/engine.hpp"
#include "siglab/scenario.hpp"

namespace fs = std::filesystem;
using namespace siglab;

namespace {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kRuntimeError = 3,
  kGridlock = 4,
};

struct ControllerSpec {
  ControllerConfig cfg;
  bool wrong_tr = false;  // use the scenario's believed routing instead of truth
  std::string label;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string::npos ? std::string::npos
                                                              : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad value for " + what + ": '" + text + "'");
  }
}

// Token grammar: kind[:key=value,key=value...]; keys are kappa, w_bar, d,
// ft (pipe-separated), pf_cycle, min_green and the flag tr=wrong.
ControllerSpec parse_controller_token(const std::string& token) {
  ControllerSpec spec;
  spec.label = token;
  std::string kind = token;
  std::string params;
  if (auto colon = token.find(':'); colon != std::string::npos) {
    kind = token.substr(0, colon);
    params = token.substr(colon + 1);
  }
  auto parsed = controller_kind_from(kind);
  if (!parsed) throw std::runtime_error("unknown controller '" + kind + "'");
  spec.cfg.kind = *parsed;
  if (!params.empty()) {
    for (const std::string& pair : split(params, ',')) {
      auto eq = pair.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("expected key=value in '" + pair + "'");
      std::string key = pair.substr(0, eq);
      std::string value = pair.substr(eq + 1);
      if (key == "kappa") spec.cfg.gpa.kappa = parse_number(value, key);
      else if (key == "w_bar") spec.cfg.gpa.w_bar = parse_number(value, key);
      else if (key == "d") spec.cfg.mp_duration = parse_number(value, key);
      else if (key == "pf_cycle") spec.cfg.pf_cycle = parse_number(value, key);
      else if (key == "min_green") spec.cfg.min_green = parse_number(value, key);
      else if (key == "ft") {
        spec.cfg.ft_durations.clear();
        for (const std::string& d : split(value, '|'))
          spec.cfg.ft_durations.push_back(parse_number(d, key));
      } else if (key == "tr") {
        if (value == "wrong") spec.wrong_tr = true;
        else if (value == "correct") spec.wrong_tr = false;
        else throw std::runtime_error("tr must be wrong or correct");
      } else {
        throw std::runtime_error("unknown controller key '" + key + "'");
      }
    }
  }
  return spec;
}

std::string params_string(const ControllerConfig& cfg, bool wrong_tr) {
  std::ostringstream out;
  switch (cfg.kind) {
    case ControllerKind::GpaFull:
    case ControllerKind::GpaShorted:
      out << "kappa=" << format_double(cfg.gpa.kappa)
          << ";w_bar=" << format_double(cfg.gpa.w_bar);
      break;
    case ControllerKind::MaxPressure:
      out << "d=" << format_double(cfg.mp_duration)
          << ";tr=" << (wrong_tr ? "wrong" : "correct");
      break;
    case ControllerKind::FixedTime: {
      out << "ft=";
      for (std::size_t i = 0; i < cfg.ft_durations.size(); ++i) {
        if (i) out << "|";
        out << format_double(cfg.ft_durations[i]);
      }
      break;
    }
    case ControllerKind::PropFair:
      out << "pf_cycle=" << format_double(cfg.pf_cycle);
      break;
  }
  if (cfg.min_green > 0) out << ";min_green=" << format_double(cfg.min_green);
  return out.str();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& piece : split(text, ',')) {
    if (auto dots = piece.find(".."); dots != std::string::npos) {
      std::uint64_t lo = std::stoull(piece.substr(0, dots));
      std::uint64_t hi = std::stoull(piece.substr(dots + 2));
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (!piece.empty()) {
      seeds.push_back(std::stoull(piece));
    }
  }
  if (seeds.empty()) throw std::runtime_error("no seeds given");
  return seeds;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

void write_queue_csv(const fs::path& path,
                     const std::vector<double>& series) {
  std::ofstream out(path, std::ios::binary);
  out << "t,total_queue_veh\n";
  for (std::size_t t = 0; t < series.size(); ++t)
    out << t << "," << format_double(series[t]) << "\n";
}

void write_aggregated_csv(const fs::path& path,
                          const std::vector<std::pair<double, double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  out << "t,total_queue_veh\n";
  for (const auto& [t, v] : rows)
    out << format_double(t) << "," << format_double(v) << "\n";
}

constexpr const char* kSummaryHeader =
    "# siglab summary v1\n"
    "controller,params,seed,ttt_hours,infinite,blocked_events,mean_cycle_s\n";

void append_summary_row(std::ostream& out, const std::string& controller,
                        const std::string& params, std::uint64_t seed,
                        const RunResult& result) {
  out << controller << "," << params << "," << seed << ","
      << format_double(result.ttt_hours) << "," << (result.infinite ? 1 : 0)
      << "," << result.blocked_events << ","
      << format_double(result.mean_cycle_s()) << "\n";
}

// Applies one sweep parameter; throws when the parameter has no target.
void apply_parameter(Scenario& scenario, const std::string& name, double value) {
  auto each_config = [&](auto&& fn) {
    fn(scenario.controllers.fallback);
    for (auto& [id, cfg] : scenario.controllers.per_junction) fn(cfg);
  };
  int touched = 0;
  if (name == "kappa" || name == "w_bar") {
    each_config([&](ControllerConfig& cfg) {
      if (cfg.kind == ControllerKind::GpaFull ||
          cfg.kind == ControllerKind::GpaShorted) {
        if (name == "kappa") cfg.gpa.kappa = value;
        else cfg.gpa.w_bar = value;
        ++touched;
      }
    });
  } else if (name == "d") {
    each_config([&](ControllerConfig& cfg) {
      if (cfg.kind == ControllerKind::MaxPressure) {
        cfg.mp_duration = value;
        ++touched;
      }
    });
  } else if (name == "pf_cycle") {
    each_config([&](ControllerConfig& cfg) {
      if (cfg.kind == ControllerKind::PropFair) {
        cfg.pf_cycle = value;
        ++touched;
      }
    });
  } else if (name == "min_green") {
    each_config([&](ControllerConfig& cfg) {
      cfg.min_green = value;
      ++touched;
    });
  } else if (name == "delta") {
    auto it = scenario.meta.find("base_delta");
    if (it == scenario.meta.end())
      throw std::runtime_error(
          "sweeping delta needs a base_delta entry in the scenario meta");
    double base = parse_number(it->second, "base_delta");
    if (!(base > 0))
      throw std::runtime_error("cannot sweep delta: scenario base_delta is 0");
    double scale = value / base;
    for (Lane& lane : scenario.network.lanes) lane.arrival_rate *= scale;
    scenario.meta["base_delta"] = format_double(value);
    ++touched;
  } else {
    throw std::runtime_error("unknown sweep parameter '" + name + "'");
  }
  if (touched == 0)
    throw std::runtime_error("parameter '" + name +
                             "' matches no controller in the scenario");
}

struct RunTask {
  Scenario scenario;
  std::uint64_t seed = 0;
  std::string controller;
  std::string params;
};

std::vector<RunResult> execute(std::vector<RunTask>& tasks, int jobs) {
  std::vector<RunResult> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  auto one = [&](std::size_t i) {
    try {
      results[i] = Engine(tasks[i].scenario, tasks[i].seed).run();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
  if (jobs != 1 && tasks.size() > 1) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < tasks.size(); ++i) one(i);
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) one(i);
  }
#else
  for (std::size_t i = 0; i < tasks.size(); ++i) one(i);
#endif
  for (const std::string& error : errors)
    if (!error.empty()) throw std::runtime_error(error);
  return results;
}

// ---------------------------------------------------------------------------

int cmd_run(const std::string& scenario_path, std::uint64_t seed,
            const std::string& out_dir) {
  Scenario scenario = load_scenario(scenario_path);
  fs::create_directories(out_dir);
  RunResult result = Engine(scenario, seed).run();

  write_queue_csv(fs::path(out_dir) / "queue.csv", result.queue_series);
  write_aggregated_csv(fs::path(out_dir) / "queue_300s.csv",
                       aggregate_queue(result.queue_series, 300.0));
  std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::binary);
  summary << kSummaryHeader;
  const ControllerConfig& cfg = scenario.controllers.fallback;
  append_summary_row(summary, to_string(cfg.kind),
                     params_string(cfg, !(scenario.controller_routing ==
                                          scenario.routing)),
                     seed, result);
  std::cout << "ttt_hours " << format_double(result.ttt_hours) << "\n";
  return result.infinite ? kGridlock : kOk;
}

int cmd_sweep(const std::string& scenario_path,
              const std::vector<std::string>& param_specs,
              const std::string& seed_spec, const std::string& out_dir,
              int jobs) {
  Scenario base = load_scenario(scenario_path);
  std::vector<std::pair<std::string, std::vector<double>>> grid;
  for (const std::string& spec : param_specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("expected name=v1,v2,... in '" + spec + "'");
    std::string name = spec.substr(0, eq);
    std::vector<double> values;
    for (const std::string& v : split(spec.substr(eq + 1), ','))
      values.push_back(parse_number(v, name));
    if (values.empty()) throw std::runtime_error("empty grid for " + name);
    grid.emplace_back(name, values);
  }
  if (grid.empty()) throw std::runtime_error("sweep needs at least one --param");
  std::vector<std::uint64_t> seeds = parse_seeds(seed_spec);

  // Cartesian product, first parameter outermost; seeds vary fastest.
  std::vector<RunTask> tasks;
  std::vector<std::size_t> index(grid.size(), 0);
  bool more = true;
  while (more) {
    Scenario point = base;
    std::ostringstream params;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      apply_parameter(point, grid[p].first, grid[p].second[index[p]]);
      if (p) params << ";";
      params << grid[p].first << "=" << format_double(grid[p].second[index[p]]);
    }
    for (std::uint64_t seed : seeds) {
      RunTask task;
      task.scenario = point;
      task.seed = seed;
      task.controller = to_string(point.controllers.fallback.kind);
      task.params = params.str();
      tasks.push_back(std::move(task));
    }
    more = false;
    for (std::size_t p = grid.size(); p-- > 0;) {
      if (++index[p] < grid[p].second.size()) {
        more = true;
        break;
      }
      index[p] = 0;
    }
  }
  std::vector<RunResult> results = execute(tasks, jobs);

  fs::create_directories(out_dir);
  std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::binary);
  summary << kSummaryHeader;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    append_summary_row(summary, tasks[i].controller, tasks[i].params,
                       tasks[i].seed, results[i]);
  std::cout << "sweep: " << tasks.size() << " runs -> " << out_dir << "\n";
  return kOk;
}

int cmd_compare(const std::string& scenario_path,
                const std::vector<std::string>& controller_tokens,
                const std::string& seed_spec, const std::string& out_dir,
                int jobs) {
  if (controller_tokens.size() < 2)
    throw std::runtime_error("compare needs at least two --controller tokens");
  Scenario base = load_scenario(scenario_path);
  std::vector<std::uint64_t> seeds = parse_seeds(seed_spec);

  std::vector<ControllerSpec> specs;
  for (const std::string& token : controller_tokens)
    specs.push_back(parse_controller_token(token));

  std::vector<RunTask> tasks;
  for (const ControllerSpec& spec : specs) {
    Scenario variant = base;
    variant.controllers.fallback = spec.cfg;
    variant.controllers.per_junction.clear();
    if (!spec.wrong_tr) variant.controller_routing = variant.routing;
    std::vector<std::string> report = variant.validate();
    if (!report.empty())
      throw std::runtime_error("controller '" + spec.label +
                               "' does not fit this scenario: " + report.front());
    for (std::uint64_t seed : seeds) {
      RunTask task;
      task.scenario = variant;
      task.seed = seed;
      task.controller = to_string(spec.cfg.kind);
      task.params = params_string(spec.cfg, spec.wrong_tr);
      tasks.push_back(std::move(task));
    }
  }
  std::vector<RunResult> results = execute(tasks, jobs);

  fs::create_directories(out_dir);
  std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::binary);
  summary << kSummaryHeader;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    append_summary_row(summary, tasks[i].controller, tasks[i].params,
                       tasks[i].seed, results[i]);

  struct Row {
    std::string controller, params;
    double mean_ttt = 0;
    int infinite = 0;
    double mean_blocked = 0;
    double mean_cycle = 0;
  };
  std::vector<Row> rows;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    Row row;
    row.controller = to_string(specs[c].cfg.kind);
    row.params = params_string(specs[c].cfg, specs[c].wrong_tr);
    std::vector<std::vector<std::pair<double, double>>> aggregates;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunResult& r = results[c * seeds.size() + s];
      row.mean_ttt += r.ttt_hours / seeds.size();
      row.infinite += r.infinite ? 1 : 0;
      row.mean_blocked += static_cast<double>(r.blocked_events) / seeds.size();
      row.mean_cycle += r.mean_cycle_s() / seeds.size();
      aggregates.push_back(aggregate_queue(r.queue_series, 300.0));
    }
    // Mean aggregated queue series across seeds; drained runs count as zero.
    std::size_t longest = 0;
    for (const auto& a : aggregates) longest = std::max(longest, a.size());
    std::vector<std::pair<double, double>> mean_series(longest);
    for (std::size_t w = 0; w < longest; ++w) {
      mean_series[w].first = static_cast<double>(w) * 300.0;
      for (const auto& a : aggregates)
        if (w < a.size()) mean_series[w].second += a[w].second / seeds.size();
    }
    std::ostringstream name;
    name << "queue_300s_c" << c << "_" << row.controller << ".csv";
    write_aggregated_csv(fs::path(out_dir) / name.str(), mean_series);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.mean_ttt < b.mean_ttt;
  });
  std::ofstream ranking(fs::path(out_dir) / "ranking.csv", std::ios::binary);
  ranking << "# siglab ranking v1\n"
          << "controller,params,mean_ttt_hours,n_infinite,mean_blocked,mean_cycle_s\n";
  std::cout << "compare ranking (" << seeds.size() << " paired seeds):\n";
  for (const Row& row : rows) {
    ranking << row.controller << "," << row.params << ","
            << format_double(row.mean_ttt) << "," << row.infinite << ","
            << format_double(row.mean_blocked) << ","
            << format_double(row.mean_cycle) << "\n";
    std::cout << "  " << row.controller << " [" << row.params
              << "] ttt_hours=" << format_double(row.mean_ttt) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siglab: decentralized traffic-signal control laboratory"};
  app.require_subcommand(1);

  // --- generate ---
  auto* generate = app.add_subcommand("generate", "emit a scenario file");
  generate->require_subcommand(1);

  auto* manhattan = generate->add_subcommand("manhattan", "alternating-width grid");
  int rows = 4, cols = 4;
  double delta = 0.05, horizon = 3600.0, hard_cap = 0.0;
  std::string turn = "0.2,0.6,0.2", wrong_turn, mode = "stochastic";
  std::string controller_token = "gpa-shorted:kappa=10,w_bar=0";
  std::string out_file = "scenario.txt";
  manhattan->add_option("--rows", rows, "junction rows");
  manhattan->add_option("--cols", cols, "junction columns");
  manhattan->add_option("--delta", delta, "boundary departure probability");
  manhattan->add_option("--turn", turn, "left,straight,right probabilities");
  manhattan->add_option("--wrong-turn", wrong_turn,
                        "believed turn probabilities for max-pressure");
  manhattan->add_option("--mode", mode, "fluid or stochastic");
  manhattan->add_option("--horizon", horizon, "demand generation horizon [s]");
  manhattan->add_option("--hard-cap", hard_cap, "simulation hard cap [s]");
  manhattan->add_option("--controller", controller_token, "default controller token");
  manhattan->add_option("-o,--out", out_file, "output path");

  auto* isolated = generate->add_subcommand("isolated", "two-lane junction");
  double lambda = 0.1, kappa = 0.1, t_w = 1.0, w_bar = 0.0, initial = 1.0;
  double iso_cap = 36000.0;
  std::string iso_out = "isolated.txt";
  isolated->add_option("--lambda", lambda, "arrival rate per lane [veh/s]");
  isolated->add_option("--kappa", kappa, "allocation weight");
  isolated->add_option("--t-w", t_w, "clearance time [s]");
  isolated->add_option("--w-bar", w_bar, "clearance fraction floor");
  isolated->add_option("--initial", initial, "initial queue on lane 0");
  isolated->add_option("--hard-cap", iso_cap, "simulation hard cap [s]");
  isolated->add_option("-o,--out", iso_out, "output path");

  // --- run / sweep / compare ---
  auto* run = app.add_subcommand("run", "simulate one scenario");
  std::string scenario_path, out_dir = "out";
  std::uint64_t seed = 1;
  run->add_option("-s,--scenario", scenario_path, "scenario file")->required();
  run->add_option("--seed", seed, "rng seed");
  run->add_option("-o,--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  std::vector<std::string> params;
  std::string seeds_spec = "1";
  int jobs = 0;
  std::string sweep_scenario, sweep_out = "sweep";
  sweep->add_option("-s,--scenario", sweep_scenario, "scenario file")->required();
  sweep->add_option("--param", params,
                    "name=v1,v2,... (kappa, w_bar, d, pf_cycle, min_green, delta)");
  sweep->add_option("--seeds", seeds_spec, "seeds: 1,2,3 or 1..5");
  sweep->add_option("-o,--out", sweep_out, "output directory");
  sweep->add_option("-j,--jobs", jobs, "worker threads (0 = all, 1 = serial)");

  auto* compare = app.add_subcommand("compare", "paired controller comparison");
  std::vector<std::string> controllers;
  std::string cmp_scenario, cmp_out = "compare", cmp_seeds = "1";
  int cmp_jobs = 0;
  compare->add_option("-s,--scenario", cmp_scenario, "scenario file")->required();
  compare->add_option("-c,--controller", controllers,
                      "controller token, e.g. gpa-shorted:kappa=10,w_bar=0");
  compare->add_option("--seeds", cmp_seeds, "seeds: 1,2,3 or 1..5");
  compare->add_option("-o,--out", cmp_out, "output directory");
  compare->add_option("-j,--jobs", cmp_jobs, "worker threads (0 = all, 1 = serial)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (manhattan->parsed()) {
      auto probabilities = split(turn, ',');
      if (probabilities.size() != 3)
        throw std::runtime_error("--turn needs left,straight,right");
      TurnSpec spec{parse_number(probabilities[0], "turn"),
                    parse_number(probabilities[1], "turn"),
                    parse_number(probabilities[2], "turn")};
      TurnSpec wrong;
      bool has_wrong = !wrong_turn.empty();
      if (has_wrong) {
        auto w = split(wrong_turn, ',');
        if (w.size() != 3)
          throw std::runtime_error("--wrong-turn needs left,straight,right");
        wrong = TurnSpec{parse_number(w[0], "wrong-turn"),
                         parse_number(w[1], "wrong-turn"),
                         parse_number(w[2], "wrong-turn")};
      }
      Scenario s = build_manhattan(rows, cols, delta, spec,
                                   has_wrong ? &wrong : nullptr);
      if (mode == "fluid") s.demand.mode = SimMode::Fluid;
      else if (mode != "stochastic")
        throw std::runtime_error("--mode must be fluid or stochastic");
      s.demand.generation_horizon = horizon;
      if (hard_cap > 0) s.hard_cap = hard_cap;
      ControllerSpec cspec = parse_controller_token(controller_token);
      ControllerConfig cfg = s.controllers.fallback;
      cfg.kind = cspec.cfg.kind;
      cfg.gpa = cspec.cfg.gpa;
      cfg.mp_duration = cspec.cfg.mp_duration;
      if (!cspec.cfg.ft_durations.empty()) cfg.ft_durations = cspec.cfg.ft_durations;
      cfg.pf_cycle = cspec.cfg.pf_cycle;
      cfg.min_green = cspec.cfg.min_green;
      s.controllers.fallback = cfg;
      std::ofstream out(out_file, std::ios::binary);
      out << serialize_scenario(s);
      std::cout << "wrote " << out_file << "\n";
      return kOk;
    }
    if (isolated->parsed()) {
      Scenario s = build_isolated_junction(lambda, kappa, t_w, w_bar, initial);
      s.hard_cap = iso_cap;
      std::ofstream out(iso_out, std::ios::binary);
      out << serialize_scenario(s);
      std::cout << "wrote " << iso_out << "\n";
      return kOk;
    }
    if (run->parsed()) return cmd_run(scenario_path, seed, out_dir);
    if (sweep->parsed())
      return cmd_sweep(sweep_scenario, params, seeds_spec, sweep_out, jobs);
    if (compare->parsed())
      return cmd_compare(cmp_scenario, controllers, cmp_seeds, cmp_out, cmp_jobs);
  } catch (const ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SimError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::runtime_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
