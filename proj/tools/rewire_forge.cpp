// rewire-forge: command-line front end for graph generation, metrics,
// rewiring, baseline optimizers and policy training.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rforge/attack.hpp"
#include "rforge/baselines.hpp"
#include "rforge/error.hpp"
#include "rforge/firegnn.hpp"
#include "rforge/graph.hpp"
#include "rforge/metrics.hpp"
#include "rforge/nn/checkpoint.hpp"
#include "rforge/policy.hpp"
#include "rforge/rewiring.hpp"
#include "rforge/trainer.hpp"
#include "rforge/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rforge;

namespace {

struct Options {
  double alpha = 0.5;
  std::string resilience = "R";
  std::string utility = "global";
  std::string attack = "degree";
  int budget = 20;
  int k = 5;
  std::uint64_t seed = 0;
  std::string algo = "greedy";
  std::string checkpoint;
  std::string out;
  std::vector<std::string> graphs;
  bool forbid_disconnecting = false;

  int n = 15;
  int m = 2;
  int n_max = 0;
  int count = 1;

  std::string e1, e2;

  long steps = 200000;
  int envs = 8;
  int batch = 256;
  int minibatch = 64;
  int epochs = 4;
  double lr = 7e-4;
  double entropy_coef = 0.01;
  int hidden = 64;
  int eval_every = 1;
  int k_max = 8;
};

json objective_json(const Options& o) {
  return {{"alpha", o.alpha},     {"resilience", o.resilience}, {"utility", o.utility},
          {"attack", o.attack},   {"budget", o.budget},         {"forbid_disconnecting", o.forbid_disconnecting}};
}

EnvConfig env_config(const Options& o) {
  EnvConfig cfg;
  cfg.objective.alpha = o.alpha;
  cfg.objective.resilience = parse_resilience_kind(o.resilience);
  cfg.objective.utility = parse_utility_kind(o.utility);
  cfg.objective.attack.kind = parse_attack_kind(o.attack);
  cfg.max_rewiring_budget = o.budget;
  cfg.forbid_disconnecting = o.forbid_disconnecting;
  cfg.validate();
  return cfg;
}

std::string fnv1a_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot read " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out << text;
}

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
    if (o.out.empty()) throw ParameterError("--out is required");
    dir_ = o.out;
    fs::create_directories(dir_);
  }
  const fs::path& dir() const { return dir_; }
  void input(const fs::path& p) { inputs_[p.string()] = fnv1a_hex(p); }
  void finish(const json& config) const {
    json manifest;
    manifest["command"] = command_;
    manifest["config"] = config;
    manifest["seed"] = opts_.seed;
    manifest["version"] = kVersion;
    manifest["inputs"] = inputs_;
    manifest["wall_time"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  const Options& opts_;
  fs::path dir_;
  json inputs_ = json::object();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Graph load_input(Run& run, const Options& o, std::size_t index = 0) {
  if (o.graphs.size() <= index) throw ParameterError("--graph is required");
  run.input(o.graphs[index]);
  return load_edge_list(o.graphs[index]);
}

EdgeRef parse_edge(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    return {static_cast<NodeId>(std::stoi(text.substr(0, comma))),
            static_cast<NodeId>(std::stoi(text.substr(comma + 1)))};
  } catch (const std::exception&) {
    throw ParameterError("edge must look like 'u,v', got '" + text + "'");
  }
}

json report_json(const OptimizerReport& r) {
  json rewirings = json::array();
  for (const auto& a : r.rewirings) {
    rewirings.push_back({{"e1", {a.e1.tail, a.e1.head}}, {"e2", {a.e2.tail, a.e2.head}}});
  }
  return {{"algorithm", r.algorithm},
          {"initial_objective", r.initial_objective},
          {"final_objective", r.final_objective},
          {"gain_percent", r.gain_percent},
          {"rewirings_used", r.rewirings_used},
          {"objective_evals", r.objective_evals},
          {"wall_time", r.wall_time},
          {"reversals", count_reversals(r.rewirings)},
          {"rewirings", rewirings}};
}

PolicyConfig policy_config(const Options& o) {
  PolicyConfig cfg;
  cfg.encoder.hidden = static_cast<std::size_t>(o.hidden);
  cfg.encoder.order = o.k;
  return cfg;
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.env = env_config(o);
  cfg.seed = o.seed;
  cfg.total_steps = o.steps;
  cfg.num_envs = o.envs;
  cfg.eval_every = o.eval_every;
  cfg.ppo.batch = o.batch;
  cfg.ppo.minibatch = o.minibatch;
  cfg.ppo.epochs = o.epochs;
  cfg.ppo.lr = o.lr;
  cfg.ppo.entropy_coef = o.entropy_coef;
  return cfg;
}

json train_json(const Options& o) {
  json j = objective_json(o);
  j.update({{"k", o.k},
            {"hidden", o.hidden},
            {"steps", o.steps},
            {"envs", o.envs},
            {"batch", o.batch},
            {"minibatch", o.minibatch},
            {"epochs", o.epochs},
            {"lr", o.lr},
            {"entropy_coef", o.entropy_coef},
            {"eval_every", o.eval_every},
            {"seed", o.seed}});
  return j;
}

void cmd_generate(const Options& o) {
  Run run("generate", o);
  if (o.count < 1) throw ParameterError("--count must be >= 1");
  const int n_max = std::max(o.n, o.n_max);
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> size(o.n, n_max);
  for (int i = 0; i < o.count; ++i) {
    const int n = o.count == 1 ? o.n : size(rng);
    const Graph g = ba_generate(static_cast<std::size_t>(n), static_cast<std::size_t>(o.m), o.seed + static_cast<std::uint64_t>(i));
    char name[32];
    if (o.count == 1) {
      std::snprintf(name, sizeof name, "graph.edgelist");
    } else {
      std::snprintf(name, sizeof name, "graph_%03d.edgelist", i);
    }
    save_edge_list(g, run.dir() / name);
  }
  run.finish({{"model", "ba"}, {"n", o.n}, {"n_max", n_max}, {"m", o.m}, {"count", o.count}});
}

void cmd_metrics(const Options& o) {
  Run run("metrics", o);
  const Graph g = load_input(run, o);
  AttackStrategy attack;
  attack.kind = parse_attack_kind(o.attack);
  json j;
  j["R"] = resilience_R(g, attack);
  j["spectral_radius"] = spectral_radius(g);
  j["algebraic_connectivity"] = algebraic_connectivity(g);
  j["E_global"] = global_efficiency(g);
  j["E_local"] = local_efficiency(g);
  write_text(run.dir() / "metrics.json", j.dump(2) + "\n");
  run.finish({{"attack", o.attack}});
}

void cmd_attack_curve(const Options& o) {
  Run run("attack-curve", o);
  const Graph g = load_input(run, o);
  AttackStrategy attack;
  attack.kind = parse_attack_kind(o.attack);
  const auto curve = attack_curve(g, attack);
  std::ostringstream csv;
  csv.precision(17);
  csv << "q,s_q\n";
  csv << 0 << ',' << largest_cc_fraction(g, {}) << '\n';
  for (std::size_t q = 0; q < curve.size(); ++q) csv << q + 1 << ',' << curve[q] << '\n';
  write_text(run.dir() / "attack_curve.csv", csv.str());
  run.finish({{"attack", o.attack}});
}

void cmd_rewire(const Options& o) {
  Run run("rewire", o);
  const Graph g = load_input(run, o);
  const RewiringAction a = RewiringAction::swap(parse_edge(o.e1), parse_edge(o.e2));
  const Graph out = apply_rewiring(g, a, o.forbid_disconnecting);
  save_edge_list(out, run.dir() / "rewired.edgelist");
  run.finish({{"e1", o.e1}, {"e2", o.e2}, {"forbid_disconnecting", o.forbid_disconnecting}});
}

std::unique_ptr<ActorCritic> load_model(const Options& o, json* stored = nullptr) {
  if (o.checkpoint.empty()) throw ParameterError("--checkpoint is required");
  const json cfg = nn::load_checkpoint_config(o.checkpoint);
  Options arch = o;
  arch.k = cfg.value("k", o.k);
  arch.hidden = cfg.value("hidden", o.hidden);
  auto model = std::make_unique<ActorCritic>(policy_config(arch), 0);
  nn::load_checkpoint(o.checkpoint, {{"policy/", &model->policy_params()}, {"value/", &model->value_params()}});
  if (stored) *stored = cfg;
  return model;
}

void cmd_optimize(const Options& o) {
  Run run("optimize", o);
  const Graph g = load_input(run, o);
  const EnvConfig env = env_config(o);
  SearchConfig search;
  search.env = env;
  search.seed = o.seed;
  OptimizerReport report;
  json config = objective_json(o);
  config["algo"] = o.algo;
  if (o.algo == "greedy") {
    report = greedy(g, env);
  } else if (o.algo == "hc") {
    report = hill_climb(g, search);
  } else if (o.algo == "sa") {
    report = simulated_annealing(g, search);
  } else if (o.algo == "ea") {
    report = evolutionary(g, search);
  } else if (o.algo == "policy") {
    json stored;
    const auto model = load_model(o, &stored);
    run.input(fs::path(o.checkpoint) / nn::kCheckpointDataFile);
    config["checkpoint"] = o.checkpoint;
    config["checkpoint_config"] = stored;
    report = evaluate_policy(*model, g, env);
  } else {
    throw ParameterError("unknown --algo " + o.algo);
  }
  write_text(run.dir() / "report.json", report_json(report).dump(2) + "\n");
  save_edge_list(report.best_graph, run.dir() / "optimized.edgelist");
  run.finish(config);
}

void cmd_train(const Options& o) {
  Run run("train", o);
  std::vector<Graph> graphs;
  for (std::size_t i = 0; i < o.graphs.size(); ++i) graphs.push_back(load_input(run, o, i));
  if (graphs.empty()) throw ParameterError("--graph is required");
  const TrainConfig cfg = train_config(o);
  ActorCritic model(policy_config(o), o.seed);
  const TrainResult result = train(model, graphs, cfg, [](const TrainLogRow& row) {
    std::cerr << "update " << row.update << " steps " << row.env_steps << " mean_gain " << row.mean_gain
              << " eval_gain " << row.eval_gain << '\n';
  });
  nn::save_checkpoint(run.dir(), train_json(o),
                      {{"policy/", &model.policy_params()}, {"value/", &model.value_params()}});
  write_text(run.dir() / "training_log.csv", format_training_log(result.log));
  json summary;
  summary["best_eval_gain"] = result.best_eval_gain;
  summary["best_update"] = result.best_update;
  summary["env_steps"] = result.env_steps;
  summary["evaluation"] = json::array();
  for (const Graph& g : graphs) summary["evaluation"].push_back(report_json(evaluate_policy(model, g, cfg.env)));
  write_text(run.dir() / "summary.json", summary.dump(2) + "\n");
  run.finish(train_json(o));
}

void cmd_embed(const Options& o) {
  Run run("embed", o);
  const Graph g = load_input(run, o);
  std::unique_ptr<ActorCritic> model;
  if (!o.checkpoint.empty()) {
    model = load_model(o);
    run.input(fs::path(o.checkpoint) / nn::kCheckpointDataFile);
  } else {
    model = std::make_unique<ActorCritic>(policy_config(o), o.seed);
  }
  // The stored architecture fixes the weights; the filtration order is free.
  FireGnnConfig enc = model->config().encoder;
  enc.order = o.k;
  nn::ParameterSet scratch;
  std::mt19937_64 unused(0);
  FireGnn encoder(enc, scratch, "", unused);
  const auto& src = model->policy_params().entries();
  auto& dst = scratch.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto values = src[i].tensor.values();
    std::copy(values.begin(), values.end(), dst[i].tensor.mutable_values().begin());
  }
  nn::NoGradGuard no_grad;
  const BatchEmbeddings emb = encoder.forward(g);
  const std::size_t d = enc.hidden;
  auto row = [d](const nn::Tensor& t, std::size_t r) {
    return std::vector<double>(t.values().begin() + static_cast<std::ptrdiff_t>(r * d),
                               t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  };
  json j;
  j["k"] = encoder.effective_order(g);
  j["dim"] = d;
  j["graph"] = row(emb.graph, 0);
  j["node"] = json::array();
  for (std::size_t v = 0; v < g.num_nodes(); ++v) j["node"].push_back(row(emb.node, v));
  j["edge"] = json::array();
  const auto dir = g.directed_edges();
  for (std::size_t e = 0; e < dir.size(); ++e) {
    j["edge"].push_back({{"tail", dir[e].tail}, {"head", dir[e].head}, {"embedding", row(emb.edge, e)}});
  }
  write_text(run.dir() / "embeddings.json", j.dump(2) + "\n");
  run.finish({{"k", o.k}, {"hidden", enc.hidden}, {"checkpoint", o.checkpoint}});
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REWIRE_FORGE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = static_cast<unsigned>(cap);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

void cmd_sweep_k(const Options& o) {
  Run run("sweep-k", o);
  const Graph g = load_input(run, o);
  if (o.k_max < 0) throw ParameterError("--k-max must be >= 0");
  const int ks = o.k_max + 1;
  std::vector<double> gains(ks, 0.0);
  std::vector<std::exception_ptr> errors(ks);
  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (int k = next++; k < ks; k = next++) {
      try {
        Options ok = o;
        ok.k = k;
        ActorCritic model(policy_config(ok), o.seed);
        const Graph graphs[] = {g};
        train(model, graphs, train_config(ok));
        gains[k] = evaluate_policy(model, g, env_config(ok)).gain_percent;
        std::lock_guard lock(log_mutex);
        std::cerr << "K=" << k << " gain " << gains[k] << '\n';
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < worker_count(static_cast<std::size_t>(ks)); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::ostringstream csv;
  csv.precision(10);
  csv << "K,gain\n";
  for (int k = 0; k < ks; ++k) csv << k << ',' << gains[k] << '\n';
  write_text(run.dir() / "sweep_k.csv", csv.str());
  json cfg = train_json(o);
  cfg["k_max"] = o.k_max;
  run.finish(cfg);
}

void add_objective_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "Weight of resilience vs utility")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--resilience", o.resilience)->check(CLI::IsMember({"R", "sr", "ac"}));
  cmd->add_option("--utility", o.utility)->check(CLI::IsMember({"global", "local", "none"}));
  cmd->add_option("--attack", o.attack)->check(CLI::IsMember({"degree", "betweenness"}));
  cmd->add_option("--budget", o.budget, "Maximum rewirings per episode")->check(CLI::PositiveNumber);
  cmd->add_flag("--forbid-disconnecting", o.forbid_disconnecting);
}

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--k", o.k, "Filtration order")->check(CLI::NonNegativeNumber);
  cmd->add_option("--steps", o.steps, "Environment steps")->check(CLI::PositiveNumber);
  cmd->add_option("--envs", o.envs)->check(CLI::PositiveNumber);
  cmd->add_option("--batch", o.batch)->check(CLI::PositiveNumber);
  cmd->add_option("--minibatch", o.minibatch)->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  cmd->add_option("--entropy-coef", o.entropy_coef)->check(CLI::NonNegativeNumber);
  cmd->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber);
  cmd->add_option("--eval-every", o.eval_every)->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degree-preserving rewiring toolkit for network resilience"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--seed", o.seed);
  };

  auto* generate = app.add_subcommand("generate", "Write Barabasi-Albert edge lists");
  common(generate);
  generate->add_option("--n", o.n)->check(CLI::PositiveNumber);
  generate->add_option("--n-max", o.n_max, "Upper node count when --count > 1");
  generate->add_option("--m", o.m)->check(CLI::PositiveNumber);
  generate->add_option("--count", o.count)->check(CLI::PositiveNumber);

  auto* metrics = app.add_subcommand("metrics", "Resilience and utility metrics as JSON");
  common(metrics);
  metrics->add_option("--graph", o.graphs)->required();
  metrics->add_option("--attack", o.attack)->check(CLI::IsMember({"degree", "betweenness"}));

  auto* curve = app.add_subcommand("attack-curve", "Largest-component curve under attack as CSV");
  common(curve);
  curve->add_option("--graph", o.graphs)->required();
  curve->add_option("--attack", o.attack)->check(CLI::IsMember({"degree", "betweenness"}));

  auto* rewire = app.add_subcommand("rewire", "Apply one swap given as --e1 A,C --e2 B,D");
  common(rewire);
  rewire->add_option("--graph", o.graphs)->required();
  rewire->add_option("--e1", o.e1)->required();
  rewire->add_option("--e2", o.e2)->required();
  rewire->add_flag("--forbid-disconnecting", o.forbid_disconnecting);

  auto* optimize = app.add_subcommand("optimize", "Run a baseline or a trained policy");
  common(optimize);
  optimize->add_option("--graph", o.graphs)->required();
  optimize->add_option("--algo", o.algo)->check(CLI::IsMember({"greedy", "hc", "sa", "ea", "policy"}));
  optimize->add_option("--checkpoint", o.checkpoint);
  add_objective_flags(optimize, o);

  auto* train_cmd = app.add_subcommand("train", "Train the rewiring policy with PPO");
  common(train_cmd);
  train_cmd->add_option("--graph", o.graphs, "Training graph(s)")->required();
  add_objective_flags(train_cmd, o);
  add_train_flags(train_cmd, o);

  auto* embed = app.add_subcommand("embed", "Dump encoder embeddings as JSON");
  common(embed);
  embed->add_option("--graph", o.graphs)->required();
  embed->add_option("--k", o.k)->check(CLI::NonNegativeNumber);
  embed->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber);
  embed->add_option("--checkpoint", o.checkpoint);

  auto* sweep = app.add_subcommand("sweep-k", "Train for each filtration order 0..k-max");
  common(sweep);
  sweep->add_option("--graph", o.graphs)->required();
  sweep->add_option("--k-max", o.k_max)->check(CLI::NonNegativeNumber);
  add_objective_flags(sweep, o);
  add_train_flags(sweep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) cmd_generate(o);
    else if (*metrics) cmd_metrics(o);
    else if (*curve) cmd_attack_curve(o);
    else if (*rewire) cmd_rewire(o);
    else if (*optimize) cmd_optimize(o);
    else if (*train_cmd) cmd_train(o);
    else if (*embed) cmd_embed(o);
    else if (*sweep) cmd_sweep_k(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.category() == Error::Category::kNumeric ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
