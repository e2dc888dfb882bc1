#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "dcop/cost_model.hpp"
#include "dcop/des.hpp"
#include "dcop/errors.hpp"
#include "dcop/exact.hpp"
#include "dcop/generators.hpp"
#include "dcop/heuristics.hpp"
#include "dcop/instance_io.hpp"
#include "dcop/nn/checkpoint.hpp"
#include "dcop/nn/model.hpp"
#include "dcop/pretrain.hpp"
#include "dcop/pseudo_tree.hpp"
#include "dcop/tripartite.hpp"

namespace dcop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DCOP_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path in_dir(const fs::path& dir, const std::string& flag, const std::string& fallback) {
  if (flag.empty()) return dir / fallback;
  return fs::path(flag);
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::ofstream open_out(const fs::path& path) {
  ensure_parent(path);
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  return f;
}

std::string header_line(const json& config) { return "# " + config.dump() + "\n"; }

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind = "random";
  int n = 0, d = 0, m0 = 0, m1 = 0, rows = 0, cols = 0, count = 1;
  double p1 = -1;
  std::uint64_t seed = 0;
  std::string prefix = "instance";
  std::string out_dir;
};

json gen_config(const GenArgs& a, std::uint64_t seed) {
  json c = {{"command", "gen"}, {"kind", a.kind}, {"d", a.d}, {"seed", seed}};
  if (a.kind == "grid") {
    c["rows"] = a.rows;
    c["cols"] = a.cols;
  } else {
    c["n"] = a.n;
  }
  if (a.kind == "random" || a.kind == "wgc") c["p1"] = a.p1;
  if (a.kind == "scale-free") {
    c["m0"] = a.m0;
    c["m1"] = a.m1;
  }
  return c;
}

ProblemInstance generate(const GenArgs& a, std::uint64_t seed) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("--kind ") + a.kind + " needs " + what);
  };
  need(a.d > 0, "--d");
  if (a.kind == "random" || a.kind == "wgc") {
    need(a.n > 0, "--n");
    need(a.p1 >= 0, "--p1");
    return a.kind == "random" ? gen_random(a.n, a.d, a.p1, seed) : gen_wgc(a.n, a.d, a.p1, seed);
  }
  if (a.kind == "scale-free") {
    need(a.n > 0, "--n");
    need(a.m0 > 0 && a.m1 > 0, "--m0 and --m1");
    return gen_scale_free(a.n, a.d, a.m0, a.m1, seed);
  }
  if (a.kind == "grid") {
    need(a.rows > 0 && a.cols > 0, "--rows and --cols");
    return gen_grid(a.rows, a.cols, a.d, seed);
  }
  throw UsageError("unknown generator kind " + a.kind);
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.count < 1) throw UsageError("--count must be positive");
  const fs::path dir = output_dir(a.out_dir);
  fs::create_directories(dir);
  json manifest = {{"version", 1}, {"files", json::array()}};
  for (int k = 0; k < a.count; ++k) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
    auto p = generate(a, seed);
    p.meta()["config"] = gen_config(a, seed);
    const std::string name = a.prefix + "_" + a.kind + "_s" + std::to_string(seed) + ".json";
    save_instance(dir / name, p);
    manifest["files"].push_back({{"file", name},
                                 {"agents", p.num_agents()},
                                 {"constraints", p.num_constraints()},
                                 {"config", p.meta()["config"]}});
    out << (dir / name).string() << '\n';
  }
  open_out(dir / (a.prefix + "_manifest.json")) << manifest.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  TrainConfig cfg;
  std::string checkpoint;
  std::string metrics;
  std::string resume;
  std::string out_dir;
  int checkpoint_every = 1;
};

json train_config(const TrainArgs& a) {
  const auto& c = a.cfg;
  const auto& d = c.distribution;
  return {{"command", "train"},
          {"epochs", c.epochs},
          {"iterations", c.iterations},
          {"instances_per_epoch", c.instances_per_epoch},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"context_cap", c.context_cap},
          {"buffer_capacity", c.buffer_capacity},
          {"holdout_every", c.holdout_every},
          {"normalize_costs", c.normalize_costs},
          {"label_scale", c.label_scale},
          {"agents", {d.min_agents, d.max_agents}},
          {"domain", {d.min_domain, d.max_domain}},
          {"density", {d.min_density, d.max_density}},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"resume", a.resume}};
}

nn::AdamState<float> to_float(const nn::AdamState<double>& s) {
  nn::AdamState<float> f;
  f.learning_rate = s.learning_rate;
  f.weight_decay = s.weight_decay;
  f.step = s.step;
  f.first = s.first.cast<float>();
  f.second = s.second.cast<float>();
  return f;
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x7261696eU};
  std::mt19937_64 rng(seq);
  return rng();
}

int cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  auto& cfg = a.cfg;
  if (a.checkpoint_every < 1) throw UsageError("--checkpoint-every must be positive");
  try {
    cfg.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = output_dir(a.out_dir);
  const fs::path ckpt_path = in_dir(dir, a.checkpoint, "model.dcpm");
  const fs::path metrics_path = in_dir(dir, a.metrics, "train_metrics.csv");

  nn::ModelParams<double> params;
  nn::AdamState<double> adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;
  int first_epoch = 0;
  if (!a.resume.empty()) {
    const auto ck = nn::load_checkpoint(a.resume);
    if (!(ck.params.arch() == params.arch())) throw InputError("checkpoint architecture differs from the model");
    params.flat() = ck.params.flat().cast<double>();
    adam.step = ck.step;
    if (ck.first && ck.second) {
      adam.first = ck.first->cast<double>();
      adam.second = ck.second->cast<double>();
    }
    cfg.normalize_costs = ck.normalize_costs;
    cfg.label_scale = ck.output_scale;
    first_epoch = static_cast<int>(ck.step / cfg.iterations);
  } else {
    std::mt19937_64 rng(cfg.seed);
    params.init_glorot(rng);
  }

  const json config = train_config(a);
  auto metrics = open_out(metrics_path);
  metrics << header_line(config) << "epoch,iteration,step,loss,buffer,skipped\n";
  metrics << std::setprecision(17);

  FifoBuffer buffer(cfg.buffer_capacity);
  FifoBuffer heldout(cfg.buffer_capacity);
  const nn::CheckpointOptions options{cfg.normalize_costs, cfg.label_scale};
  std::size_t skipped = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = first_epoch + e;
    const auto stats = generate_epoch_data(cfg, epoch, epoch * cfg.instances_per_epoch, buffer, &heldout);
    skipped += stats.skipped;
    if (stats.skipped > 0) err << "epoch " << epoch << ": " << stats.skipped << " contexts skipped at the solver cap\n";
    if (buffer.empty()) {
      err << "epoch " << epoch << ": no training tuples yet\n";
      continue;
    }
    if (a.resume.empty() && e == 0) init_readout_bias(params, buffer, cfg.label_scale);
    const auto records = train(cfg, epoch, buffer, params, adam, epoch_seed(cfg.seed, epoch));
    for (std::size_t k = 0; k < records.size(); ++k) {
      const long long step = adam.step - static_cast<long long>(records.size() - 1 - k);
      metrics << records[k].epoch << ',' << records[k].iteration << ',' << step << ',' << records[k].loss << ','
              << buffer.size() << ',' << skipped << '\n';
    }
    if ((e + 1) % a.checkpoint_every == 0 || e + 1 == cfg.epochs) {
      const auto state = to_float(adam);
      nn::save_checkpoint(ckpt_path, params.cast<float>(), &state, options);
    }
  }
  metrics.flush();

  json summary = {{"config", config}, {"checkpoint", ckpt_path.string()}, {"step", adam.step},
                  {"train_tuples", buffer.size()}, {"heldout_tuples", heldout.size()}, {"skipped", skipped}};
  if (!heldout.empty()) {
    const auto ev = evaluate(heldout, params, cfg.normalize_costs, cfg.label_scale, cfg.jobs);
    summary["heldout_mse"] = ev.mse;
    summary["heldout_spearman"] = ev.spearman;
    out << "held-out spearman " << ev.spearman << " mse " << ev.mse << " over " << ev.count << " tuples\n";
  } else {
    out << "no held-out tuples\n";
  }
  open_out(metrics_path.parent_path() / "train_summary.json") << summary.dump(2) << '\n';
  out << "checkpoint " << ckpt_path.string() << " step " << adam.step << '\n';
  return kOk;
}

// ---------------------------------------------------------------- verify-des

struct VerifyArgs {
  int queries = 100;
  std::uint64_t seed = 0;
  std::string checkpoint;
  bool random_params = false;
  std::string transport = "fifo";
  std::string fault = "none";
  double tolerance = 1e-9;
  std::string report;
  std::string out_dir;
};

struct Query {
  ProblemInstance p;
  Assignment partial;
  Var target = 0;
  Value value = 0;
};

Query random_query(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(3, 10)(rng);
  const int d = std::uniform_int_distribution<int>(2, 4)(rng);
  Query q;
  switch (seed % 4) {
    case 0: q.p = gen_random(n, d, 0.5, seed); break;
    case 1: q.p = gen_scale_free(n, d, 2, 1, seed); break;
    case 2: q.p = gen_grid(2, (n + 1) / 2, d, seed); break;
    default: q.p = gen_wgc(n, d, 0.5, seed); break;
  }
  const int m = q.p.num_agents();
  q.partial.assign(m, kUnassigned);
  for (Var v = 0; v < m; ++v) {
    if (std::bernoulli_distribution(0.25)(rng)) q.partial[v] = std::uniform_int_distribution<Value>(0, d - 1)(rng);
  }
  q.target = std::uniform_int_distribution<Var>(0, m - 1)(rng);
  q.partial[q.target] = kUnassigned;
  q.value = std::uniform_int_distribution<Value>(0, d - 1)(rng);
  return q;
}

// Counting properties every run must satisfy; empty when all hold.
std::string accounting_problems(const DagOrientation& dag, const des::DesResult<double>& r, int layers) {
  std::ostringstream why;
  std::map<Var, int> accum_by_origin;
  for (const auto& row : r.trace) {
    if (row.kind == des::MessageKind::Accum && row.receiver == dag.target) ++accum_by_origin[row.origin];
  }
  for (Var i : dag.variables) {
    const auto& c = r.counters.at(i);
    for (Var j : dag.precursors[i]) {
      const auto it = c.received_from.find(j);
      const int got = it == c.received_from.end() ? 0 : it->second;
      if (got != layers - 1) why << "agent " << i << " got " << got << " embeddings from " << j << "; ";
    }
    if (c.accum_emitted != 1) why << "agent " << i << " emitted " << c.accum_emitted << " accumulations; ";
    if (i != dag.target && accum_by_origin[i] != 1) why << "accumulation of " << i << " reached the target "
                                                         << accum_by_origin[i] << " times; ";
  }
  return why.str();
}

nn::ModelParams<double> verify_params(const VerifyArgs& a, bool& normalize) {
  normalize = false;
  if (!a.checkpoint.empty()) {
    const auto ck = nn::load_checkpoint(a.checkpoint);
    normalize = ck.normalize_costs;
    return ck.params.cast<double>();
  }
  nn::ModelParams<double> params;
  std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
  params.init_glorot(rng);
  params.readout_bias() = 1.5;
  return params;
}

int cmd_verify_des(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  if (a.checkpoint.empty() == !a.random_params) throw UsageError("give exactly one of --checkpoint and --random-params");
  if (a.queries < 1) throw UsageError("--queries must be positive");
  bool normalize = false;
  const auto params = verify_params(a, normalize);
  const int layers = params.arch().num_layers();
  const fs::path dir = output_dir(a.out_dir);
  const fs::path report_path = in_dir(dir, a.report, "des_report.csv");

  json config = {{"command", "verify-des"}, {"queries", a.queries}, {"seed", a.seed},
                 {"params", a.checkpoint.empty() ? "random" : a.checkpoint}, {"transport", a.transport},
                 {"fault", a.fault}, {"tolerance", a.tolerance}};
  auto report = open_out(report_path);
  report << header_line(config) << "query,agents,centralized,distributed,abs_diff,bit_equal,messages,status\n";
  report << std::setprecision(17);

  double max_diff = 0;
  int failures = 0;
  for (int k = 0; k < a.queries; ++k) {
    const std::uint64_t qseed = a.seed + static_cast<std::uint64_t>(k);
    const auto q = random_query(qseed);
    const auto scope = query_scope(q.p, q.partial, q.target);
    const auto dag = orient_dag(q.p, scope.scope, q.target);
    const auto g = compile(q.p, scope.scope, scope.gamma, q.target, q.value, dag);
    const double central = nn::model_forward<double>(g, params, normalize);

    des::TransportConfig tc;
    tc.mode = a.transport == "random" ? des::TransportMode::RandomDelay : des::TransportMode::Fifo;
    tc.seed = qseed;
    if (a.fault == "drop") tc.drop_message = 0;
    if (a.fault == "duplicate") tc.duplicate_message = 0;

    std::string status = "ok";
    double distributed = std::nan("");
    std::size_t messages = 0;
    try {
      const auto r = des::run_des<double>(g, dag, params, tc, normalize);
      distributed = r.prediction;
      messages = r.trace.size();
      const double diff = std::abs(distributed - central);
      max_diff = std::max(max_diff, diff);
      if (!(diff <= a.tolerance)) status = "mismatch";
      if (const auto why = accounting_problems(dag, r, layers); !why.empty()) status = "accounting: " + why;
    } catch (const LivenessError& e) {
      status = std::string("liveness error: ") + e.what();
    } catch (const ProtocolError& e) {
      status = std::string("protocol error: ") + e.what();
    }
    const bool agents_only = dag.variables.size() == 1;
    const bool bit_equal = distributed == central;
    report << k << ',' << dag.variables.size() << ',' << central << ',' << distributed << ','
           << std::abs(distributed - central) << ',' << (bit_equal ? 1 : 0) << ',' << messages << ",\""
           << status << "\"\n";
    if (status != "ok") {
      // A single-agent query has no messages to drop or duplicate.
      if (agents_only && a.fault != "none") continue;
      ++failures;
      const fs::path dump = dir / ("des_failure_" + std::to_string(k) + ".json");
      json doc = {{"config", config}, {"query", k}, {"seed", qseed}, {"status", status},
                  {"instance", to_json(q.p)}, {"partial", q.partial}, {"target", q.target}, {"value", q.value}};
      open_out(dump) << doc.dump(2) << '\n';
      err << "query " << k << ": " << status << " (dumped to " << dump.string() << ")\n";
    }
  }
  out << "queries " << a.queries << " failures " << failures << " max |dc| " << std::scientific << max_diff
      << std::defaultfloat << '\n';
  out << "report " << report_path.string() << '\n';
  return failures == 0 ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string instance;
  std::string algo;
  std::string repair;
  std::string ordering;
  std::string checkpoint;
  bool distributed = false;
  double p = 0.8;
  std::optional<double> destroy;
  int iters = 1000;
  std::uint64_t seed = 0;
  int seeds = 1;
  int jobs = 1;
  int model_depth = 3;
  double max_nodes = 5e7;
  double max_table = 1e7;
  std::string out_file;
  std::string out_dir;
};

struct Selection {
  std::string algo;
  std::string variant;  // repair or ordering
};

Selection select(const SolveArgs& a) {
  Selection s;
  const auto colon = a.algo.find(':');
  s.algo = a.algo.substr(0, colon);
  if (colon != std::string::npos) s.variant = a.algo.substr(colon + 1);
  const std::string& flag = s.algo == "dlns" ? a.repair : a.ordering;
  if (s.algo != "dlns" && !a.repair.empty()) throw UsageError("--repair only applies to dlns");
  if (s.algo != "bnb" && !a.ordering.empty()) throw UsageError("--ordering only applies to bnb");
  if (!flag.empty()) {
    if (!s.variant.empty() && s.variant != flag) throw UsageError("conflicting variants in --algo and its option");
    s.variant = flag;
  }
  if (s.algo == "dlns") {
    if (s.variant.empty()) s.variant = "tree";
    if (s.variant != "tree" && s.variant != "gatpcm" && s.variant != "oracle") {
      throw UsageError("dlns repair must be tree, gatpcm or oracle");
    }
  } else if (s.algo == "bnb") {
    if (s.variant.empty()) s.variant = "alpha";
    if (s.variant != "alpha" && s.variant != "model" && s.variant != "oracle") {
      throw UsageError("bnb ordering must be alpha, model or oracle");
    }
  } else if (s.algo == "dsa" || s.algo == "gdba" || s.algo == "dpop") {
    if (!s.variant.empty()) throw UsageError(s.algo + " takes no variant");
  } else {
    throw UsageError("unknown algorithm " + a.algo);
  }
  const bool needs_model = s.variant == "gatpcm" || (s.algo == "bnb" && s.variant == "model");
  if (needs_model && a.checkpoint.empty()) throw UsageError(a.algo + " needs --checkpoint");
  if (!needs_model && !a.checkpoint.empty()) throw UsageError("--checkpoint is only used by dlns:gatpcm and bnb:model");
  if (a.distributed && !needs_model) throw UsageError("--distributed needs a neural model");
  if (a.destroy && s.algo != "dlns") throw UsageError("--destroy only applies to dlns");
  if (a.seeds < 1 || a.iters < 0) throw UsageError("--seeds must be positive and --iters non-negative");
  return s;
}

std::unique_ptr<CostModel> make_model(const SolveArgs& a, const Selection& s, const ExactLimits& limits) {
  if (s.variant == "oracle") return std::make_unique<OracleModel>(limits);
  if (s.variant == "gatpcm" || s.variant == "model") {
    const auto ck = nn::load_checkpoint(a.checkpoint);
    return std::make_unique<NeuralModel>(ck.params.cast<double>(), ck.normalize_costs, ck.output_scale,
                                         a.distributed ? InferenceMode::Distributed : InferenceMode::Centralized);
  }
  return nullptr;
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const auto s = select(a);
  const auto p = load_instance(a.instance);
  const std::string id = fs::path(a.instance).stem().string();
  const double destroy = a.destroy.value_or(s.variant == "tree" ? 0.5 : 0.2);
  if (s.algo == "dlns" && (destroy <= 0 || destroy > 1)) throw UsageError("--destroy must lie in (0, 1]");
  ExactLimits limits;
  limits.max_table = a.max_table;

  json config = {{"command", "solve"}, {"instance", a.instance}, {"algo", s.algo}, {"variant", s.variant},
                 {"seed", a.seed}, {"seeds", a.seeds}, {"iters", a.iters}};
  if (s.algo == "dsa") config["p"] = a.p;
  if (s.algo == "dlns") config["destroy"] = destroy;
  if (s.algo == "bnb") {
    config["model_depth"] = a.model_depth;
    config["max_nodes"] = a.max_nodes;
  }
  if (!a.checkpoint.empty()) {
    config["checkpoint"] = a.checkpoint;
    config["distributed"] = a.distributed;
  }
  config["max_table"] = a.max_table;

  const fs::path dir = output_dir(a.out_dir);
  const std::string default_name = "solve_" + id + "_" + s.algo + (s.variant.empty() ? "" : "_" + s.variant) + ".csv";
  auto file = open_out(in_dir(dir, a.out_file, default_name));
  file << header_line(config);
  const int constraints = p.num_constraints();

  if (s.algo == "dpop" || s.algo == "bnb") {
    const auto start = std::chrono::steady_clock::now();
    Cost cost = 0;
    std::size_t nodes = 0;
    std::size_t queries = 0;
    if (s.algo == "dpop") {
      std::vector<Var> all(p.num_agents());
      for (Var v = 0; v < p.num_agents(); ++v) all[v] = v;
      cost = dpop(make_subproblem(p, all, Assignment(p.num_agents(), kUnassigned)), limits).cost;
    } else {
      auto model = make_model(a, s, limits);
      const auto ordering = s.variant == "alpha" ? ValueOrdering::Alphabetic : ValueOrdering::Model;
      const auto r = branch_and_bound(p, ordering, model.get(), a.model_depth, static_cast<std::size_t>(a.max_nodes));
      cost = r.cost;
      nodes = r.nodes;
      if (model) queries = model->queries();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const std::string name = s.algo + (s.variant.empty() ? "" : ":" + s.variant);
    file << "algorithm,instance_id,cost,normalized_cost,nodes,model_queries,elapsed_ms\n";
    file << name << ',' << id << ',' << cost << ',';
    if (constraints > 0) file << static_cast<double>(cost) / constraints;
    file << ',' << nodes << ',' << queries << ',' << ms << '\n';
    out << name << " cost " << cost << '\n';
    return kOk;
  }

  std::vector<AnytimeTrace> traces(a.seeds);
  std::vector<std::exception_ptr> errors(a.seeds);
  parallel_for(a.seeds, a.jobs, [&](int k) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
    try {
      if (s.algo == "dsa") {
        traces[k] = dsa(p, a.p, a.iters, seed);
      } else if (s.algo == "gdba") {
        traces[k] = gdba(p, a.iters, seed);
      } else {
        const std::string name = "dlns:" + s.variant;
        if (s.variant == "tree") {
          traces[k] = dlns(p, destroy, a.iters, repair_tree_dpop, seed, name);
        } else {
          auto model = make_model(a, s, limits);
          Repair repair = [&model](const ProblemInstance& q, const std::vector<Var>& destroyed, const Assignment& cur) {
            return repair_greedy_model(q, destroyed, cur, *model);
          };
          traces[k] = dlns(p, destroy, a.iters, repair, seed, name);
        }
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  file << anytime_csv_header();
  for (int k = 0; k < a.seeds; ++k) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
    file << anytime_csv(traces[k], id, seed, constraints);
    out << traces[k].algorithm << " seed " << seed << " best " << traces[k].best();
    if (traces[k].skipped > 0) out << " skipped " << traces[k].skipped;
    out << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- export-graph

struct ExportArgs {
  std::string instance;
  Var target = 0;
  Value value = 0;
  std::vector<std::string> assign;
  std::string out_file;
};

int cmd_export_graph(const ExportArgs& a, std::ostream& out) {
  const auto p = load_instance(a.instance);
  Assignment partial(p.num_agents(), kUnassigned);
  for (const auto& item : a.assign) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--assign expects var=value, got " + item);
    try {
      const Var v = std::stoi(item.substr(0, eq));
      const Value x = std::stoi(item.substr(eq + 1));
      if (!p.contains(v) || x < 0 || x >= p.domain_size(v)) throw UsageError("--assign out of range: " + item);
      partial[v] = x;
    } catch (const std::logic_error&) {
      throw UsageError("--assign expects var=value, got " + item);
    }
  }
  if (!p.contains(a.target) || a.value < 0 || a.value >= p.domain_size(a.target)) {
    throw UsageError("target or value out of range");
  }
  if (partial[a.target] != kUnassigned) throw UsageError("the target cannot be assigned");
  const auto q = query_scope(p, partial, a.target);
  const auto text = export_text(compile_query(p, q.scope, q.gamma, a.target, a.value));
  if (a.out_file.empty()) {
    out << text;
  } else {
    open_out(a.out_file) << text;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed constraint optimization with a pretrained attention cost model", "dcop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dcop 0.1.0");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate benchmark instances");
  g->add_option("--kind", gen.kind, "random, scale-free, grid or wgc")
      ->check(CLI::IsMember({"random", "scale-free", "grid", "wgc"}));
  g->add_option("--n", gen.n, "Number of agents");
  g->add_option("--d", gen.d, "Domain size");
  g->add_option("--p1", gen.p1, "Constraint density (random, wgc)");
  g->add_option("--m0", gen.m0, "Seed graph size (scale-free)");
  g->add_option("--m1", gen.m1, "Edges per new vertex (scale-free)");
  g->add_option("--rows", gen.rows, "Grid rows");
  g->add_option("--cols", gen.cols, "Grid columns");
  g->add_option("--seed", gen.seed, "Seed of the first instance");
  g->add_option("--count", gen.count, "Instances to generate with consecutive seeds");
  g->add_option("--prefix", gen.prefix, "File name prefix");
  g->add_option("--out-dir", gen.out_dir, "Output directory");

  TrainArgs tr;
  auto& tc = tr.cfg;
  auto* t = app.add_subcommand("train", "Pretrain the cost model on generated instances");
  t->add_option("--epochs", tc.epochs, "Epochs to run");
  t->add_option("--iterations", tc.iterations, "Optimizer steps per epoch");
  t->add_option("--instances", tc.instances_per_epoch, "Instances generated per epoch");
  t->add_option("--batch", tc.batch_size, "Batch size");
  t->add_option("--lr", tc.learning_rate, "Adam learning rate");
  t->add_option("--wd", tc.weight_decay, "Weight decay");
  t->add_option("--context-cap", tc.context_cap, "Separator contexts per variable");
  t->add_option("--buffer", tc.buffer_capacity, "Training buffer capacity");
  t->add_option("--holdout-every", tc.holdout_every, "Every n-th instance is held out (0 disables)");
  t->add_flag("--normalize", tc.normalize_costs, "Scale cost features by 1/100");
  t->add_option("--label-scale", tc.label_scale, "Labels are fit as c*/scale");
  t->add_option("--min-agents", tc.distribution.min_agents);
  t->add_option("--max-agents", tc.distribution.max_agents);
  t->add_option("--min-domain", tc.distribution.min_domain);
  t->add_option("--max-domain", tc.distribution.max_domain);
  t->add_option("--min-density", tc.distribution.min_density);
  t->add_option("--max-density", tc.distribution.max_density);
  t->add_option("--seed", tc.seed, "Seed for instances, batches and initialization");
  t->add_option("--jobs", tc.jobs, "Worker threads for labelling and gradients");
  t->add_option("--checkpoint", tr.checkpoint, "Checkpoint path (default <out-dir>/model.dcpm)");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between checkpoints");
  t->add_option("--metrics", tr.metrics, "Loss CSV path (default <out-dir>/train_metrics.csv)");
  t->add_option("--resume", tr.resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  t->add_option("--out-dir", tr.out_dir, "Output directory");

  VerifyArgs vr;
  auto* v = app.add_subcommand("verify-des", "Check distributed inference against centralized inference");
  v->add_option("--queries", vr.queries, "Seeded random queries");
  v->add_option("--seed", vr.seed, "First query seed");
  v->add_option("--checkpoint", vr.checkpoint, "Model checkpoint")->check(CLI::ExistingFile);
  v->add_flag("--random-params", vr.random_params, "Use seeded random parameters");
  v->add_option("--transport", vr.transport, "fifo or random")->check(CLI::IsMember({"fifo", "random"}));
  v->add_option("--fault", vr.fault, "none, drop or duplicate")->check(CLI::IsMember({"none", "drop", "duplicate"}));
  v->add_option("--tolerance", vr.tolerance, "Allowed |DES - centralized|");
  v->add_option("--report", vr.report, "Report CSV path (default <out-dir>/des_report.csv)");
  v->add_option("--out-dir", vr.out_dir, "Output directory");

  SolveArgs sv;
  auto* s = app.add_subcommand("solve", "Run a solver on an instance");
  s->add_option("--instance", sv.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--algo", sv.algo, "dsa | gdba | dlns[:tree|gatpcm|oracle] | bnb[:alpha|model|oracle] | dpop")
      ->required();
  s->add_option("--repair", sv.repair, "DLNS repair: tree, gatpcm or oracle");
  s->add_option("--ordering", sv.ordering, "BnB value ordering: alpha, model or oracle");
  s->add_option("--checkpoint", sv.checkpoint, "Model checkpoint for gatpcm or model ordering")
      ->check(CLI::ExistingFile);
  s->add_flag("--distributed", sv.distributed, "Evaluate the model through message passing");
  s->add_option("--p", sv.p, "DSA activation probability");
  s->add_option("--destroy", sv.destroy, "DLNS destroy probability (tree 0.5, otherwise 0.2)");
  s->add_option("--iters", sv.iters, "Iterations");
  s->add_option("--seed", sv.seed, "First seed");
  s->add_option("--seeds", sv.seeds, "Runs with consecutive seeds");
  s->add_option("--jobs", sv.jobs, "Parallel runs");
  s->add_option("--model-depth", sv.model_depth, "BnB: pseudo-tree depth that uses model ordering");
  s->add_option("--max-nodes", sv.max_nodes, "BnB node cap");
  s->add_option("--max-table", sv.max_table, "DPOP utility table cap");
  s->add_option("--out", sv.out_file, "Result CSV path");
  s->add_option("--out-dir", sv.out_dir, "Output directory");

  ExportArgs ex;
  auto* x = app.add_subcommand("export-graph", "Print the compiled graph of one query");
  x->add_option("--instance", ex.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  x->add_option("--target", ex.target, "Target variable")->required();
  x->add_option("--value", ex.value, "Target value")->required();
  x->add_option("--assign", ex.assign, "Assigned variables as var=value")->delimiter(',');
  x->add_option("--out", ex.out_file, "Output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (v->parsed()) return cmd_verify_des(vr, out, err);
    if (s->parsed()) return cmd_solve(sv, out);
    if (x->parsed()) return cmd_export_graph(ex, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ResourceError& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResourceCap;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const LivenessError& e) {
    err << "liveness error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace dcop::cli
