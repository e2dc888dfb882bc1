#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dcop/des.hpp"
#include "dcop/errors.hpp"
#include "dcop/generators.hpp"
#include "dcop/nn/model.hpp"

namespace dcop::des {
namespace {

struct Query {
  ProblemInstance p;
  QueryScope q;
  Var target = 0;
  Value value = 0;
  DagOrientation dag;
  TripartiteGraph g;
};

Query random_query(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(3, 10)(rng);
  const int d = std::uniform_int_distribution<int>(2, 4)(rng);
  Query out;
  switch (seed % 4) {
    case 0: out.p = gen_random(n, d, 0.5, seed); break;
    case 1: out.p = gen_scale_free(n, d, 2, 1, seed); break;
    case 2: out.p = gen_grid(2, (n + 1) / 2, d, seed); break;
    default: out.p = gen_wgc(n, d, 0.5, seed); break;
  }
  const int m = out.p.num_agents();
  Assignment partial(m, kUnassigned);
  for (Var v = 0; v < m; ++v) {
    if (std::bernoulli_distribution(0.25)(rng)) partial[v] = std::uniform_int_distribution<Value>(0, d - 1)(rng);
  }
  out.target = std::uniform_int_distribution<Var>(0, m - 1)(rng);
  partial[out.target] = kUnassigned;
  out.value = std::uniform_int_distribution<Value>(0, d - 1)(rng);
  out.q = query_scope(out.p, partial, out.target);
  out.dag = orient_dag(out.p, out.q.scope, out.target);
  out.g = compile(out.p, out.q.scope, out.q.gamma, out.target, out.value, out.dag);
  return out;
}

nn::ModelParams<double> random_params(std::uint64_t seed) {
  nn::ModelParams<double> params;
  std::mt19937_64 rng(seed);
  params.init_glorot(rng);
  params.readout_bias() = 1.5;
  return params;
}

constexpr int kLayers = 4;

TEST(Des, SoundAgainstCentralizedInference) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto qu = random_query(s);
    const auto params = random_params(1000 + s);
    const double central = nn::model_forward<double>(qu.g, params);
    const auto r = run_des<double>(qu.g, qu.dag, params);
    EXPECT_EQ(r.prediction, central) << "seed " << s;
    EXPECT_LE(std::abs(r.prediction - central), 1e-9);
  }
}

TEST(Des, LayerEmbeddingsMatchCentralizedRows) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto qu = random_query(s);
    const auto params = random_params(s);
    nn::ForwardCache<double> cache;
    nn::model_forward<double>(qu.g, initial_features<double>(qu.g), params, &cache);
    TransportConfig cfg;
    cfg.record_embeddings = true;
    const auto r = run_des<double>(qu.g, qu.dag, params, cfg);
    ASSERT_EQ(r.embeddings.size(), cache.embeddings.size());
    for (std::size_t t = 0; t < cache.embeddings.size(); ++t) {
      EXPECT_EQ(r.embeddings[t], cache.embeddings[t]) << "layer " << t + 1;
    }
  }
}

TEST(Des, MessageAccounting) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto qu = random_query(s);
    const auto r = run_des<double>(qu.g, qu.dag, random_params(s));
    const int n = static_cast<int>(qu.dag.variables.size());
    std::map<Var, int> accum_by_origin;
    for (const auto& row : r.trace) {
      if (row.kind == MessageKind::Accum && row.receiver == qu.target) ++accum_by_origin[row.origin];
    }
    for (Var i : qu.dag.variables) {
      const auto& c = r.counters.at(i);
      EXPECT_EQ(c.inference_steps, kLayers);
      EXPECT_EQ(c.accum_emitted, 1u);
      const auto& pre = qu.dag.precursors[i];
      EXPECT_EQ(c.received_from.size(), pre.size());
      for (Var j : pre) EXPECT_EQ(c.received_from.at(j), kLayers - 1) << "agent " << i << " from " << j;
      EXPECT_EQ(c.embeddings_sent, (kLayers - 1) * qu.dag.successors[i].size());
      if (i != qu.target) EXPECT_EQ(accum_by_origin[i], 1) << "origin " << i;
    }
    EXPECT_EQ(r.counters.at(qu.target).accum_absorbed, static_cast<std::size_t>(n - 1));
  }
}

TEST(Des, PayloadVolumeFormula) {
  const nn::Architecture arch = nn::Architecture::standard();
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto qu = random_query(s);
    const auto r = run_des<double>(qu.g, qu.dag, random_params(s));
    // Accumulation hops through each agent along lowest-index successors.
    std::map<Var, std::size_t> hops;
    for (Var a : qu.dag.variables) {
      for (Var v = a; v != qu.target;) {
        ++hops[v];
        v = qu.dag.successors[v].front();
      }
    }
    std::size_t d_max = 0;
    for (Var v : qu.dag.variables) d_max = std::max<std::size_t>(d_max, qu.p.domain_size(v));
    for (Var i : qu.dag.variables) {
      std::size_t bytes = 0;
      for (Var j : qu.dag.successors[i]) {
        const std::size_t cells = qu.p.domain_size(i) * (j == qu.target ? 1 : qu.p.domain_size(j));
        for (int t = 1; t < kLayers; ++t) bytes += cells * arch.layers[t - 1].channels * sizeof(double);
      }
      bytes += hops[i] * arch.output_dim() * sizeof(double);
      EXPECT_EQ(r.counters.at(i).bytes_sent, bytes) << "agent " << i;
      EXPECT_EQ(embedding_payload_bytes(qu.g, qu.dag, arch, i, sizeof(double)), bytes);
      // O(T |I| d^2) with the widest layer as constant.
      const std::size_t n = qu.dag.variables.size();
      EXPECT_LE(bytes, kLayers * n * d_max * d_max * 16 * sizeof(double));
    }
  }
}

TEST(Des, ScheduleIndependence) {
  const auto qu = random_query(7);
  const auto params = random_params(8);
  const double fifo = run_des<double>(qu.g, qu.dag, params).prediction;
  std::set<std::vector<Var>> orders;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TransportConfig cfg;
    cfg.mode = TransportMode::RandomDelay;
    cfg.seed = seed;
    const auto r = run_des<double>(qu.g, qu.dag, params, cfg);
    EXPECT_EQ(r.prediction, fifo);
    std::vector<Var> order;
    for (const auto& row : r.trace) order.push_back(row.sender);
    orders.insert(order);
  }
  EXPECT_GT(orders.size(), 1u);  // the delays did reorder deliveries
}

TEST(Des, SingleAgentNeedsNoMessages) {
  ProblemInstance p({3, 3});
  p.add_constraint(0, 1, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto params = random_params(3);
  const auto r = run_des<double>(p, {1}, {{0, 2}}, 1, 0, params);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.prediction, nn::model_forward<double>(compile_query(p, {1}, {{0, 2}}, 1, 0), params));
}

TEST(Des, ChainTargetAbsorbsEveryAccumulation) {
  ProblemInstance p({2, 2, 2});
  p.add_constraint(0, 1, {1, 2, 3, 4});
  p.add_constraint(1, 2, {5, 6, 7, 8});
  const auto r = run_des<double>(p, {0, 1, 2}, {}, 2, 1, random_params(4));
  EXPECT_EQ(r.counters.at(2).accum_absorbed, 2u);
  EXPECT_EQ(r.counters.at(1).accum_forwarded, 1u);
}

TEST(Des, FloatRunsAreAlsoExact) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto qu = random_query(s);
    const auto params = random_params(s).cast<float>();
    EXPECT_EQ(run_des<float>(qu.g, qu.dag, params).prediction, nn::model_forward<float>(qu.g, params));
  }
}

TEST(Des, FaultsAreDetected) {
  const auto qu = random_query(9);
  ASSERT_GT(qu.dag.variables.size(), 2u);
  const auto params = random_params(9);
  const auto clean = run_des<double>(qu.g, qu.dag, params);
  for (std::size_t k = 0; k < clean.trace.size(); ++k) {
    TransportConfig drop;
    drop.drop_message = k;
    EXPECT_THROW(run_des<double>(qu.g, qu.dag, params, drop), LivenessError) << "drop " << k;
    TransportConfig dup;
    dup.duplicate_message = k;
    EXPECT_THROW(run_des<double>(qu.g, qu.dag, params, dup), ProtocolError) << "duplicate " << k;
  }
  TransportConfig budget;
  budget.max_messages = clean.trace.size() - 1;
  EXPECT_THROW(run_des<double>(qu.g, qu.dag, params, budget), LivenessError);
  budget.max_messages = clean.trace.size();
  EXPECT_NO_THROW(run_des<double>(qu.g, qu.dag, params, budget));

  // Deliver the first message to an agent that is not its receiver's precursor set member.
  const auto& first = clean.trace.front();
  for (Var other : qu.dag.variables) {
    const auto& pre = qu.dag.precursors[other];
    if (std::find(pre.begin(), pre.end(), first.sender) != pre.end()) continue;
    TransportConfig redirect;
    redirect.redirect_message = {0, other};
    EXPECT_THROW(run_des<double>(qu.g, qu.dag, params, redirect), ProtocolError);
    break;
  }
}

TEST(Des, PayloadsCarryNoRawCosts) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto qu = random_query(s * 4);  // random-cost generator
    TransportConfig cfg;
    cfg.record_payloads = true;
    const auto r = run_des<double>(qu.g, qu.dag, random_params(s), cfg);
    for (const auto& m : r.payloads) {
      std::set<double> raw;
      for (Var nb : qu.p.neighbors(m.sender)) {
        for (Cost c : qu.p.constraint(qu.p.find(m.sender, nb)).costs) raw.insert(static_cast<double>(c));
      }
      for (Eigen::Index k = 0; k < m.rows.size(); ++k) EXPECT_EQ(raw.count(m.rows.data()[k]), 0u);
    }
  }
}

TEST(Des, TraceCsv) {
  const auto qu = random_query(5);
  const auto r = run_des<double>(qu.g, qu.dag, random_params(5));
  const auto csv = trace_csv(r.trace);
  EXPECT_EQ(csv.rfind("step,sender,receiver,kind,timestep,payload_bytes\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.trace.size() + 1);
}

TEST(Des, RejectsMismatchedOrientation) {
  const auto qu = random_query(11);
  auto dag = qu.dag;
  dag.target = qu.dag.variables.front() == qu.target ? qu.dag.variables.back() : qu.dag.variables.front();
  EXPECT_THROW(run_des<double>(qu.g, dag, random_params(1)), InputError);
}

}  // namespace
}  // namespace dcop::des
