#include "dcop/pretrain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "dcop/errors.hpp"
#include "dcop/generators.hpp"
#include "dcop/instance_io.hpp"
#include "dcop/nn/model.hpp"
#include "dcop/pseudo_tree.hpp"

namespace dcop {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Contexts over `sep` as value vectors: all of them when their number is at most `cap`,
// otherwise `cap` distinct ones drawn uniformly.
std::vector<std::vector<Value>> contexts(const ProblemInstance& p, const std::vector<Var>& sep, int cap,
                                         std::mt19937_64& rng) {
  double total = 1;
  for (Var v : sep) total *= p.domain_size(v);
  std::vector<std::vector<Value>> out;
  if (total <= cap) {
    std::vector<Value> ctx(sep.size(), 0);
    for (long long k = 0; k < static_cast<long long>(total); ++k) {
      out.push_back(ctx);
      for (std::size_t pos = sep.size(); pos-- > 0;) {
        if (++ctx[pos] < p.domain_size(sep[pos])) break;
        ctx[pos] = 0;
      }
    }
    return out;
  }
  std::set<std::vector<Value>> seen;
  while (static_cast<int>(out.size()) < cap) {
    std::vector<Value> ctx(sep.size());
    for (std::size_t pos = 0; pos < sep.size(); ++pos) {
      ctx[pos] = std::uniform_int_distribution<Value>(0, p.domain_size(sep[pos]) - 1)(rng);
    }
    if (seen.insert(ctx).second) out.push_back(std::move(ctx));
  }
  return out;
}

}  // namespace

const TripartiteGraph& tuple_graph(LabelledTuple& t) {
  if (!t.graph) {
    t.graph = std::make_shared<const TripartiteGraph>(compile_query(*t.problem, t.scope, t.gamma, t.target, t.value));
  }
  return *t.graph;
}

FifoBuffer::FifoBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("buffer capacity must be positive");
}

void FifoBuffer::push(LabelledTuple t) {
  if (items_.size() == capacity_) {
    items_.pop_front();
    ++evicted_;
  }
  items_.push_back(std::move(t));
}

void TrainConfig::validate() const {
  if (epochs < 1 || iterations < 0 || instances_per_epoch < 1 || batch_size < 1 || context_cap < 1 ||
      buffer_capacity < 1 || holdout_every < 0 || jobs < 1) {
    throw InputError("training counts must be positive");
  }
  if (!(label_scale > 0)) throw InputError("label scale must be positive");
  if (learning_rate < 0 || weight_decay < 0) throw InputError("learning rate and weight decay must be non-negative");
  const auto& d = distribution;
  if (d.min_agents < 1 || d.min_agents > d.max_agents || d.min_domain < 1 || d.min_domain > d.max_domain ||
      d.min_density < 0 || d.min_density > d.max_density || d.max_density > 1) {
    throw InputError("invalid problem distribution");
  }
}

ProblemInstance sample_instance(const ProblemDistribution& dist, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(dist.min_agents, dist.max_agents)(rng);
  const int d = std::uniform_int_distribution<int>(dist.min_domain, dist.max_domain)(rng);
  const double p1 = std::uniform_real_distribution<double>(dist.min_density, dist.max_density)(rng);
  return gen_random(n, d, p1, rng());
}

std::vector<LabelledTuple> label_instance(std::shared_ptr<const ProblemInstance> p, int instance_id,
                                          const TrainConfig& cfg, std::uint64_t seed, std::size_t* skipped) {
  std::mt19937_64 rng(seed);
  const auto pt = build_pseudo_forest(*p);
  std::vector<LabelledTuple> out;
  for (Var i = 0; i < p->num_agents(); ++i) {
    const auto sep = separator(pt, i);
    const auto sub = pt.subtree(i);
    std::vector<Var> scope(sub.begin(), sub.end());
    std::sort(scope.begin(), scope.end());
    for (const auto& ctx : contexts(*p, sep, cfg.context_cap, rng)) {
      PartialAssignment gamma;
      for (std::size_t k = 0; k < sep.size(); ++k) gamma[sep[k]] = ctx[k];
      for (Value d = 0; d < p->domain_size(i); ++d) {
        try {
          const auto sol = dpop(reduce(*p, pt, gamma, i, d), cfg.limits);
          out.push_back({instance_id, p, scope, gamma, i, d, sol.cost, nullptr});
        } catch (const ResourceError&) {
          if (skipped != nullptr) ++*skipped;
        }
      }
    }
  }
  return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

GenerationStats generate_epoch_data(const TrainConfig& cfg, int epoch, int first_instance, FifoBuffer& buffer,
                                    FifoBuffer* heldout) {
  cfg.validate();
  const int count = cfg.instances_per_epoch;
  std::vector<std::vector<LabelledTuple>> results(count);
  std::vector<std::size_t> skipped(count, 0);
  parallel_for(count, cfg.jobs, [&](int k) {
    const int id = first_instance + k;
    const auto seed = mix(mix(cfg.seed, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(id));
    auto p = std::make_shared<const ProblemInstance>(sample_instance(cfg.distribution, seed));
    results[k] = label_instance(p, id, cfg, mix(seed, 1), &skipped[k]);
  });
  GenerationStats stats;
  stats.instances = count;
  for (int k = 0; k < count; ++k) {
    const int id = first_instance + k;
    const bool held = heldout != nullptr && cfg.holdout_every > 0 && id % cfg.holdout_every == cfg.holdout_every - 1;
    stats.skipped += skipped[k];
    for (auto& t : results[k]) {
      if (held) {
        heldout->push(std::move(t));
        ++stats.heldout;
      } else {
        buffer.push(std::move(t));
        ++stats.appended;
      }
    }
  }
  return stats;
}

double predict(LabelledTuple& t, const nn::ModelParams<double>& params, bool normalize_costs, double label_scale) {
  return label_scale * nn::model_forward<double>(tuple_graph(t), params, normalize_costs);
}

void init_readout_bias(nn::ModelParams<double>& params, const FifoBuffer& data, double label_scale) {
  if (data.empty()) throw InputError("cannot initialize from an empty buffer");
  double mean = 0;
  for (const auto& t : data) mean += static_cast<double>(t.label);
  params.readout_bias() = mean / static_cast<double>(data.size()) / label_scale;
}

double batch_loss(std::vector<LabelledTuple*> batch, const nn::ModelParams<double>& params,
                  nn::ModelParams<double>& grads, bool normalize_costs, double label_scale, int jobs) {
  if (batch.empty()) throw InputError("empty batch");
  const int n = static_cast<int>(batch.size());
  for (auto* t : batch) tuple_graph(*t);
  std::vector<double> sq(n);
  std::vector<nn::ModelParams<double>> per(n, nn::ModelParams<double>(params.arch()));
  parallel_for(n, jobs, [&](int k) {
    const auto& g = *batch[k]->graph;
    nn::ForwardCache<double> cache;
    const double c = nn::model_forward<double>(g, initial_features<double>(g, normalize_costs), params, &cache);
    const double err = label_scale * c - static_cast<double>(batch[k]->label);
    sq[k] = err * err;
    nn::model_backward<double>(cache, params, 2.0 * err * label_scale / n, per[k]);
  });
  grads.set_zero();
  double loss = 0;
  for (int k = 0; k < n; ++k) {
    grads.flat() += per[k].flat();
    loss += sq[k];
  }
  return loss / n;
}

std::vector<TrainRecord> train(const TrainConfig& cfg, int epoch, FifoBuffer& buffer, nn::ModelParams<double>& params,
                               nn::AdamState<double>& adam, std::uint64_t rng_seed) {
  if (buffer.empty()) throw InputError("training buffer is empty");
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  nn::ModelParams<double> grads(params.arch());
  std::vector<TrainRecord> trace;
  for (int k = 0; k < cfg.iterations; ++k) {
    std::vector<LabelledTuple*> batch;
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(&buffer[pick(rng)]);
    const double loss = batch_loss(batch, params, grads, cfg.normalize_costs, cfg.label_scale, cfg.jobs);
    nn::adam_step(params, grads, adam);
    trace.push_back({epoch, k, loss});
  }
  return trace;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto l, auto r) { return x[l] < x[r]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

Evaluation evaluate(FifoBuffer& data, const nn::ModelParams<double>& params, bool normalize_costs,
                    double label_scale, int jobs) {
  Evaluation ev;
  ev.count = data.size();
  if (data.empty()) return ev;
  std::vector<double> pred(data.size()), label(data.size());
  parallel_for(static_cast<int>(data.size()), jobs, [&](int k) {
    pred[k] = predict(data[k], params, normalize_costs, label_scale);
    label[k] = static_cast<double>(data[k].label);
  });
  for (std::size_t k = 0; k < data.size(); ++k) ev.mse += (pred[k] - label[k]) * (pred[k] - label[k]);
  ev.mse /= static_cast<double>(data.size());
  ev.spearman = spearman(pred, label);
  return ev;
}

void save_dataset(const std::filesystem::path& path, const FifoBuffer& buffer) {
  nlohmann::json doc;
  doc["version"] = 1;
  std::vector<const ProblemInstance*> index;
  std::map<const ProblemInstance*, int> slot;
  nlohmann::json instances = nlohmann::json::array();
  nlohmann::json records = nlohmann::json::array();
  for (const auto& t : buffer) {
    auto [it, fresh] = slot.try_emplace(t.problem.get(), static_cast<int>(index.size()));
    if (fresh) {
      index.push_back(t.problem.get());
      auto j = to_json(*t.problem);
      j["id"] = t.instance;
      instances.push_back(std::move(j));
    }
    nlohmann::json gamma = nlohmann::json::array();
    for (const auto& [v, val] : t.gamma) gamma.push_back({v, val});
    records.push_back({{"instance", it->second},
                       {"scope", t.scope},
                       {"gamma", gamma},
                       {"target", t.target},
                       {"value", t.value},
                       {"cost", t.label}});
  }
  doc["instances"] = std::move(instances);
  doc["tuples"] = std::move(records);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump() << '\n';
}

FifoBuffer load_dataset(const std::filesystem::path& path, std::size_t capacity) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("version", 0) != 1 || !doc.contains("instances") || !doc.contains("tuples")) {
    throw ParseError(path.string() + ": not a dataset file");
  }
  std::vector<std::shared_ptr<const ProblemInstance>> instances;
  std::vector<int> ids;
  for (const auto& j : doc["instances"]) {
    instances.push_back(std::make_shared<const ProblemInstance>(instance_from_json(j)));
    ids.push_back(j.value("id", static_cast<int>(ids.size())));
  }
  FifoBuffer buffer(capacity);
  std::size_t k = 0;
  for (const auto& r : doc["tuples"]) {
    try {
      const int slot = r.at("instance").get<int>();
      if (slot < 0 || slot >= static_cast<int>(instances.size())) throw ParseError("instance index out of range");
      LabelledTuple t;
      t.instance = ids[slot];
      t.problem = instances[slot];
      t.scope = r.at("scope").get<std::vector<Var>>();
      for (const auto& e : r.at("gamma")) t.gamma[e.at(0).get<Var>()] = e.at(1).get<Value>();
      t.target = r.at("target").get<Var>();
      t.value = r.at("value").get<Value>();
      t.label = r.at("cost").get<Cost>();
      buffer.push(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": $.tuples[" + std::to_string(k) + "]: " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": $.tuples[" + std::to_string(k) + "]: " + e.what());
    }
    ++k;
  }
  return buffer;
}

}  // namespace dcop
