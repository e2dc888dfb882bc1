#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "dcop/exact.hpp"
#include "dcop/instance.hpp"
#include "dcop/nn/adam.hpp"
#include "dcop/nn/params.hpp"
#include "dcop/tripartite.hpp"

namespace dcop {

/// A target assignment under a separator context, labelled with the optimal cost of
/// the subtree below it.
struct LabelledTuple {
  int instance = -1;
  std::shared_ptr<const ProblemInstance> problem;
  std::vector<Var> scope;  // the target's subtree in the instance's pseudo tree
  PartialAssignment gamma;
  Var target = 0;
  Value value = 0;
  Cost label = 0;
  std::shared_ptr<const TripartiteGraph> graph;  // compiled lazily
};

const TripartiteGraph& tuple_graph(LabelledTuple& t);

class FifoBuffer {
 public:
  explicit FifoBuffer(std::size_t capacity);

  void push(LabelledTuple t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  std::size_t evicted() const { return evicted_; }
  LabelledTuple& operator[](std::size_t i) { return items_[i]; }
  const LabelledTuple& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::size_t evicted_ = 0;
  std::deque<LabelledTuple> items_;
};

struct ProblemDistribution {
  int min_agents = 15;
  int max_agents = 30;
  int min_domain = 3;
  int max_domain = 15;
  double min_density = 0.1;
  double max_density = 0.4;
};

struct TrainConfig {
  int epochs = 1;                 // N
  int iterations = 100;           // K per epoch
  int instances_per_epoch = 1;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 5e-5;
  int context_cap = 32;
  std::size_t buffer_capacity = 50000;
  int holdout_every = 10;         // every n-th instance goes to the held-out set; 0 disables
  bool normalize_costs = false;
  double label_scale = 100;       // the model is fit to c* / label_scale
  ProblemDistribution distribution;
  std::uint64_t seed = 0;
  int jobs = 1;
  ExactLimits limits;

  void validate() const;
};

struct GenerationStats {
  std::size_t appended = 0;
  std::size_t heldout = 0;
  std::size_t skipped = 0;  // exact solver hit a resource cap
  int instances = 0;
};

/// Labelled tuples for one instance: for every variable, up to `context_cap` separator
/// contexts (all of them when there are few enough), each with every target value.
std::vector<LabelledTuple> label_instance(std::shared_ptr<const ProblemInstance> p, int instance_id,
                                          const TrainConfig& cfg, std::uint64_t seed, std::size_t* skipped = nullptr);

/// Phase I of one epoch. Instances numbered `first_instance`, ... are drawn from the
/// distribution with seeds derived from cfg.seed; held-out instances go to `heldout`.
GenerationStats generate_epoch_data(const TrainConfig& cfg, int epoch, int first_instance, FifoBuffer& buffer,
                                    FifoBuffer* heldout = nullptr);

ProblemInstance sample_instance(const ProblemDistribution& dist, std::uint64_t seed);

/// Mean squared error over `batch` and its gradient, accumulated into `grads` (zeroed first).
/// Predictions are label_scale times the network output.
double batch_loss(std::vector<LabelledTuple*> batch, const nn::ModelParams<double>& params,
                  nn::ModelParams<double>& grads, bool normalize_costs, double label_scale = 1, int jobs = 1);

/// Sets the readout bias so that the untrained model predicts the mean label.
void init_readout_bias(nn::ModelParams<double>& params, const FifoBuffer& data, double label_scale);

struct TrainRecord {
  int epoch = 0;
  int iteration = 0;
  double loss = 0;
};

/// Phase II: cfg.iterations Adam steps on uniformly sampled batches. Returns the loss per
/// iteration. `rng_seed` drives batch sampling.
std::vector<TrainRecord> train(const TrainConfig& cfg, int epoch, FifoBuffer& buffer, nn::ModelParams<double>& params,
                               nn::AdamState<double>& adam, std::uint64_t rng_seed);

double predict(LabelledTuple& t, const nn::ModelParams<double>& params, bool normalize_costs, double label_scale = 1);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct Evaluation {
  double mse = 0;
  double spearman = 0;
  std::size_t count = 0;
};
Evaluation evaluate(FifoBuffer& data, const nn::ModelParams<double>& params, bool normalize_costs,
                    double label_scale = 1, int jobs = 1);

/// Dataset file: a JSON document with the instances as an index header followed by the
/// tuple records (instance index, context, target, value, label).
void save_dataset(const std::filesystem::path& path, const FifoBuffer& buffer);
FifoBuffer load_dataset(const std::filesystem::path& path, std::size_t capacity);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace dcop
