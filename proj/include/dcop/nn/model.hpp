#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "dcop/nn/gat.hpp"
#include "dcop/tripartite.hpp"

namespace dcop::nn {

/// Running sum used for pooling function-node embeddings: each agent sums its own
/// function rows in ascending node id, and agent partials are then summed in
/// ascending agent id. Centralized and distributed inference share it.
template <typename Scalar>
void accumulate(Vector<Scalar>& acc, const Scalar* row) {
  for (Eigen::Index c = 0; c < acc.size(); ++c) acc[c] += row[c];
}

/// Affine readout on [target ; pooled] with a fixed accumulation order.
template <typename Scalar>
Scalar readout(const ModelParams<Scalar>& params, const Scalar* target, const Vector<Scalar>& pooled) {
  const auto w = params.readout_weight();
  const Eigen::Index half = pooled.size();
  Scalar acc(0);
  for (Eigen::Index c = 0; c < half; ++c) acc += w[c] * target[c];
  for (Eigen::Index c = 0; c < half; ++c) acc += w[half + c] * pooled[c];
  return acc + params.readout_bias();
}

template <typename Scalar>
struct ForwardCache {
  const TripartiteGraph* graph = nullptr;
  const ModelParams<Scalar>* params = nullptr;
  std::uint64_t generation = 0;
  std::vector<LayerCache<Scalar>> layers;
  std::vector<Matrix<Scalar>> embeddings;  // H^(1) .. H^(T)
  Vector<Scalar> pooled;
  Scalar prediction{};
};

inline Neighborhoods neighborhoods(const TripartiteGraph& g) { return {g.in_offsets, g.in_sources}; }

/// Sum of final-layer function-node embeddings, grouped by owning agent.
template <typename Scalar>
Vector<Scalar> pool_functions(const TripartiteGraph& g, const Matrix<Scalar>& h) {
  Vector<Scalar> pooled = Vector<Scalar>::Zero(h.cols());
  Vector<Scalar> partial = Vector<Scalar>::Zero(h.cols());
  Var owner = -1;
  for (int f : g.function_nodes) {
    if (g.nodes[f].owner != owner) {
      if (owner >= 0) accumulate<Scalar>(pooled, partial.data());
      partial.setZero();
      owner = g.nodes[f].owner;
    }
    accumulate<Scalar>(partial, h.row(f).data());
  }
  if (owner >= 0) accumulate<Scalar>(pooled, partial.data());
  return pooled;
}

/// Predicted optimal cost of the compiled query: T attention layers, then the readout on
/// the target node's embedding concatenated with the pooled function-node embeddings.
template <typename Scalar>
Scalar model_forward(const TripartiteGraph& g, const FeatureMatrix<Scalar>& features, const ModelParams<Scalar>& params,
                     ForwardCache<Scalar>* cache = nullptr) {
  if (g.target_node < 0 || g.target_node >= g.num_nodes()) throw InputError("graph has no target node");
  if (features.rows() != g.num_nodes()) throw InputError("feature rows do not match graph nodes");
  if (params.arch().input_dim != features.cols()) throw InputError("feature width does not match the model");
  const auto nbrs = neighborhoods(g);
  std::vector<int> all(g.num_nodes());
  std::iota(all.begin(), all.end(), 0);

  const int layers = params.arch().num_layers();
  if (cache != nullptr) {
    cache->graph = &g;
    cache->params = &params;
    cache->generation = params.generation();
    cache->layers.assign(layers, {});
    cache->embeddings.assign(layers, {});
  }
  Matrix<Scalar> h = features;
  for (int l = 0; l < layers; ++l) {
    Matrix<Scalar> next;
    gat_layer_forward<Scalar>(h, nbrs, all, params, l, next, cache ? &cache->layers[l] : nullptr);
    h = std::move(next);
    if (cache != nullptr) cache->embeddings[l] = h;
  }
  Vector<Scalar> pooled = pool_functions<Scalar>(g, h);
  const Scalar c = readout<Scalar>(params, h.row(g.target_node).data(), pooled);
  if (cache != nullptr) {
    cache->pooled = std::move(pooled);
    cache->prediction = c;
  }
  return c;
}

template <typename Scalar>
Scalar model_forward(const TripartiteGraph& g, const ModelParams<Scalar>& params, bool normalize_costs = false) {
  return model_forward<Scalar>(g, initial_features<Scalar>(g, normalize_costs), params);
}

/// Adds dL/dc * d(prediction)/d(theta) into `grads`.
template <typename Scalar>
void model_backward(const ForwardCache<Scalar>& cache, const ModelParams<Scalar>& params, Scalar dl_dc,
                    ModelParams<Scalar>& grads) {
  if (cache.graph == nullptr || cache.params != &params || cache.generation != params.generation()) {
    throw InputError("forward cache is stale or belongs to other parameters");
  }
  if (!(grads.arch() == params.arch())) throw InputError("gradient container has another architecture");
  const auto& g = *cache.graph;
  const int layers = params.arch().num_layers();
  const Matrix<Scalar>& h = cache.embeddings.back();
  const Eigen::Index dim = h.cols();

  auto w = params.readout_weight();
  grads.readout_weight().head(dim) += dl_dc * h.row(g.target_node).transpose();
  grads.readout_weight().tail(dim) += dl_dc * cache.pooled;
  grads.readout_bias() += dl_dc;

  Matrix<Scalar> d_h = Matrix<Scalar>::Zero(h.rows(), dim);
  d_h.row(g.target_node) += dl_dc * w.head(dim).transpose();
  for (int f : g.function_nodes) d_h.row(f) += dl_dc * w.tail(dim).transpose();

  const auto nbrs = neighborhoods(g);
  for (int l = layers - 1; l >= 0; --l) {
    d_h = gat_layer_backward<Scalar>(cache.layers[l], nbrs, params, l, d_h, grads);
  }
}

}  // namespace dcop::nn
