#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dcop/errors.hpp"
#include "dcop/nn/params.hpp"

namespace dcop::nn {

inline constexpr double kLeakySlope = 0.2;

/// In-neighbor lists (self included) in CSR form over the rows of a feature matrix.
/// Each list must be sorted by the neighbors' global node ids; that order fixes
/// every reduction in the layer.
struct Neighborhoods {
  std::span<const int> offsets;
  std::span<const int> sources;

  int rows() const { return static_cast<int>(offsets.size()) - 1; }
  std::span<const int> of(int row) const {
    return sources.subspan(offsets[row], offsets[row + 1] - offsets[row]);
  }
};

template <typename Scalar>
Scalar elu(Scalar x) {
  return x > Scalar(0) ? x : std::expm1(x);
}

template <typename Scalar>
Scalar leaky_relu(Scalar x) {
  return x > Scalar(0) ? x : Scalar(kLeakySlope) * x;
}

/// z = W h with a fixed accumulation order, so projections of the same row agree
/// bit for bit wherever they are computed.
template <typename Scalar, typename Row>
void project_row(const Eigen::Map<const Matrix<Scalar>>& w, const Row& h, Scalar* z) {
  for (Eigen::Index o = 0; o < w.rows(); ++o) {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < w.cols(); ++i) acc += w(o, i) * h[i];
    z[o] = acc;
  }
}

template <typename Scalar, typename A, typename B>
Scalar ordered_dot(const A& a, const B& b, Eigen::Index n) {
  Scalar acc(0);
  for (Eigen::Index i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

/// Intermediates of one layer, kept for the backward pass.
template <typename Scalar>
struct LayerCache {
  Matrix<Scalar> input;
  std::vector<Matrix<Scalar>> z;        // per head: rows x channels
  std::vector<Vector<Scalar>> score;    // per head: pre-activation logit per CSR entry
  std::vector<Vector<Scalar>> alpha;    // per head: attention weight per CSR entry
  Matrix<Scalar> mean;                  // head-averaged aggregate before ELU
};

/// One multi-head attention layer.
///
/// For every row in `compute` and every head k:
///   e_ij = leaky_relu(a_src . z_i + a_dst . z_j),  z = W^k h,
///   alpha_ij = softmax over the in-neighborhood of i,
/// and out_i = ELU(mean_k sum_j alpha_ij z_j). Rows outside `compute` are left untouched.
template <typename Scalar>
void gat_layer_forward(const Matrix<Scalar>& input, const Neighborhoods& nbrs, std::span<const int> compute,
                       const ModelParams<Scalar>& params, int layer, Matrix<Scalar>& out,
                       LayerCache<Scalar>* cache = nullptr) {
  const auto& arch = params.arch();
  const int heads = arch.layers[layer].heads;
  const int channels = arch.layers[layer].channels;
  const Eigen::Index rows = input.rows();
  if (input.cols() != arch.layer_input(layer)) throw InputError("layer input has the wrong width");
  if (nbrs.rows() != rows) throw InputError("neighborhoods do not match feature rows");
  if (out.rows() != rows || out.cols() != channels) out = Matrix<Scalar>::Zero(rows, channels);

  std::vector<Matrix<Scalar>> z(heads, Matrix<Scalar>(rows, channels));
  std::vector<Vector<Scalar>> src(heads, Vector<Scalar>(rows));
  std::vector<Vector<Scalar>> dst(heads, Vector<Scalar>(rows));
  for (int k = 0; k < heads; ++k) {
    const auto w = params.weight(layer, k);
    const auto a_src = params.attn_src(layer, k);
    const auto a_dst = params.attn_dst(layer, k);
    for (Eigen::Index r = 0; r < rows; ++r) {
      Scalar* zr = z[k].row(r).data();
      project_row<Scalar>(w, input.row(r), zr);
      src[k][r] = ordered_dot<Scalar>(a_src, zr, channels);
      dst[k][r] = ordered_dot<Scalar>(a_dst, zr, channels);
    }
  }

  if (cache != nullptr) {
    cache->input = input;
    cache->score.assign(heads, Vector<Scalar>::Zero(static_cast<Eigen::Index>(nbrs.sources.size())));
    cache->alpha.assign(heads, Vector<Scalar>::Zero(static_cast<Eigen::Index>(nbrs.sources.size())));
    cache->mean = Matrix<Scalar>::Zero(rows, channels);
  }

  std::vector<Scalar> logits;
  Vector<Scalar> acc(channels);
  for (int i : compute) {
    const auto nb = nbrs.of(i);
    acc.setZero();
    for (int k = 0; k < heads; ++k) {
      logits.resize(nb.size());
      Scalar top = -std::numeric_limits<Scalar>::infinity();
      for (std::size_t e = 0; e < nb.size(); ++e) {
        const Scalar s = src[k][i] + dst[k][nb[e]];
        if (cache != nullptr) cache->score[k][nbrs.offsets[i] + static_cast<Eigen::Index>(e)] = s;
        logits[e] = leaky_relu(s);
        top = std::max(top, logits[e]);
      }
      Scalar total(0);
      for (auto& l : logits) {
        l = std::exp(l - top);
        total += l;
      }
      for (std::size_t e = 0; e < nb.size(); ++e) {
        const Scalar a = logits[e] / total;
        if (cache != nullptr) cache->alpha[k][nbrs.offsets[i] + static_cast<Eigen::Index>(e)] = a;
        const Scalar* zj = z[k].row(nb[e]).data();
        for (int c = 0; c < channels; ++c) acc[c] += a * zj[c];
      }
    }
    for (int c = 0; c < channels; ++c) {
      const Scalar m = acc[c] / Scalar(heads);
      if (cache != nullptr) cache->mean(i, c) = m;
      out(i, c) = elu(m);
    }
  }
  if (cache != nullptr) cache->z = std::move(z);
}

/// Gradients of a layer applied to every row. Accumulates into `grads` and returns
/// d(loss)/d(input).
template <typename Scalar>
Matrix<Scalar> gat_layer_backward(const LayerCache<Scalar>& cache, const Neighborhoods& nbrs,
                                  const ModelParams<Scalar>& params, int layer, const Matrix<Scalar>& d_out,
                                  ModelParams<Scalar>& grads) {
  const int heads = params.arch().layers[layer].heads;
  const Eigen::Index rows = cache.input.rows();
  const Scalar slope(kLeakySlope);

  Matrix<Scalar> d_mean = d_out;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < d_mean.cols(); ++c) {
      const Scalar m = cache.mean(r, c);
      d_mean(r, c) *= m > Scalar(0) ? Scalar(1) : std::exp(m);
    }
  d_mean /= Scalar(heads);

  Matrix<Scalar> d_input = Matrix<Scalar>::Zero(rows, cache.input.cols());
  for (int k = 0; k < heads; ++k) {
    const auto& z = cache.z[k];
    const auto a_src = params.attn_src(layer, k);
    const auto a_dst = params.attn_dst(layer, k);
    Matrix<Scalar> d_z = Matrix<Scalar>::Zero(rows, z.cols());
    Vector<Scalar> d_src = Vector<Scalar>::Zero(rows);
    Vector<Scalar> d_dst = Vector<Scalar>::Zero(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto nb = nbrs.of(static_cast<int>(i));
      const Eigen::Index base = nbrs.offsets[i];
      const auto n = static_cast<Eigen::Index>(nb.size());
      Vector<Scalar> d_alpha(n);
      Scalar weighted(0);
      for (Eigen::Index e = 0; e < n; ++e) {
        const Scalar a = cache.alpha[k][base + e];
        d_alpha[e] = d_mean.row(i).dot(z.row(nb[e]));
        d_z.row(nb[e]) += a * d_mean.row(i);
        weighted += a * d_alpha[e];
      }
      for (Eigen::Index e = 0; e < n; ++e) {
        const Scalar a = cache.alpha[k][base + e];
        const Scalar s = cache.score[k][base + e];
        const Scalar d_s = a * (d_alpha[e] - weighted) * (s > Scalar(0) ? Scalar(1) : slope);
        d_src[i] += d_s;
        d_dst[nb[e]] += d_s;
      }
    }
    grads.attn_src(layer, k) += z.transpose() * d_src;
    grads.attn_dst(layer, k) += z.transpose() * d_dst;
    d_z += d_src * a_src.transpose() + d_dst * a_dst.transpose();
    grads.weight(layer, k) += d_z.transpose() * cache.input;
    d_input += d_z * params.weight(layer, k);
  }
  return d_input;
}

}  // namespace dcop::nn
