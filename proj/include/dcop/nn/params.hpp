#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dcop/errors.hpp"

namespace dcop::nn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerShape {
  int heads = 1;
  int channels = 1;
  bool operator==(const LayerShape&) const = default;
};

/// Stack of multi-head attention layers followed by an affine readout on
/// [target embedding, pooled function embeddings].
struct Architecture {
  int input_dim = 4;
  std::vector<LayerShape> layers;

  /// Four layers: three with 8 heads of 8 channels, then 4 heads of 16 channels.
  static Architecture standard() { return {4, {{8, 8}, {8, 8}, {8, 8}, {4, 16}}}; }

  int num_layers() const { return static_cast<int>(layers.size()); }
  int layer_input(int l) const { return l == 0 ? input_dim : layers[l - 1].channels; }
  int output_dim() const { return layers.back().channels; }
  int readout_dim() const { return 2 * output_dim(); }
  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (int l = 0; l < num_layers(); ++l) {
      const auto& s = layers[l];
      total += static_cast<std::size_t>(s.heads) * (s.channels * layer_input(l) + 2 * s.channels);
    }
    return total + readout_dim() + 1;
  }
  bool operator==(const Architecture&) const = default;
};

/// All weights in one flat vector with typed views into it.
///
/// Flat order: for each layer, for each head: W (channels x input, row-major), then the
/// attention halves a_src and a_dst (channels each); finally the readout weights and bias.
/// The same type doubles as the gradient container.
template <typename Scalar>
class ModelParams {
 public:
  explicit ModelParams(Architecture arch = Architecture::standard()) : arch_(std::move(arch)) {
    if (arch_.layers.empty()) throw InputError("architecture needs at least one layer");
    std::size_t offset = 0;
    for (int l = 0; l < arch_.num_layers(); ++l) {
      const auto& s = arch_.layers[l];
      if (s.heads < 1 || s.channels < 1) throw InputError("layer shapes must be positive");
      for (int k = 0; k < s.heads; ++k) {
        heads_.push_back({offset, offset + static_cast<std::size_t>(s.channels) * arch_.layer_input(l),
                          offset + static_cast<std::size_t>(s.channels) * (arch_.layer_input(l) + 1)});
        offset = heads_.back().dst + s.channels;
      }
    }
    readout_ = offset;
    data_ = Vector<Scalar>::Zero(static_cast<Eigen::Index>(arch_.parameter_count()));
  }

  const Architecture& arch() const { return arch_; }
  Eigen::Index size() const { return data_.size(); }

  const Vector<Scalar>& flat() const { return data_; }
  Vector<Scalar>& flat() {
    ++generation_;
    return data_;
  }
  std::uint64_t generation() const { return generation_; }

  Eigen::Map<const Matrix<Scalar>> weight(int l, int k) const {
    return {data_.data() + head(l, k).w, arch_.layers[l].channels, arch_.layer_input(l)};
  }
  Eigen::Map<Matrix<Scalar>> weight(int l, int k) {
    ++generation_;
    return {data_.data() + head(l, k).w, arch_.layers[l].channels, arch_.layer_input(l)};
  }
  Eigen::Map<const Vector<Scalar>> attn_src(int l, int k) const {
    return {data_.data() + head(l, k).src, arch_.layers[l].channels};
  }
  Eigen::Map<Vector<Scalar>> attn_src(int l, int k) {
    ++generation_;
    return {data_.data() + head(l, k).src, arch_.layers[l].channels};
  }
  Eigen::Map<const Vector<Scalar>> attn_dst(int l, int k) const {
    return {data_.data() + head(l, k).dst, arch_.layers[l].channels};
  }
  Eigen::Map<Vector<Scalar>> attn_dst(int l, int k) {
    ++generation_;
    return {data_.data() + head(l, k).dst, arch_.layers[l].channels};
  }
  Eigen::Map<const Vector<Scalar>> readout_weight() const { return {data_.data() + readout_, arch_.readout_dim()}; }
  Eigen::Map<Vector<Scalar>> readout_weight() {
    ++generation_;
    return {data_.data() + readout_, arch_.readout_dim()};
  }
  Scalar readout_bias() const { return data_[readout_ + arch_.readout_dim()]; }
  Scalar& readout_bias() {
    ++generation_;
    return data_[readout_ + arch_.readout_dim()];
  }

  /// Flat index range [begin, end) of one parameter group, for per-group checks.
  struct Group {
    std::size_t begin;
    std::size_t end;
  };
  Group weight_group(int l, int k) const { return {head(l, k).w, head(l, k).src}; }
  Group attention_group(int l, int k) const { return {head(l, k).src, head(l, k).dst + arch_.layers[l].channels}; }
  Group readout_group() const { return {readout_, static_cast<std::size_t>(data_.size())}; }

  void set_zero() { flat().setZero(); }

  /// Glorot-uniform matrices and attention vectors, zero readout bias.
  void init_glorot(std::mt19937_64& rng) {
    auto fill = [&](Scalar* p, std::size_t count, double fan_in, double fan_out) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (std::size_t i = 0; i < count; ++i) p[i] = static_cast<Scalar>(limit * u(rng));
    };
    auto& d = flat();
    for (int l = 0; l < arch_.num_layers(); ++l) {
      const int in = arch_.layer_input(l);
      const int out = arch_.layers[l].channels;
      for (int k = 0; k < arch_.layers[l].heads; ++k) {
        fill(d.data() + head(l, k).w, static_cast<std::size_t>(out) * in, in, out);
        fill(d.data() + head(l, k).src, 2 * static_cast<std::size_t>(out), 2 * out, 1);
      }
    }
    fill(d.data() + readout_, arch_.readout_dim(), arch_.readout_dim(), 1);
    d[readout_ + arch_.readout_dim()] = Scalar(0);
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out(arch_);
    out.flat() = data_.template cast<Other>();
    return out;
  }

 private:
  struct HeadOffsets {
    std::size_t w;
    std::size_t src;
    std::size_t dst;
  };
  const HeadOffsets& head(int l, int k) const {
    std::size_t index = 0;
    for (int i = 0; i < l; ++i) index += arch_.layers[i].heads;
    return heads_[index + k];
  }

  Architecture arch_;
  std::vector<HeadOffsets> heads_;
  std::size_t readout_ = 0;
  Vector<Scalar> data_;
  std::uint64_t generation_ = 0;
};

}  // namespace dcop::nn
