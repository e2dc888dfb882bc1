#pragma once

#include <cmath>

#include "dcop/nn/params.hpp"

namespace dcop::nn {

template <typename Scalar>
struct AdamState {
  double learning_rate = 1e-4;
  double weight_decay = 5e-5;  // L2 coefficient added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  Vector<Scalar> first;
  Vector<Scalar> second;
};

/// One Adam update of `theta` in place. Moments are created on first use.
template <typename Scalar>
void adam_update(Eigen::Ref<Vector<Scalar>> theta, const Eigen::Ref<const Vector<Scalar>>& grad,
                 AdamState<Scalar>& state) {
  if (grad.size() != theta.size()) throw InputError("gradient shape does not match parameters");
  if (state.first.size() == 0) {
    state.first = Vector<Scalar>::Zero(theta.size());
    state.second = Vector<Scalar>::Zero(theta.size());
  }
  if (state.first.size() != theta.size() || state.second.size() != theta.size()) {
    throw InputError("optimizer moments do not match parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double g = static_cast<double>(grad[i]) + state.weight_decay * static_cast<double>(theta[i]);
    const double m = state.beta1 * static_cast<double>(state.first[i]) + (1.0 - state.beta1) * g;
    const double v = state.beta2 * static_cast<double>(state.second[i]) + (1.0 - state.beta2) * g * g;
    state.first[i] = static_cast<Scalar>(m);
    state.second[i] = static_cast<Scalar>(v);
    theta[i] -= static_cast<Scalar>(state.learning_rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon));
  }
}

template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads, AdamState<Scalar>& state) {
  if (!(params.arch() == grads.arch())) throw InputError("gradient architecture does not match parameters");
  adam_update<Scalar>(params.flat(), grads.flat(), state);
}

}  // namespace dcop::nn
