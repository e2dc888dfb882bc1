#pragma once

#include <memory>

#include "dcop/des.hpp"
#include "dcop/exact.hpp"
#include "dcop/instance.hpp"
#include "dcop/nn/params.hpp"

namespace dcop {

/// Predicted optimal cost of the free component containing `target` once it takes
/// `value`, given the assigned variables of `partial` (kUnassigned marks free ones).
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual double predict(const ProblemInstance& p, const Assignment& partial, Var target, Value value) = 0;
  std::size_t queries() const { return queries_; }

 protected:
  std::size_t queries_ = 0;
};

/// Exact completion cost by DPOP on the query's component.
class OracleModel : public CostModel {
 public:
  explicit OracleModel(ExactLimits limits = {}) : limits_(limits) {}
  double predict(const ProblemInstance& p, const Assignment& partial, Var target, Value value) override;

 private:
  ExactLimits limits_;
};

enum class InferenceMode { Centralized, Distributed };

/// The attention model, evaluated centrally or through the distributed schema.
/// Predictions are `output_scale` times the network output.
class NeuralModel : public CostModel {
 public:
  NeuralModel(nn::ModelParams<double> params, bool normalize_costs, double output_scale = 1,
              InferenceMode mode = InferenceMode::Centralized, des::TransportConfig transport = {});
  double predict(const ProblemInstance& p, const Assignment& partial, Var target, Value value) override;

  const nn::ModelParams<double>& params() const { return params_; }
  InferenceMode mode() const { return mode_; }
  std::size_t messages() const { return messages_; }

 private:
  nn::ModelParams<double> params_;
  bool normalize_costs_;
  double output_scale_;
  InferenceMode mode_;
  des::TransportConfig transport_;
  std::size_t messages_ = 0;
};

}  // namespace dcop
