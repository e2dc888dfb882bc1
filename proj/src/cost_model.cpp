#include "dcop/cost_model.hpp"

#include "dcop/errors.hpp"
#include "dcop/nn/model.hpp"
#include "dcop/tripartite.hpp"

namespace dcop {

namespace {

void check_query(const ProblemInstance& p, const Assignment& partial, Var target, Value value) {
  if (static_cast<int>(partial.size()) != p.num_agents()) throw InputError("partial assignment has the wrong length");
  if (!p.contains(target)) throw InputError("query target out of range");
  if (partial[target] != kUnassigned) throw InputError("query target is already assigned");
  if (value < 0 || value >= p.domain_size(target)) throw InputError("query value out of range");
}

}  // namespace

double OracleModel::predict(const ProblemInstance& p, const Assignment& partial, Var target, Value value) {
  check_query(p, partial, target, value);
  ++queries_;
  const auto q = query_scope(p, partial, target);
  const auto sp = make_subproblem(p, q.scope, partial, {{target, value}});
  return static_cast<double>(dpop(sp, limits_).cost);
}

NeuralModel::NeuralModel(nn::ModelParams<double> params, bool normalize_costs, double output_scale, InferenceMode mode,
                         des::TransportConfig transport)
    : params_(std::move(params)),
      normalize_costs_(normalize_costs),
      output_scale_(output_scale),
      mode_(mode),
      transport_(transport) {
  if (params_.arch().input_dim != 4) throw InputError("model expects another feature width");
}

double NeuralModel::predict(const ProblemInstance& p, const Assignment& partial, Var target, Value value) {
  check_query(p, partial, target, value);
  ++queries_;
  const auto q = query_scope(p, partial, target);
  const auto dag = orient_dag(p, q.scope, target);
  const auto g = compile(p, q.scope, q.gamma, target, value, dag);
  if (mode_ == InferenceMode::Centralized) {
    return output_scale_ * nn::model_forward<double>(g, params_, normalize_costs_);
  }
  const auto r = des::run_des<double>(g, dag, params_, transport_, normalize_costs_);
  messages_ += r.trace.size();
  return output_scale_ * r.prediction;
}

}  // namespace dcop
