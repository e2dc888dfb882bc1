#include "dcop/des.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "dcop/errors.hpp"
#include "dcop/nn/gat.hpp"
#include "dcop/nn/model.hpp"

namespace dcop::des {

const char* to_string(MessageKind kind) { return kind == MessageKind::Embedding ? "embedding" : "accum"; }

namespace {

template <typename Scalar>
class Agent {
 public:
  using Msg = Message<Scalar>;

  Agent(Var id, const TripartiteGraph& g, const DagOrientation& dag, const FeatureMatrix<Scalar>& features,
        const nn::ModelParams<Scalar>& params, DesResult<Scalar>* sink)
      : id_(id),
        target_(id == dag.target),
        precursors_(dag.precursors[id]),
        successors_(dag.successors[id]),
        params_(params),
        layers_(params.arch().num_layers()),
        others_(static_cast<int>(dag.variables.size()) - 1),
        sink_(sink) {
    std::sort(precursors_.begin(), precursors_.end());
    std::sort(successors_.begin(), successors_.end());
    // Local view: owned nodes plus the precursor-owned cost nodes pointing at us.
    for (int v = 0; v < g.num_nodes(); ++v) {
      const auto& n = g.nodes[v];
      const bool owned = n.owner == id;
      const bool inbound = n.kind == NodeKind::Cost && !n.unary && n.partner == id &&
                           std::binary_search(precursors_.begin(), precursors_.end(), n.owner);
      if (owned || inbound) global_.push_back(v);
    }
    std::map<int, int> local;
    for (int r = 0; r < static_cast<int>(global_.size()); ++r) local[global_[r]] = r;

    offsets_.push_back(0);
    for (int r = 0; r < static_cast<int>(global_.size()); ++r) {
      const int v = global_[r];
      const auto& n = g.nodes[v];
      if (n.owner == id) {
        owned_.push_back(r);
        for (int u : g.in_neighbors(v)) {
          const auto it = local.find(u);
          if (it == local.end()) throw InputError("agent " + std::to_string(id) + " lacks an input node of its slice");
          sources_.push_back(it->second);
        }
        if (n.kind == NodeKind::Function) functions_.push_back(r);
        if (n.kind == NodeKind::Cost && !n.unary) outbound_[n.partner].push_back(r);
        if (v == g.target_node) target_row_ = r;
      } else {
        inbound_[n.owner].push_back(r);
        sources_.push_back(r);
      }
      offsets_.push_back(static_cast<int>(sources_.size()));
    }
    if (target_ && target_row_ < 0) throw InputError("target agent does not own the target node");
    for (Var j : successors_) {
      if (!outbound_.count(j)) throw InputError("no cost nodes toward successor " + std::to_string(j));
    }
    for (Var j : precursors_) {
      if (!inbound_.count(j)) throw InputError("no cost nodes from precursor " + std::to_string(j));
    }
    h_.resize(static_cast<Eigen::Index>(global_.size()), features.cols());
    for (int r = 0; r < static_cast<int>(global_.size()); ++r) h_.row(r) = features.row(global_[r]);
  }

  std::vector<Msg> start() {
    std::vector<Msg> out;
    step();
    if (t_ < layers_) emit_embeddings(out);
    if (precursors_.empty()) {
      while (t_ < layers_) {
        step();
        if (t_ < layers_) emit_embeddings(out);
      }
    }
    if (t_ == layers_) finish(out);
    return out;
  }

  std::vector<Msg> receive(const Msg& m) {
    std::vector<Msg> out;
    if (!std::binary_search(precursors_.begin(), precursors_.end(), m.sender)) {
      throw ProtocolError("agent " + std::to_string(id_) + " got a message from non-precursor " +
                          std::to_string(m.sender));
    }
    auto& c = counters();
    c.bytes_received += m.payload_bytes();
    if (m.kind == MessageKind::Embedding) {
      if (m.timestep < 1 || m.timestep >= layers_) throw ProtocolError("embedding timestep out of range");
      const auto& rows = inbound_.at(m.sender);
      if (m.rows.rows() != static_cast<Eigen::Index>(rows.size())) throw ProtocolError("embedding row count mismatch");
      if (!seen_.emplace(m.timestep, m.sender).second) {
        throw ProtocolError("duplicate embedding from " + std::to_string(m.sender) + " at t=" +
                            std::to_string(m.timestep));
      }
      cache_[m.timestep].emplace(m.sender, m.rows);
      ++c.embeddings_received;
      ++c.received_from[m.sender];
      while (t_ < layers_) {
        auto it = cache_.find(t_);
        if (it == cache_.end() || it->second.size() != precursors_.size()) break;
        for (const auto& [sender, block] : it->second) {
          const auto& dst = inbound_.at(sender);
          if (block.cols() != h_.cols()) throw ProtocolError("embedding width mismatch");
          for (std::size_t k = 0; k < dst.size(); ++k) h_.row(dst[k]) = block.row(static_cast<Eigen::Index>(k));
        }
        cache_.erase(it);
        step();
        if (t_ < layers_) {
          emit_embeddings(out);
        } else {
          finish(out);
        }
      }
    } else {
      if (target_) {
        absorb(m.origin, m.rows);
      } else {
        Msg fwd = m;
        fwd.sender = id_;
        fwd.receiver = successors_.front();
        ++c.accum_forwarded;
        c.bytes_sent += fwd.payload_bytes();
        out.push_back(std::move(fwd));
      }
    }
    return out;
  }

  bool done() const { return done_; }
  Scalar prediction() const { return prediction_; }

 private:
  AgentCounters& counters() { return sink_->counters[id_]; }

  void step() {
    nn::Matrix<Scalar> next;
    const nn::Neighborhoods nbrs{offsets_, sources_};
    nn::gat_layer_forward<Scalar>(h_, nbrs, owned_, params_, t_, next);
    h_ = std::move(next);
    ++t_;
    ++counters().inference_steps;
    if (!sink_->embeddings.empty()) {
      auto& full = sink_->embeddings[t_ - 1];
      for (int r : owned_) full.row(global_[r]) = h_.row(r);
    }
  }

  void emit_embeddings(std::vector<Msg>& out) {
    for (Var j : successors_) {
      const auto& rows = outbound_.at(j);
      Msg m;
      m.kind = MessageKind::Embedding;
      m.sender = id_;
      m.receiver = j;
      m.timestep = t_;
      m.rows.resize(static_cast<Eigen::Index>(rows.size()), h_.cols());
      for (std::size_t k = 0; k < rows.size(); ++k) m.rows.row(static_cast<Eigen::Index>(k)) = h_.row(rows[k]);
      auto& c = counters();
      ++c.embeddings_sent;
      c.bytes_sent += m.payload_bytes();
      out.push_back(std::move(m));
    }
  }

  void finish(std::vector<Msg>& out) {
    nn::Vector<Scalar> ell = nn::Vector<Scalar>::Zero(h_.cols());
    for (int r : functions_) nn::accumulate<Scalar>(ell, h_.row(r).data());
    ++counters().accum_emitted;
    if (target_) {
      own_done_ = true;
      absorb(id_, ell.transpose());
      return;
    }
    Msg m;
    m.kind = MessageKind::Accum;
    m.sender = id_;
    m.receiver = successors_.front();
    m.origin = id_;
    m.rows = ell.transpose();
    counters().bytes_sent += m.payload_bytes();
    out.push_back(std::move(m));
    done_ = true;
  }

  void absorb(Var origin, const nn::Matrix<Scalar>& row) {
    if (!accumulated_.emplace(origin, row).second) {
      throw ProtocolError("duplicate accumulation from " + std::to_string(origin));
    }
    if (origin != id_) ++counters().accum_absorbed;
    if (static_cast<int>(accumulated_.size()) > others_ + 1) throw ProtocolError("more accumulations than agents");
    if (own_done_ && static_cast<int>(accumulated_.size()) == others_ + 1) {
      nn::Vector<Scalar> pooled = nn::Vector<Scalar>::Zero(h_.cols());
      for (const auto& [who, r] : accumulated_) nn::accumulate<Scalar>(pooled, r.data());
      prediction_ = nn::readout<Scalar>(params_, h_.row(target_row_).data(), pooled);
      done_ = true;
    }
  }

  Var id_;
  bool target_;
  std::vector<Var> precursors_;
  std::vector<Var> successors_;
  const nn::ModelParams<Scalar>& params_;
  int layers_;
  int others_;
  DesResult<Scalar>* sink_;

  std::vector<int> global_;  // local row -> graph node, ascending
  std::vector<int> owned_;
  std::vector<int> functions_;
  std::vector<int> offsets_;
  std::vector<int> sources_;
  std::map<Var, std::vector<int>> outbound_;
  std::map<Var, std::vector<int>> inbound_;
  int target_row_ = -1;

  nn::Matrix<Scalar> h_;
  int t_ = 0;  // layers computed so far
  std::map<int, std::map<Var, nn::Matrix<Scalar>>> cache_;
  std::set<std::pair<int, Var>> seen_;
  std::map<Var, nn::Matrix<Scalar>> accumulated_;
  bool own_done_ = false;
  bool done_ = false;
  Scalar prediction_{};
};

template <typename Scalar>
class Transport {
 public:
  explicit Transport(const TransportConfig& config) : config_(config), rng_(config.seed) {}

  void send(Message<Scalar> m) {
    std::uint64_t at = now_;
    if (config_.mode == TransportMode::RandomDelay) {
      at += std::uniform_int_distribution<std::uint64_t>(1, static_cast<std::uint64_t>(std::max(1, config_.max_delay)))(rng_);
    }
    queue_.push({at, seq_++, std::move(m)});
  }

  bool empty() const { return queue_.empty(); }

  Message<Scalar> next() {
    auto top = queue_.top();
    queue_.pop();
    now_ = top.at;
    return std::move(top.msg);
  }

 private:
  struct Pending {
    std::uint64_t at;
    std::uint64_t seq;
    Message<Scalar> msg;
    bool operator>(const Pending& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  TransportConfig config_;
  std::mt19937_64 rng_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
};

}  // namespace

template <typename Scalar>
DesResult<Scalar> run_des(const TripartiteGraph& g, const DagOrientation& dag, const nn::ModelParams<Scalar>& params,
                          const TransportConfig& config, bool normalize_costs) {
  if (g.target_node < 0) throw InputError("graph has no target node");
  if (!dag.contains(dag.target) || g.nodes[g.target_node].var != dag.target) {
    throw InputError("orientation does not match the graph's target");
  }
  if (params.arch().input_dim != 4) throw InputError("model expects another feature width");
  DesResult<Scalar> result;
  const int layers = params.arch().num_layers();
  if (config.record_embeddings) {
    for (int l = 0; l < layers; ++l) {
      result.embeddings.push_back(nn::Matrix<Scalar>::Zero(g.num_nodes(), params.arch().layers[l].channels));
    }
  }
  const auto features = initial_features<Scalar>(g, normalize_costs);
  for (const auto& n : g.nodes) {
    if (!dag.contains(n.owner)) throw InputError("graph node owned by an agent outside the orientation");
  }
  std::map<Var, Agent<Scalar>> agents;
  for (Var v : dag.variables) {
    result.counters[v];
    agents.try_emplace(v, v, g, dag, features, params, &result);
  }

  Transport<Scalar> transport(config);
  for (auto& [v, a] : agents) {
    for (auto& m : a.start()) transport.send(std::move(m));
  }
  std::size_t sent = 0;
  while (!transport.empty()) {
    if (sent >= config.max_messages) throw LivenessError("message budget exhausted before quiescence");
    auto m = transport.next();
    const std::size_t index = sent++;
    if (config.drop_message && *config.drop_message == index) continue;
    if (config.duplicate_message && *config.duplicate_message == index) transport.send(m);
    if (config.redirect_message && config.redirect_message->first == index) m.receiver = config.redirect_message->second;
    result.trace.push_back({index, m.sender, m.receiver, m.kind, m.timestep, m.origin, m.payload_bytes()});
    auto it = agents.find(m.receiver);
    if (it == agents.end()) throw ProtocolError("message to unknown agent " + std::to_string(m.receiver));
    for (auto& out : it->second.receive(m)) transport.send(std::move(out));
    if (config.record_payloads) result.payloads.push_back(std::move(m));
  }
  const auto& target = agents.at(dag.target);
  if (!target.done()) throw LivenessError("run reached quiescence without a prediction");
  result.prediction = target.prediction();
  return result;
}

template <typename Scalar>
DesResult<Scalar> run_des(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                          Var target, Value value, const nn::ModelParams<Scalar>& params,
                          const TransportConfig& config, bool normalize_costs) {
  const auto dag = orient_dag(p, scope, target);
  const auto g = compile(p, scope, gamma, target, value, dag);
  return run_des<Scalar>(g, dag, params, config, normalize_costs);
}

std::size_t embedding_payload_bytes(const TripartiteGraph& g, const DagOrientation& dag,
                                    const nn::Architecture& arch, Var i, std::size_t scalar_size) {
  std::size_t cost_rows = 0;
  for (const auto& n : g.nodes) {
    if (n.owner == i && n.kind == NodeKind::Cost && !n.unary) ++cost_rows;
  }
  std::size_t bytes = 0;
  for (int t = 1; t < arch.num_layers(); ++t) {
    bytes += cost_rows * static_cast<std::size_t>(arch.layers[t - 1].channels) * scalar_size;
  }
  if (i == dag.target) return bytes;
  std::size_t hops = 1;  // own accumulation
  for (Var a : dag.variables) {
    if (a == i || a == dag.target) continue;
    for (Var v = a; v != dag.target;) {
      v = *std::min_element(dag.successors[v].begin(), dag.successors[v].end());
      if (v == i) ++hops;
    }
  }
  return bytes + hops * static_cast<std::size_t>(arch.output_dim()) * scalar_size;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "step,sender,receiver,kind,timestep,payload_bytes\n";
  for (const auto& r : trace) {
    out << r.step << ',' << r.sender << ',' << r.receiver << ',' << to_string(r.kind) << ',' << r.timestep << ','
        << r.payload_bytes << '\n';
  }
  return out.str();
}

template DesResult<double> run_des(const TripartiteGraph&, const DagOrientation&, const nn::ModelParams<double>&,
                                   const TransportConfig&, bool);
template DesResult<float> run_des(const TripartiteGraph&, const DagOrientation&, const nn::ModelParams<float>&,
                                  const TransportConfig&, bool);
template DesResult<double> run_des(const ProblemInstance&, const std::vector<Var>&, const PartialAssignment&, Var, Value,
                                   const nn::ModelParams<double>&, const TransportConfig&, bool);
template DesResult<float> run_des(const ProblemInstance&, const std::vector<Var>&, const PartialAssignment&, Var, Value,
                                  const nn::ModelParams<float>&, const TransportConfig&, bool);

}  // namespace dcop::des
