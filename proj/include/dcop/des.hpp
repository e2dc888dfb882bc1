#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcop/instance.hpp"
#include "dcop/nn/params.hpp"
#include "dcop/pseudo_tree.hpp"
#include "dcop/tripartite.hpp"

namespace dcop::des {

enum class MessageKind : std::uint8_t { Embedding, Accum };
const char* to_string(MessageKind kind);

/// Embedding messages carry the sender's cost-node rows toward the receiver for one
/// layer; accumulation messages carry an agent's summed function-node rows, tagged with
/// the agent that produced them.
template <typename Scalar>
struct Message {
  MessageKind kind = MessageKind::Embedding;
  Var sender = -1;
  Var receiver = -1;
  int timestep = 0;  // embedding only, 1..T-1
  Var origin = -1;   // accumulation only
  nn::Matrix<Scalar> rows;

  std::size_t payload_bytes() const { return static_cast<std::size_t>(rows.size()) * sizeof(Scalar); }
};

enum class TransportMode { Fifo, RandomDelay };

struct TransportConfig {
  TransportMode mode = TransportMode::Fifo;
  std::uint64_t seed = 0;
  int max_delay = 8;                     // random-delay: delivery after 1..max_delay ticks
  std::size_t max_messages = 1'000'000;  // budget before declaring non-quiescence
  // Fault injection, by delivery index: never deliver, deliver twice, or deliver to
  // another agent than the addressed one.
  std::optional<std::size_t> drop_message;
  std::optional<std::size_t> duplicate_message;
  std::optional<std::pair<std::size_t, Var>> redirect_message;
  bool record_payloads = false;
  bool record_embeddings = false;
};

struct TraceRow {
  std::size_t step = 0;
  Var sender = -1;
  Var receiver = -1;
  MessageKind kind = MessageKind::Embedding;
  int timestep = 0;
  Var origin = -1;
  std::size_t payload_bytes = 0;
};

struct AgentCounters {
  int inference_steps = 0;
  std::size_t embeddings_sent = 0;
  std::size_t embeddings_received = 0;
  std::map<Var, int> received_from;  // embedding messages per precursor
  std::size_t accum_emitted = 0;     // own accumulations
  std::size_t accum_forwarded = 0;
  std::size_t accum_absorbed = 0;    // target only
  std::size_t bytes_sent = 0;
  std::size_t bytes_received = 0;
};

template <typename Scalar>
struct DesResult {
  Scalar prediction{};
  std::vector<TraceRow> trace;
  std::map<Var, AgentCounters> counters;
  std::vector<Message<Scalar>> payloads;       // delivered messages, when recorded
  std::vector<nn::Matrix<Scalar>> embeddings;  // H^(1..T) assembled from owners' rows, when recorded
};

/// Runs the distributed embedding schema for a compiled query. Each agent is built from
/// its own slice of `g`: owned nodes plus the precursor-owned cost nodes that feed it.
/// Throws LivenessError if the run does not complete within the message budget or
/// stalls, and ProtocolError on duplicate or misrouted messages.
template <typename Scalar>
DesResult<Scalar> run_des(const TripartiteGraph& g, const DagOrientation& dag, const nn::ModelParams<Scalar>& params,
                          const TransportConfig& config = {}, bool normalize_costs = false);

/// Compiles (scope, gamma, target) and runs the schema on it.
template <typename Scalar>
DesResult<Scalar> run_des(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                          Var target, Value value, const nn::ModelParams<Scalar>& params,
                          const TransportConfig& config = {}, bool normalize_costs = false);

/// Bytes agent `i` sends: per layer 1..T-1 and successor j, (cost nodes on i->j) x
/// channels(t) scalars, plus one accumulation vector of its own and one per forwarded
/// accumulation.
std::size_t embedding_payload_bytes(const TripartiteGraph& g, const DagOrientation& dag,
                                    const nn::Architecture& arch, Var i, std::size_t scalar_size);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace dcop::des
