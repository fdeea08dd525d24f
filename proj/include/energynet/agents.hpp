#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "energynet/flow.hpp"
#include "energynet/generation.hpp"
#include "energynet/joint.hpp"

/// Message-passing execution: every node is an agent that sees only its own
/// data and the values its neighbors sent in the previous round. Rounds are
/// synchronous (double-buffered with a barrier) and each applies one forward
/// Euler step, so the outcome does not depend on the order agents run in.
namespace energynet::message {

enum class Schedule { Natural, Reversed, Shuffled };

struct Message {
  int from = 0;
  double value = 0.0;
  double weight = 0.0;  ///< link weight, known to both endpoints
};

/// Local rate of agent `id` given its own value and its inbox (sorted by sender).
using LocalRate = std::function<double(int id, double own, std::span<const Message> inbox)>;

struct RoundOptions {
  double tol = 1e-9;     ///< stop when every agent's |rate| <= tol
  double t_max = 1e4;    ///< rounds are capped at t_max / dt
  std::optional<long> max_rounds;
  Schedule schedule = Schedule::Natural;
  std::uint64_t seed = 0;  ///< permutation seed for Schedule::Shuffled
  int trace_stride = 10;
  bool record_trace = false;
};

class AgentNetwork {
 public:
  /// `weights` are per canonical edge; an empty span means unit weights.
  AgentNetwork(const Graph& graph, std::span<const double> weights, Schedule schedule, std::uint64_t seed);

  int size() const { return static_cast<int>(links_.size()); }

  /// One synchronous round: every agent publishes, barrier, every agent reads
  /// its inbox and steps. Returns the rates used; `state` is replaced.
  Vector round(Vector& state, const LocalRate& rate, double dt) const;

  /// Rounds until max |rate| <= tol or the time budget runs out.
  ConsensusRun run(const Vector& x0, const LocalRate& rate, double dt, const RoundOptions& options) const;

  const std::vector<int>& order() const { return order_; }

 private:
  std::vector<std::vector<std::pair<int, double>>> links_;  ///< neighbor, weight; sorted by neighbor
  std::vector<int> order_;
};

/// Euler step used by message mode: 1 / rho for spectral-radius bound rho.
double euler_step(double rate_bound);

struct MessageOptions {
  ConsensusOptions consensus;  ///< tol and t_max are honored; dt and max_steps are not
  Schedule schedule = Schedule::Natural;
  std::uint64_t seed = 0;
  double balance_tol = 1e-6;
};

GenerationResult coordinate_generation(const EnergyNetwork& network, const Vector& p_d,
                                       const MessageOptions& options = {});

FlowResult coordinate_flow(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                           const MessageOptions& options = {});

JointResult coordinate_joint_twoscale(const EnergyNetwork& network, const Vector& p_d,
                                      const TwoScaleOptions& twoscale, const MessageOptions& options = {});

JointResult coordinate_joint_recursive(const EnergyNetwork& network, const Vector& p_d,
                                       const RecursiveOptions& recursive, const MessageOptions& options = {});

}  // namespace energynet::message
