#pragma once

#include <cstddef>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "edgealloc/dual_engine.hpp"
#include "edgealloc/model.hpp"

namespace edgealloc {

enum class ExchangePattern { all_to_all, hub };
const char* to_string(ExchangePattern p);
ExchangePattern parse_exchange_pattern(const std::string& s);

enum class MessageKind { contribution, lambda_broadcast, control };
const char* to_string(MessageKind k);

struct Message {
  std::size_t tick = 0;
  std::size_t group = 0;
  std::size_t sender = 0;  // node index
  std::size_t receiver = 0;
  MessageKind kind = MessageKind::contribution;
  double payload = 0.0;
};

/// Append-only message sink. Appends are safe from concurrent agents; reads
/// come back ordered by (tick, group, sender, receiver, kind).
class MessageLedger {
 public:
  void append(const Message& msg);
  void append(std::span<const Message> batch);

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::vector<Message> sorted() const;
  /// Message count per tick, index = tick (tick 0 unused).
  [[nodiscard]] std::vector<std::size_t> per_tick_counts() const;

  /// CSV with columns tick,group,sender,receiver,kind,payload (node ids, group names).
  void write_csv(std::ostream& out, const NetworkSpec& net) const;

 private:
  mutable std::mutex mutex_;
  std::vector<Message> messages_;
};

struct AuditReport {
  std::vector<std::string> violations;
  std::vector<std::size_t> violating_messages;  // positions in sorted order
  std::size_t expected_per_tick = 0;
  std::vector<std::size_t> per_tick_counts;
  std::vector<std::size_t> count_mismatch_ticks;
  std::vector<std::vector<std::size_t>> pair_counts;  // N x N, sender row, receiver column

  [[nodiscard]] bool ok() const { return violations.empty() && count_mismatch_ticks.empty(); }
};

/// Messages per tick implied by the group sizes: sum |m|(|m|-1) or sum 2(|m|-1).
std::size_t expected_messages_per_tick(const Instance& inst, ExchangePattern pattern);

/// Checks that every message travels inside its group between two members.
AuditReport audit_messages(const MessageLedger& ledger, const Instance& inst,
                           ExchangePattern pattern);

/// A simulated node. Holds only its own block x_i and the multipliers and
/// minimums of the groups it belongs to.
class NodeAgent {
 public:
  struct Membership {
    std::size_t group = 0;
    std::size_t task = 0;
    double weight = 0.0;
    double qos_min = 0.0;
    double lambda = 0.0;
    std::vector<GroupMember> roster;  // all members with weights, ascending node
    std::size_t hub = 0;             // lowest member index
  };

  NodeAgent(const Instance& inst, std::size_t node, std::span<const double> initial_lambda);

  [[nodiscard]] std::size_t node() const { return node_; }
  [[nodiscard]] const std::vector<Membership>& memberships() const { return memberships_; }
  [[nodiscard]] std::span<const double> policy() const { return x_; }
  [[nodiscard]] std::span<const double> average_policy() const { return x_avg_; }
  [[nodiscard]] double last_objective() const { return objective_; }
  /// Node indices whose policy blocks this agent holds (always just its own).
  [[nodiscard]] std::vector<std::size_t> known_policy_blocks() const { return {node_}; }

  /// Best response to the current local multipliers.
  void solve(const Instance& inst, const EngineOptions& options);
  /// Outgoing contribution messages for this tick.
  [[nodiscard]] std::vector<Message> contributions(std::size_t tick, ExchangePattern pattern) const;
  void receive(const Message& msg);
  /// Multiplier updates; returns lambda broadcasts (hub mode, hub only).
  std::vector<Message> update_multipliers(std::size_t tick, double alpha, ExchangePattern pattern);
  /// Applies broadcasts and folds x_i into the running average.
  void finish_round();

 private:
  std::size_t node_;
  std::vector<double> utility_;
  std::vector<Membership> memberships_;
  std::vector<double> x_;
  std::vector<double> x_sum_;
  std::vector<double> x_avg_;
  double objective_ = 0.0;
  std::size_t rounds_ = 0;
  // group -> (sender, payload) received this tick
  std::vector<std::vector<std::pair<std::size_t, double>>> inbox_;
  std::vector<std::optional<double>> broadcast_;
};

struct DistributedOptions {
  ExchangePattern pattern = ExchangePattern::all_to_all;
  std::size_t workers = 1;
};

/// Projected dual descent as synchronous message rounds among NodeAgents. The report is
/// bit-identical to run_until_converged with the same inputs.
SolveReport run_distributed(const Instance& inst, const StepPolicy& step,
                            const ConvergenceCriteria& criteria, MessageLedger& ledger,
                            const DistributedOptions& dist = {},
                            const EngineOptions& options = {},
                            std::optional<std::vector<double>> initial_lambda = {});

}  // namespace edgealloc
