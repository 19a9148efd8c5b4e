#include "edgealloc/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "edgealloc/report.hpp"

namespace edgealloc {

const char* to_string(ExchangePattern p) {
  return p == ExchangePattern::hub ? "hub" : "all-to-all";
}

ExchangePattern parse_exchange_pattern(const std::string& s) {
  if (s == "all-to-all") return ExchangePattern::all_to_all;
  if (s == "hub") return ExchangePattern::hub;
  throw ParameterError("unknown exchange pattern '" + s + "' (expected all-to-all or hub)");
}

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::contribution: return "contribution";
    case MessageKind::lambda_broadcast: return "lambda_broadcast";
    case MessageKind::control: return "control";
  }
  return "unknown";
}

void MessageLedger::append(const Message& msg) {
  std::lock_guard lock(mutex_);
  messages_.push_back(msg);
}

void MessageLedger::append(std::span<const Message> batch) {
  std::lock_guard lock(mutex_);
  messages_.insert(messages_.end(), batch.begin(), batch.end());
}

std::size_t MessageLedger::size() const {
  std::lock_guard lock(mutex_);
  return messages_.size();
}

std::vector<Message> MessageLedger::sorted() const {
  std::vector<Message> copy;
  {
    std::lock_guard lock(mutex_);
    copy = messages_;
  }
  std::stable_sort(copy.begin(), copy.end(), [](const Message& a, const Message& b) {
    return std::tie(a.tick, a.group, a.sender, a.receiver, a.kind) <
           std::tie(b.tick, b.group, b.sender, b.receiver, b.kind);
  });
  return copy;
}

std::vector<std::size_t> MessageLedger::per_tick_counts() const {
  std::lock_guard lock(mutex_);
  std::vector<std::size_t> counts;
  for (const auto& m : messages_) {
    if (m.tick >= counts.size()) counts.resize(m.tick + 1, 0);
    ++counts[m.tick];
  }
  return counts;
}

void MessageLedger::write_csv(std::ostream& out, const NetworkSpec& net) const {
  out << "tick,group,sender,receiver,kind,payload\n";
  for (const auto& m : sorted()) {
    const std::string group = m.group < net.group_count() && !net.groups[m.group].name.empty()
                                  ? net.groups[m.group].name
                                  : std::to_string(m.group);
    auto node_id = [&](std::size_t i) {
      return i < net.node_count() ? std::to_string(net.nodes[i].id) : std::to_string(i);
    };
    out << m.tick << ',' << group << ',' << node_id(m.sender) << ',' << node_id(m.receiver) << ','
        << to_string(m.kind) << ',' << format_number(m.payload) << '\n';
  }
}

std::size_t expected_messages_per_tick(const Instance& inst, ExchangePattern pattern) {
  std::size_t total = 0;
  for (const auto& members : inst.constraints.members) {
    const std::size_t size = members.size();
    if (size == 0) continue;
    total += pattern == ExchangePattern::all_to_all ? size * (size - 1) : 2 * (size - 1);
  }
  return total;
}

AuditReport audit_messages(const MessageLedger& ledger, const Instance& inst,
                           ExchangePattern pattern) {
  const auto& sys = inst.constraints;
  const std::size_t n = inst.network.node_count();
  AuditReport report;
  report.expected_per_tick = expected_messages_per_tick(inst, pattern);
  report.pair_counts.assign(n, std::vector<std::size_t>(n, 0));

  auto weight = [&](std::size_t m, std::size_t node) {
    for (const auto& member : sys.members[m]) {
      if (member.node == node) return member.weight;
    }
    return 0.0;
  };

  const auto messages = ledger.sorted();
  std::size_t max_tick = 0;
  for (std::size_t k = 0; k < messages.size(); ++k) {
    const auto& msg = messages[k];
    max_tick = std::max(max_tick, msg.tick);
    std::string problem;
    if (msg.group >= sys.groups()) {
      problem = "unknown group";
    } else if (msg.sender >= n || msg.receiver >= n) {
      problem = "unknown node";
    } else if (msg.sender == msg.receiver) {
      problem = "sender equals receiver";
    } else if (!std::isfinite(msg.payload)) {
      problem = "non-finite payload";
    } else if (!(weight(msg.group, msg.sender) > 0.0) || !(weight(msg.group, msg.receiver) > 0.0)) {
      problem = "endpoints do not both belong to the group";
    }
    if (msg.sender < n && msg.receiver < n) ++report.pair_counts[msg.sender][msg.receiver];
    if (!problem.empty()) {
      report.violating_messages.push_back(k);
      report.violations.push_back("tick " + std::to_string(msg.tick) + " group " +
                                  std::to_string(msg.group) + " " + std::to_string(msg.sender) +
                                  "->" + std::to_string(msg.receiver) + ": " + problem);
    }
  }
  report.per_tick_counts.assign(max_tick + 1, 0);
  for (const auto& msg : messages) ++report.per_tick_counts[msg.tick];
  for (std::size_t tick = 1; tick <= max_tick; ++tick) {
    if (report.per_tick_counts[tick] != report.expected_per_tick) {
      report.count_mismatch_ticks.push_back(tick);
    }
  }
  return report;
}

NodeAgent::NodeAgent(const Instance& inst, std::size_t node, std::span<const double> initial_lambda)
    : node_(node), utility_(inst.network.nodes[node].utility_coeffs) {
  const auto& sys = inst.constraints;
  const std::size_t tasks = inst.network.task_count();
  for (std::size_t m = 0; m < sys.groups(); ++m) {
    for (const auto& member : sys.members[m]) {
      if (member.node != node) continue;
      Membership ms;
      ms.group = m;
      ms.task = sys.group_task[m];
      ms.weight = member.weight;
      ms.qos_min = sys.rhs[m];
      ms.lambda = initial_lambda[m];
      ms.roster = sys.members[m];
      ms.hub = sys.members[m].front().node;
      memberships_.push_back(std::move(ms));
      break;
    }
  }
  x_.assign(tasks, 0.0);
  x_sum_.assign(tasks, 0.0);
  x_avg_.assign(tasks, 0.0);
  inbox_.resize(memberships_.size());
  broadcast_.resize(memberships_.size());
}

void NodeAgent::solve(const Instance& inst, const EngineOptions& options) {
  std::vector<double> price = utility_;
  for (const auto& ms : memberships_) price[ms.task] += ms.lambda * ms.weight;
  auto sol = node_best_response(inst, node_, price, options);
  x_ = std::move(sol.x);
  objective_ = sol.objective_value;
}

std::vector<Message> NodeAgent::contributions(std::size_t tick, ExchangePattern pattern) const {
  std::vector<Message> out;
  for (const auto& ms : memberships_) {
    const double payload = ms.weight * x_[ms.task];
    if (pattern == ExchangePattern::hub) {
      if (ms.hub != node_) {
        out.push_back({tick, ms.group, node_, ms.hub, MessageKind::contribution, payload});
      }
      continue;
    }
    for (const auto& peer : ms.roster) {
      if (peer.node == node_) continue;
      out.push_back({tick, ms.group, node_, peer.node, MessageKind::contribution, payload});
    }
  }
  return out;
}

void NodeAgent::receive(const Message& msg) {
  for (std::size_t k = 0; k < memberships_.size(); ++k) {
    if (memberships_[k].group != msg.group) continue;
    if (msg.kind == MessageKind::lambda_broadcast) {
      broadcast_[k] = msg.payload;
    } else {
      inbox_[k].emplace_back(msg.sender, msg.payload);
    }
    return;
  }
  throw std::logic_error("message delivered to a node outside its group");
}

std::vector<Message> NodeAgent::update_multipliers(std::size_t tick, double alpha,
                                                   ExchangePattern pattern) {
  std::vector<Message> out;
  for (std::size_t k = 0; k < memberships_.size(); ++k) {
    auto& ms = memberships_[k];
    if (pattern == ExchangePattern::hub && ms.hub != node_) continue;
    double total = 0.0;
    for (const auto& member : ms.roster) {
      if (member.node == node_) {
        total += ms.weight * x_[ms.task];
        continue;
      }
      auto it = std::find_if(inbox_[k].begin(), inbox_[k].end(),
                             [&](const auto& entry) { return entry.first == member.node; });
      if (it == inbox_[k].end()) throw std::logic_error("missing contribution from a group member");
      total += it->second;
    }
    ms.lambda = project_multiplier(ms.lambda, alpha, total, ms.qos_min);
    if (pattern == ExchangePattern::hub) {
      for (const auto& member : ms.roster) {
        if (member.node == node_) continue;
        out.push_back({tick, ms.group, node_, member.node, MessageKind::lambda_broadcast, ms.lambda});
      }
    }
  }
  return out;
}

void NodeAgent::finish_round() {
  for (std::size_t k = 0; k < memberships_.size(); ++k) {
    if (broadcast_[k]) memberships_[k].lambda = *broadcast_[k];
    broadcast_[k].reset();
    inbox_[k].clear();
  }
  ++rounds_;
  const double k = static_cast<double>(rounds_);
  for (std::size_t t = 0; t < x_.size(); ++t) {
    x_sum_[t] += x_[t];
    x_avg_[t] = x_sum_[t] / k;
  }
}

namespace {

template <class Fn>
void for_each_agent(std::vector<NodeAgent>& agents, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || agents.size() <= 1) {
    for (auto& a : agents) fn(a);
    return;
  }
  const std::size_t count = std::min(workers, agents.size());
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < agents.size(); i += count) fn(agents[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

SolveReport run_distributed(const Instance& inst, const StepPolicy& step,
                            const ConvergenceCriteria& criteria, MessageLedger& ledger,
                            const DistributedOptions& dist, const EngineOptions& options,
                            std::optional<std::vector<double>> initial_lambda) {
  const auto started = std::chrono::steady_clock::now();
  if (!(step.alpha0 > 0.0)) throw ParameterError("step size alpha0 must be > 0");
  const auto& sys = inst.constraints;
  const std::size_t n = inst.network.node_count();

  // The driver only observes: it mirrors the agents' state to decide when to
  // stop and never feeds anything back into the rounds.
  DualState observed = DualState::start(inst, std::move(initial_lambda));
  ConvergenceMonitor monitor(inst, criteria, options, observed);

  std::vector<NodeAgent> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) agents.emplace_back(inst, i, observed.lambda);

  do {
    const std::size_t tick = observed.iteration + 1;
    const double alpha = step.at(tick);

    for_each_agent(agents, dist.workers, [&](NodeAgent& a) { a.solve(inst, options); });

    for (auto& agent : agents) {
      const auto outgoing = agent.contributions(tick, dist.pattern);
      ledger.append(outgoing);
      for (const auto& msg : outgoing) agents[msg.receiver].receive(msg);
    }
    std::vector<std::vector<Message>> broadcasts(n);
    for_each_agent(agents, dist.workers, [&](NodeAgent& a) {
      broadcasts[a.node()] = a.update_multipliers(tick, alpha, dist.pattern);
    });
    for (const auto& batch : broadcasts) {
      ledger.append(batch);
      for (const auto& msg : batch) agents[msg.receiver].receive(msg);
    }
    for (auto& agent : agents) agent.finish_round();

    AllocationPolicy x_next(n, inst.network.task_count());
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = agents[i].policy();
      std::copy(xi.begin(), xi.end(), x_next.block(i).begin());
      dual += agents[i].last_objective();
    }
    std::vector<double> lambda_next(sys.groups(), 0.0);
    for (std::size_t m = 0; m < sys.groups(); ++m) {
      dual -= observed.lambda[m] * sys.rhs[m];
      bool first = true;
      for (const auto& member : sys.members[m]) {
        for (const auto& ms : agents[member.node].memberships()) {
          if (ms.group != m) continue;
          if (first) {
            lambda_next[m] = ms.lambda;
            first = false;
          } else if (ms.lambda != lambda_next[m]) {
            throw std::logic_error("group members disagree on their multiplier");
          }
        }
      }
    }
    observed.record(x_next, std::move(lambda_next), dual);
  } while (!monitor.should_stop(observed));

  SolveReport rep = monitor.finalize(observed);
  rep.wall_time = std::chrono::steady_clock::now() - started;
  return rep;
}

}  // namespace edgealloc
