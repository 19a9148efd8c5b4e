#include <doctest.h>

#include <sstream>
#include <thread>

#include "edgealloc/config.hpp"
#include "edgealloc/distributed.hpp"
#include "edgealloc/report.hpp"

using namespace edgealloc;

namespace {

Instance shipped() { return Instance::build(load_config_file(EDGEALLOC_DEFAULT_CONFIG).network); }

ConvergenceCriteria recording() {
  ConvergenceCriteria c;
  c.record_trajectory = true;
  return c;
}

bool share_group(const Instance& inst, std::size_t a, std::size_t b) {
  for (const auto& g : inst.network.groups) {
    if (g.weights[a] > 0.0 && g.weights[b] > 0.0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("harness reproduces the centralized run bit for bit") {
  const auto inst = shipped();
  const auto step = StepPolicy::scaled_default(inst.constraints);
  const auto central = run_until_converged(inst, step, recording());
  for (auto pattern : {ExchangePattern::all_to_all, ExchangePattern::hub}) {
    for (std::size_t workers : {1u, 3u}) {
      CAPTURE(to_string(pattern));
      CAPTURE(workers);
      MessageLedger ledger;
      const auto dist = run_distributed(inst, step, recording(), ledger, {pattern, workers});
      CHECK(identical_reports(central, dist));
      CHECK(central.lambda_trajectory.size() == dist.lambda_trajectory.size());
    }
  }
}

TEST_CASE("constant step and warm start also match") {
  const auto inst = shipped();
  const auto step = StepPolicy::scaled_default(inst.constraints, StepMode::constant);
  ConvergenceCriteria c = recording();
  c.max_iterations = 700;
  const std::vector<double> warm{0.1, 0.0, 0.3, 1.0, 2.0, 0.5, 0.0};
  const auto central = run_until_converged(inst, step, c, {}, warm);
  MessageLedger ledger;
  const auto dist = run_distributed(inst, step, c, ledger, {}, {}, warm);
  CHECK(identical_reports(central, dist));
}

TEST_CASE("message counts per tick follow the group sizes") {
  const auto inst = shipped();
  // Group sizes 3, 2, 3, 1, 2, 1, 2.
  CHECK(expected_messages_per_tick(inst, ExchangePattern::all_to_all) == 6 + 2 + 6 + 0 + 2 + 0 + 2);
  CHECK(expected_messages_per_tick(inst, ExchangePattern::hub) == 4 + 2 + 4 + 0 + 2 + 0 + 2);

  ConvergenceCriteria c;
  c.max_iterations = 1;
  MessageLedger ledger;
  run_distributed(inst, StepPolicy::scaled_default(inst.constraints), c, ledger);
  CHECK(ledger.size() == 18);
  const auto audit = audit_messages(ledger, inst, ExchangePattern::all_to_all);
  CHECK(audit.ok());
  CHECK(audit.per_tick_counts.at(1) == 18);
}

TEST_CASE("audit of a full run: no violations, silent pairs stay silent") {
  const auto inst = shipped();
  for (auto pattern : {ExchangePattern::all_to_all, ExchangePattern::hub}) {
    MessageLedger ledger;
    const auto rep = run_distributed(inst, StepPolicy::scaled_default(inst.constraints), {}, ledger, {pattern, 2});
    const auto audit = audit_messages(ledger, inst, pattern);
    CHECK(audit.violations.empty());
    CHECK(audit.count_mismatch_ticks.empty());
    CHECK(ledger.size() == rep.iterations * audit.expected_per_tick);
    for (std::size_t a = 0; a < inst.network.node_count(); ++a) {
      for (std::size_t b = 0; b < inst.network.node_count(); ++b) {
        if (a != b && !share_group(inst, a, b)) CHECK(audit.pair_counts[a][b] == 0);
      }
    }
    // Nodes 1 and 5 share no group in the shipped topology.
    CHECK(audit.pair_counts[0][4] == 0);
    CHECK(audit.pair_counts[4][0] == 0);
  }
}

TEST_CASE("an injected cross-group message is the only violation") {
  const auto inst = shipped();
  ConvergenceCriteria c;
  c.max_iterations = 3;
  MessageLedger ledger;
  run_distributed(inst, StepPolicy::scaled_default(inst.constraints), c, ledger);
  CHECK(audit_messages(ledger, inst, ExchangePattern::all_to_all).violations.empty());
  // Node 1 (index 0) is not in group C1 (index 2).
  ledger.append(Message{2, 2, 0, 4, MessageKind::contribution, 1.0});
  const auto audit = audit_messages(ledger, inst, ExchangePattern::all_to_all);
  CHECK(audit.violations.size() == 1);
  CHECK(audit.violating_messages.size() == 1);
  CHECK(audit.count_mismatch_ticks == std::vector<std::size_t>{2});
}

TEST_CASE("singleton groups exchange nothing") {
  auto net = load_config_file(EDGEALLOC_DEFAULT_CONFIG).network;
  net.groups.clear();
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    GroupSpec g;
    g.name = "solo" + std::to_string(i);
    g.task = 0;
    g.weights.assign(net.node_count(), 0.0);
    g.weights[i] = 1.0;
    g.qos_min = 2.0;
    net.groups.push_back(g);
  }
  const auto inst = Instance::build(net);
  MessageLedger ledger;
  const auto rep = run_distributed(inst, StepPolicy::scaled_default(inst.constraints), {}, ledger);
  CHECK(rep.converged);
  CHECK(ledger.size() == 0);
  CHECK(audit_messages(ledger, inst, ExchangePattern::all_to_all).ok());
}

TEST_CASE("agents hold only their own block and their groups") {
  const auto inst = shipped();
  const std::vector<double> lambda(inst.constraints.groups(), 0.0);
  for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
    NodeAgent agent(inst, i, lambda);
    CHECK(agent.known_policy_blocks() == std::vector<std::size_t>{i});
    CHECK(agent.policy().size() == inst.network.task_count());
    for (const auto& m : agent.memberships()) {
      CHECK(inst.network.groups[m.group].weights[i] > 0.0);
      CHECK(m.qos_min == inst.network.groups[m.group].qos_min);
    }
  }
}

TEST_CASE("concurrent appends land in sorted order") {
  MessageLedger ledger;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < 4; ++w) {
    threads.emplace_back([&ledger, w] {
      for (std::size_t k = 0; k < 500; ++k) {
        ledger.append(Message{500 - k, w, w, (w + 1) % 4, MessageKind::contribution, 1.0});
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto sorted = ledger.sorted();
  REQUIRE(sorted.size() == 2000);
  for (std::size_t k = 1; k < sorted.size(); ++k) CHECK(sorted[k - 1].tick <= sorted[k].tick);
}

TEST_CASE("ledger CSV columns") {
  const auto inst = shipped();
  ConvergenceCriteria c;
  c.max_iterations = 1;
  MessageLedger ledger;
  run_distributed(inst, StepPolicy::scaled_default(inst.constraints), c, ledger);
  std::ostringstream os;
  ledger.write_csv(os, inst.network);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "tick,group,sender,receiver,kind,payload");
  CHECK(first.rfind("1,A1,1,2,contribution,", 0) == 0);
}

TEST_CASE("exchange pattern names") {
  CHECK(parse_exchange_pattern("all-to-all") == ExchangePattern::all_to_all);
  CHECK(parse_exchange_pattern("hub") == ExchangePattern::hub);
  CHECK_THROWS_AS(parse_exchange_pattern("ring"), ParameterError);
}
