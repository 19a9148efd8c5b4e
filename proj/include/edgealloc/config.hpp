#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgealloc/distributed.hpp"
#include "edgealloc/dual_engine.hpp"
#include "edgealloc/model.hpp"

namespace edgealloc {

/// Config problem with a source position (line/column 0 when unknown).
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& source, std::size_t line, std::size_t column,
              const std::string& message);
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct NodeTypeSpec {
  double energy_budget = 0.0;
  double memory_budget = 0.0;
  std::map<std::string, double> energy_cost;  // task name -> J per run
  std::map<std::string, double> memory_cost;  // task name -> GB*s per run
  bool operator==(const NodeTypeSpec&) const = default;
};

struct QosSweepSettings {
  std::string task;
  double min_runs = 2.0;
  double max_runs = 16.0;
  double step = 1.0;
  bool operator==(const QosSweepSettings&) const = default;
};

struct ScenarioSettings {
  std::vector<int> degraded_nodes;  // node ids
  double degradation_step = 0.01;
  QosSweepSettings qos_sweep;
  bool operator==(const ScenarioSettings&) const = default;
};

struct SolverSettings {
  StepMode step = StepMode::diminishing;
  std::optional<double> alpha0;  // default 1 / max row norm of G squared
  ConvergenceCriteria criteria;
  ExchangePattern exchange = ExchangePattern::all_to_all;
  std::uint64_t seed = 1;
};

struct ConfigDocument {
  std::string name;
  std::string description;
  std::vector<std::string> assumptions;
  std::map<std::string, NodeTypeSpec> node_types;
  NetworkSpec network;
  ScenarioSettings scenario;
  SolverSettings solver;
};

ConfigDocument parse_config(std::string_view text, const std::string& source = "<config>");
ConfigDocument load_config_file(const std::filesystem::path& path);

/// Canonical JSON text (sorted keys, per-node overrides only where they differ
/// from the node type).
std::string serialize_config(const ConfigDocument& doc);

bool same_network(const NetworkSpec& a, const NetworkSpec& b);

}  // namespace edgealloc
