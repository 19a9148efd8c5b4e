#include "edgealloc/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace edgealloc {

using nlohmann::json;

ConfigError::ConfigError(const std::string& source, std::size_t line, std::size_t column,
                         const std::string& message)
    : ValidationError([&] {
        std::ostringstream os;
        os << source;
        if (line > 0) os << ':' << line << ':' << column;
        os << ": " << message;
        return os.str();
      }()),
      line_(line),
      column_(column) {}

namespace {

// Maps JSON pointers to the byte offset where the value starts. Runs only on
// text that nlohmann already accepted, so it can be lenient.
class OffsetIndex {
 public:
  explicit OffsetIndex(std::string_view text) : text_(text) {
    skip_ws();
    value("");
  }

  [[nodiscard]] std::pair<std::size_t, std::size_t> locate(std::string pointer) const {
    while (true) {
      auto it = offsets_.find(pointer);
      if (it != offsets_.end()) return line_col(it->second);
      if (pointer.empty()) return {0, 0};
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        out += text_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void value(const std::string& pointer) {
    offsets_[pointer] = pos_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // colon
        skip_ws();
        value(pointer + "/" + escape(key));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      std::size_t index = 0;
      while (pos_ < text_.size() && text_[pos_] != ']') {
        value(pointer + "/" + std::to_string(index++));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
    }
  }

  [[nodiscard]] std::pair<std::size_t, std::size_t> line_col(std::size_t offset) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> offsets_;
};

class Reader {
 public:
  Reader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    OffsetIndex index(text_);
    const auto [line, col] = index.locate(pointer);
    throw ConfigError(source_, line, col, message + " (at " + (pointer.empty() ? "/" : pointer) + ")");
  }

  const json& require(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.is_object()) fail(pointer, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(pointer, std::string("missing key '") + key + "'");
    return *it;
  }

  double number(const json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(pointer, "expected a finite number");
    return d;
  }

  double nonneg(const json& v, const std::string& pointer) const {
    const double d = number(v, pointer);
    if (d < 0.0) fail(pointer, "must be >= 0");
    return d;
  }

  int integer(const json& v, const std::string& pointer) const {
    if (!v.is_number_integer()) fail(pointer, "expected an integer");
    return v.get<int>();
  }

  std::string string(const json& v, const std::string& pointer) const {
    if (!v.is_string()) fail(pointer, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& pointer) const {
    if (!v.is_array()) fail(pointer, "expected an array");
    return v;
  }

  std::vector<double> numbers(const json& v, const std::string& pointer) const {
    array(v, pointer);
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], pointer + "/" + std::to_string(k)));
    return out;
  }

  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  std::string_view text_;
  std::string source_;
};

std::map<std::string, double> cost_table(const Reader& rd, const json& v, const std::string& pointer,
                                         const std::set<std::string>& task_names) {
  if (!v.is_object()) rd.fail(pointer, "expected an object of task name -> cost");
  std::map<std::string, double> out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string p = pointer + "/" + it.key();
    if (!task_names.count(it.key())) rd.fail(p, "unknown task '" + it.key() + "'");
    out[it.key()] = rd.number(it.value(), p);
  }
  return out;
}

void read_solver(const Reader& rd, const json& v, SolverSettings& s) {
  const std::string base = "/solver";
  if (!v.is_object()) rd.fail(base, "expected an object");
  if (v.contains("step")) {
    try {
      s.step = parse_step_mode(rd.string(v["step"], base + "/step"));
    } catch (const ParameterError& e) {
      rd.fail(base + "/step", e.what());
    }
  }
  if (v.contains("alpha0") && !v["alpha0"].is_null()) {
    const double a = rd.number(v["alpha0"], base + "/alpha0");
    if (!(a > 0.0)) rd.fail(base + "/alpha0", "must be > 0");
    s.alpha0 = a;
  }
  auto positive = [&](const char* key, double& target) {
    if (!v.contains(key)) return;
    const double d = rd.number(v[key], base + "/" + key);
    if (!(d > 0.0)) rd.fail(base + "/" + key, "must be > 0");
    target = d;
  };
  positive("dual_tol", s.criteria.dual_tol);
  positive("feas_tol", s.criteria.feas_tol);
  positive("gap_tol", s.criteria.gap_tol);
  auto count = [&](const char* key, std::size_t& target) {
    if (!v.contains(key)) return;
    const int k = rd.integer(v[key], base + "/" + key);
    if (k < 1) rd.fail(base + "/" + key, "must be >= 1");
    target = static_cast<std::size_t>(k);
  };
  count("max_iterations", s.criteria.max_iterations);
  count("gap_check_interval", s.criteria.gap_check_interval);
  if (v.contains("exchange")) {
    try {
      s.exchange = parse_exchange_pattern(rd.string(v["exchange"], base + "/exchange"));
    } catch (const ParameterError& e) {
      rd.fail(base + "/exchange", e.what());
    }
  }
  if (v.contains("seed")) {
    const int seed = rd.integer(v["seed"], base + "/seed");
    if (seed < 0) rd.fail(base + "/seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }
}

}  // namespace

ConfigDocument parse_config(std::string_view text, const std::string& source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source, line, col, std::string("malformed JSON: ") + e.what());
  }

  Reader rd(text, source);
  if (!root.is_object()) rd.fail("", "config root must be an object");
  ConfigDocument doc;
  if (root.contains("name")) doc.name = rd.string(root["name"], "/name");
  if (root.contains("description")) doc.description = rd.string(root["description"], "/description");
  if (root.contains("assumptions")) {
    const auto& a = rd.array(root["assumptions"], "/assumptions");
    for (std::size_t k = 0; k < a.size(); ++k) {
      doc.assumptions.push_back(rd.string(a[k], "/assumptions/" + std::to_string(k)));
    }
  }

  auto& net = doc.network;
  std::set<std::string> task_names;
  const auto& tasks = rd.array(rd.require(root, "", "tasks"), "/tasks");
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::string p = "/tasks/" + std::to_string(t);
    TaskSpec task;
    task.name = rd.string(rd.require(tasks[t], p, "name"), p + "/name");
    if (!task_names.insert(task.name).second) rd.fail(p + "/name", "duplicate task name");
    if (tasks[t].contains("min_runs_per_node")) {
      task.min_runs_per_node = rd.nonneg(tasks[t]["min_runs_per_node"], p + "/min_runs_per_node");
    }
    net.tasks.push_back(std::move(task));
  }

  const auto& types = rd.require(root, "", "node_types");
  if (!types.is_object()) rd.fail("/node_types", "expected an object");
  for (auto it = types.begin(); it != types.end(); ++it) {
    const std::string p = "/node_types/" + it.key();
    NodeTypeSpec spec;
    spec.energy_budget = rd.nonneg(rd.require(it.value(), p, "energy_budget"), p + "/energy_budget");
    spec.memory_budget = rd.nonneg(rd.require(it.value(), p, "memory_budget"), p + "/memory_budget");
    spec.energy_cost = cost_table(rd, rd.require(it.value(), p, "energy_cost"), p + "/energy_cost", task_names);
    spec.memory_cost = cost_table(rd, rd.require(it.value(), p, "memory_cost"), p + "/memory_cost", task_names);
    for (auto& task : net.tasks) {
      if (auto c = spec.energy_cost.find(task.name); c != spec.energy_cost.end()) task.energy_cost[it.key()] = c->second;
      if (auto c = spec.memory_cost.find(task.name); c != spec.memory_cost.end()) task.memory_cost[it.key()] = c->second;
    }
    doc.node_types[it.key()] = std::move(spec);
  }

  const auto& nodes = rd.array(rd.require(root, "", "nodes"), "/nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = "/nodes/" + std::to_string(i);
    const auto& v = nodes[i];
    NodeSpec node;
    node.id = rd.integer(rd.require(v, p, "id"), p + "/id");
    if (net.node_index(node.id)) rd.fail(p + "/id", "duplicate node id " + std::to_string(node.id));
    node.node_type = rd.string(rd.require(v, p, "type"), p + "/type");
    auto type = doc.node_types.find(node.node_type);
    if (type == doc.node_types.end()) rd.fail(p + "/type", "unknown node type '" + node.node_type + "'");
    node.utility_coeffs = rd.numbers(rd.require(v, p, "utility_coeffs"), p + "/utility_coeffs");
    if (node.utility_coeffs.size() != net.tasks.size()) {
      rd.fail(p + "/utility_coeffs", "expected one coefficient per task");
    }
    node.energy_budget = v.contains("energy_budget") ? rd.nonneg(v["energy_budget"], p + "/energy_budget")
                                                     : type->second.energy_budget;
    node.memory_budget = v.contains("memory_budget") ? rd.nonneg(v["memory_budget"], p + "/memory_budget")
                                                     : type->second.memory_budget;
    if (v.contains("energy_cost")) node.energy_cost = rd.numbers(v["energy_cost"], p + "/energy_cost");
    if (v.contains("memory_cost")) node.memory_cost = rd.numbers(v["memory_cost"], p + "/memory_cost");
    net.nodes.push_back(std::move(node));
  }

  const auto& groups = rd.array(rd.require(root, "", "groups"), "/groups");
  for (std::size_t m = 0; m < groups.size(); ++m) {
    const std::string p = "/groups/" + std::to_string(m);
    const auto& v = groups[m];
    GroupSpec g;
    if (v.contains("name")) g.name = rd.string(v["name"], p + "/name");
    const auto& task = rd.require(v, p, "task");
    if (task.is_string()) {
      auto t = net.task_index(task.get<std::string>());
      if (!t) rd.fail(p + "/task", "unknown task '" + task.get<std::string>() + "'");
      g.task = *t;
    } else {
      const int t = rd.integer(task, p + "/task");
      if (t < 0 || static_cast<std::size_t>(t) >= net.tasks.size()) rd.fail(p + "/task", "task index out of range");
      g.task = static_cast<std::size_t>(t);
    }
    g.qos_min = rd.number(rd.require(v, p, "qos_min"), p + "/qos_min");
    g.weights.assign(net.nodes.size(), 0.0);
    const auto& members = rd.array(rd.require(v, p, "members"), p + "/members");
    std::vector<double> weights(members.size(), 1.0);
    if (v.contains("weights")) {
      weights = rd.numbers(v["weights"], p + "/weights");
      if (weights.size() != members.size()) rd.fail(p + "/weights", "expected one weight per member");
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      const std::string mp = p + "/members/" + std::to_string(k);
      const int id = rd.integer(members[k], mp);
      auto idx = net.node_index(id);
      if (!idx) rd.fail(mp, "group references unknown node id " + std::to_string(id));
      if (!(weights[k] > 0.0)) rd.fail(p + "/weights/" + std::to_string(k), "member weights must be > 0");
      g.weights[*idx] = weights[k];
    }
    net.groups.push_back(std::move(g));
  }

  if (root.contains("scenario")) {
    const auto& sc = root["scenario"];
    if (!sc.is_object()) rd.fail("/scenario", "expected an object");
    if (sc.contains("degraded_nodes")) {
      const auto& d = rd.array(sc["degraded_nodes"], "/scenario/degraded_nodes");
      for (std::size_t k = 0; k < d.size(); ++k) {
        const std::string dp = "/scenario/degraded_nodes/" + std::to_string(k);
        const int id = rd.integer(d[k], dp);
        if (!net.node_index(id)) rd.fail(dp, "unknown node id " + std::to_string(id));
        doc.scenario.degraded_nodes.push_back(id);
      }
    }
    if (sc.contains("degradation_step")) {
      const double s = rd.number(sc["degradation_step"], "/scenario/degradation_step");
      if (!(s > 0.0) || s > 1.0) rd.fail("/scenario/degradation_step", "must be in (0, 1]");
      doc.scenario.degradation_step = s;
    }
    if (sc.contains("qos_sweep")) {
      const auto& q = sc["qos_sweep"];
      const std::string qp = "/scenario/qos_sweep";
      if (!q.is_object()) rd.fail(qp, "expected an object");
      auto& qs = doc.scenario.qos_sweep;
      if (q.contains("task")) {
        qs.task = rd.string(q["task"], qp + "/task");
        if (!net.task_index(qs.task)) rd.fail(qp + "/task", "unknown task '" + qs.task + "'");
      }
      if (q.contains("min_runs")) qs.min_runs = rd.nonneg(q["min_runs"], qp + "/min_runs");
      if (q.contains("max_runs")) qs.max_runs = rd.nonneg(q["max_runs"], qp + "/max_runs");
      if (q.contains("step")) qs.step = rd.number(q["step"], qp + "/step");
      if (!(qs.step > 0.0)) rd.fail(qp + "/step", "must be > 0");
      if (qs.max_runs < qs.min_runs) rd.fail(qp, "max_runs must be >= min_runs");
    }
  }
  if (doc.scenario.qos_sweep.task.empty() && !net.tasks.empty()) {
    doc.scenario.qos_sweep.task = net.tasks.front().name;
  }
  if (root.contains("solver")) read_solver(rd, root["solver"], doc.solver);

  auto report = validate_network(net);
  if (!report.ok()) {
    std::string msg = "invalid network:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ConfigError(source, 0, 0, msg);
  }
  return doc;
}

ConfigDocument load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string serialize_config(const ConfigDocument& doc) {
  const auto& net = doc.network;
  json root;
  root["name"] = doc.name;
  root["description"] = doc.description;
  root["assumptions"] = doc.assumptions;

  json tasks = json::array();
  for (const auto& t : net.tasks) tasks.push_back({{"name", t.name}, {"min_runs_per_node", t.min_runs_per_node}});
  root["tasks"] = tasks;

  json types = json::object();
  for (const auto& [name, spec] : doc.node_types) {
    types[name] = {{"energy_budget", spec.energy_budget},
                   {"memory_budget", spec.memory_budget},
                   {"energy_cost", spec.energy_cost},
                   {"memory_cost", spec.memory_cost}};
  }
  root["node_types"] = types;

  json nodes = json::array();
  for (const auto& n : net.nodes) {
    json v = {{"id", n.id}, {"type", n.node_type}, {"utility_coeffs", n.utility_coeffs}};
    auto type = doc.node_types.find(n.node_type);
    if (type == doc.node_types.end() || type->second.energy_budget != n.energy_budget) v["energy_budget"] = n.energy_budget;
    if (type == doc.node_types.end() || type->second.memory_budget != n.memory_budget) v["memory_budget"] = n.memory_budget;
    if (n.energy_cost) v["energy_cost"] = *n.energy_cost;
    if (n.memory_cost) v["memory_cost"] = *n.memory_cost;
    nodes.push_back(std::move(v));
  }
  root["nodes"] = nodes;

  json groups = json::array();
  for (const auto& g : net.groups) {
    json members = json::array();
    json weights = json::array();
    bool unit = true;
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
      if (!(g.weights[i] > 0.0)) continue;
      members.push_back(net.nodes[i].id);
      weights.push_back(g.weights[i]);
      unit = unit && g.weights[i] == 1.0;
    }
    json v = {{"name", g.name}, {"task", net.tasks[g.task].name}, {"members", members}, {"qos_min", g.qos_min}};
    if (!unit) v["weights"] = weights;
    groups.push_back(std::move(v));
  }
  root["groups"] = groups;

  root["scenario"] = {{"degraded_nodes", doc.scenario.degraded_nodes},
                      {"degradation_step", doc.scenario.degradation_step},
                      {"qos_sweep",
                       {{"task", doc.scenario.qos_sweep.task},
                        {"min_runs", doc.scenario.qos_sweep.min_runs},
                        {"max_runs", doc.scenario.qos_sweep.max_runs},
                        {"step", doc.scenario.qos_sweep.step}}}};

  json solver = {{"step", to_string(doc.solver.step)},
                 {"dual_tol", doc.solver.criteria.dual_tol},
                 {"feas_tol", doc.solver.criteria.feas_tol},
                 {"gap_tol", doc.solver.criteria.gap_tol},
                 {"gap_check_interval", doc.solver.criteria.gap_check_interval},
                 {"max_iterations", doc.solver.criteria.max_iterations},
                 {"exchange", to_string(doc.solver.exchange)},
                 {"seed", doc.solver.seed}};
  if (doc.solver.alpha0) solver["alpha0"] = *doc.solver.alpha0;
  root["solver"] = solver;
  return root.dump(2) + "\n";
}

bool same_network(const NetworkSpec& a, const NetworkSpec& b) { return a == b; }

}  // namespace edgealloc
