#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "edgealloc/dual_engine.hpp"
#include "edgealloc/model.hpp"

namespace edgealloc {

/// Nine significant digits, "%.9g".
std::string format_number(double v);

/// Long-format CSV with columns record,node_id,task,group,value. Records are
/// x (per node and task), lambda (per group), group_qos (per group) and
/// summary scalars. Wall time is left out so the file is reproducible.
void write_solve_report(std::ostream& out, const Instance& inst, const SolveReport& report,
                        std::optional<double> oracle_value = {});

/// Every field except wall time compared bit for bit.
bool identical_reports(const SolveReport& a, const SolveReport& b);

/// Short human-readable summary (includes wall time).
std::string summarize(const Instance& inst, const SolveReport& report,
                      std::optional<double> oracle_value = {});

}  // namespace edgealloc
