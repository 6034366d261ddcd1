#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

#include "asyncon/analysis.hpp"
#include "asyncon/sim.hpp"

namespace asyncon::io {

// Column and key names are part of the output contract; README lists them.

/// step,x1,...,xn,norm
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
/// step,norm,sample_id
void write_norms_csv(std::ostream& out, const EnsembleSummary& e);
/// sample_id,seed,consensus_value,consensus_step
void write_consensus_csv(std::ostream& out, const EnsembleSummary& e);

nlohmann::json trajectory_json(const Trajectory& t);
nlohmann::json norms_json(const EnsembleSummary& e);
nlohmann::json consensus_json(const EnsembleSummary& e);

/// Agent indices are 1-based in every serialized form.
nlohmann::json report_json(const ConvergenceReport& r);
/// Statistics only; per-sample data lives in the CSV/JSON tables.
nlohmann::json ensemble_json(const EnsembleSummary& e);
nlohmann::json discrepancy_json(const DiscrepancyReport& d);

/// 17 significant digits; "nan" for NaN.
std::string format_double(double v);

}  // namespace asyncon::io
