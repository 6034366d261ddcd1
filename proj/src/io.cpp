#include "asyncon/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "asyncon/rng.hpp"

namespace asyncon::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const Index n = t.states.empty() ? 0 : t.states.front().size();
  out << "step";
  for (Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  out << ",norm\n";
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    out << k;
    for (Index i = 0; i < n; ++i) out << ',' << format_double(t.states[k](i));
    out << ',' << format_double(t.norm_track[k]) << '\n';
  }
}

void write_norms_csv(std::ostream& out, const EnsembleSummary& e) {
  out << "step,norm,sample_id\n";
  for (std::size_t s = 0; s < e.norm_tracks.size(); ++s) {
    const auto& track = e.norm_tracks[s];
    for (std::size_t k = 0; k < track.size(); ++k) {
      out << k << ',' << format_double(track[k]) << ',' << s << '\n';
    }
  }
}

void write_consensus_csv(std::ostream& out, const EnsembleSummary& e) {
  out << "sample_id,seed,consensus_value,consensus_step\n";
  for (std::size_t s = 0; s < e.consensus_values.size(); ++s) {
    out << s << ',' << sample_seed(e.master_seed, s) << ',' << format_double(e.consensus_values[s])
        << ',' << e.consensus_steps[s] << '\n';
  }
}

json trajectory_json(const Trajectory& t) {
  json states = json::array();
  for (const auto& x : t.states) states.push_back(vector_json(x));
  json consensus = nullptr;
  if (t.consensus) {
    consensus = {{"step", t.consensus->step},
                 {"value", t.consensus->value},
                 {"spread", t.consensus->spread}};
  }
  return {{"states", states}, {"norm", t.norm_track}, {"consensus", consensus}};
}

json norms_json(const EnsembleSummary& e) {
  json tracks = json::array();
  for (const auto& track : e.norm_tracks) tracks.push_back(track);
  return {{"norm_tracks", tracks}};
}

json consensus_json(const EnsembleSummary& e) {
  json rows = json::array();
  for (std::size_t s = 0; s < e.consensus_values.size(); ++s) {
    rows.push_back({{"sample_id", s},
                    {"seed", sample_seed(e.master_seed, s)},
                    {"consensus_value", number_or_null(e.consensus_values[s])},
                    {"consensus_step", e.consensus_steps[s]}});
  }
  return {{"samples", rows}};
}

json report_json(const ConvergenceReport& r) {
  json leaders = json::array();
  for (Index l : r.leaders) leaders.push_back(l + 1);
  return {
      {"n", r.n},
      {"leaders", leaders},
      {"m", r.m},
      {"has_spanning_tree", r.has_spanning_tree},
      {"is_m_rooted_leader_form", r.is_m_rooted_leader_form},
      {"rho_margin", number_or_null(r.rho_margin)},
      {"async_reachable", r.async_reachable},
      {"theorem1_applies", r.theorem1_applies},
      {"rho_f", number_or_null(r.rho_f)},
      {"mu", r.mu ? vector_json(r.mu->mu) : json(nullptr)},
      {"fstar", r.fstar ? matrix_json(*r.fstar) : json(nullptr)},
      {"predicted_sync_value",
       r.predicted_sync_value ? json(*r.predicted_sync_value) : json(nullptr)},
      {"predicted_limits", r.predicted_limits ? vector_json(*r.predicted_limits) : json(nullptr)},
      {"notes", r.notes},
  };
}

json ensemble_json(const EnsembleSummary& e) {
  return {{"master_seed", e.master_seed},
          {"samples", e.samples},
          {"steps", e.steps},
          {"non_converged", e.non_converged},
          {"mean", number_or_null(e.mean)},
          {"std", number_or_null(e.stddev)},
          {"min", number_or_null(e.min)},
          {"max", number_or_null(e.max)}};
}

json discrepancy_json(const DiscrepancyReport& d) {
  return {{"sync_value", number_or_null(d.sync_value)},
          {"max_abs_deviation", number_or_null(d.max_abs_deviation)},
          {"std", number_or_null(d.stddev)},
          {"fraction_within", d.fraction_within},
          {"within_tol", d.within_tol},
          {"considered", d.considered},
          {"histogram", {{"edges", d.histogram.edges}, {"counts", d.histogram.counts}}}};
}

}  // namespace asyncon::io
