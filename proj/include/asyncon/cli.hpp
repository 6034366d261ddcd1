#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asyncon/sim.hpp"
#include "asyncon/topology.hpp"

namespace asyncon::cli {

/// Bundled topology text for "example1" / "example2"; throws Error otherwise.
std::string_view example_topology_text(std::string_view name);

struct ExperimentConfig {
  std::optional<std::filesystem::path> topology;
  std::optional<std::vector<double>> x0;
  int tau_d = 0;
  DelayKind delay_kind = DelayKind::kNone;
  std::uint64_t seed = 0;
  long samples = 300;
  long steps = 1000;
  double ctol = kConsensusTol;
  std::filesystem::path out = ".";
  std::string format = "csv";
  unsigned threads = 1;
};

/// Throws Error describing the first violated constraint.
void validate(const ExperimentConfig& c, bool needs_topology);

/// Parses "3,2,1,3,5".
std::vector<double> parse_vector(std::string_view text);

/// Entry point shared by the executable and the tests. argv[0] is the
/// program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asyncon::cli
