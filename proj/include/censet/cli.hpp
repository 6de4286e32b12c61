#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace censet::cli {

enum class Command { Analyze, Ksweep, Certify, Reference, Simulate, Compose, Oracle };
enum class Format { Json, Csv, Table };

struct RunConfig {
  Command command = Command::Analyze;
  std::string input;
  std::string output;
  std::string reference;
  std::optional<double> delta;
  std::vector<std::size_t> k_list;
  std::vector<double> u_list;
  std::optional<double> rho;
  std::vector<double> rho_candidates{0.5, 1.0, 2.0, 5.0};
  std::uint64_t seed = 0;
  std::optional<Format> format;
  bool bits = false;

  // Synthetic teacher (ksweep without --input, simulate).
  std::size_t vocab = 0;
  std::size_t positions = 16;
  std::string law = "gaussian";
  double temperature = 1.0;
  double mean = 0.0;
  double sd = 2.0;
  double concentration = 0.1;
  std::size_t head_size = 1;
  double gap = 3.0;

  std::size_t trials = 20;  // oracle
};

/// Runs one CLI invocation. Returns the process exit status: 0 on success,
/// 1 when a computation or oracle check failed, 2 on usage/input errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Report builders, exposed for tests. Divergences are in nats.
nlohmann::ordered_json analyze_report(const RunConfig& config, int& status);
nlohmann::ordered_json ksweep_report(const RunConfig& config, int& status);
nlohmann::ordered_json certify_report(const RunConfig& config, int& status);
nlohmann::ordered_json reference_report(const RunConfig& config, int& status);
nlohmann::ordered_json simulate_report(const RunConfig& config, int& status);
nlohmann::ordered_json compose_report(const RunConfig& config, int& status);
nlohmann::ordered_json oracle_report(const RunConfig& config, int& status);

/// Rescales every divergence-valued field to bits and sets "units".
void convert_to_bits(nlohmann::ordered_json& report);

std::string render(const nlohmann::ordered_json& report, Format format);

}  // namespace censet::cli
