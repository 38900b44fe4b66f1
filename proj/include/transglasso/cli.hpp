#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace transglasso::cli {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitInternal = 4;

enum class Command { Estimate, Simulate, Benchmark };

struct CliConfig {
  Command command = Command::Estimate;
  std::filesystem::path target;
  std::vector<std::filesystem::path> sources;
  std::filesystem::path out = ".";
  std::string model = "I";
  int d = 30;
  int num_sources = 3;
  std::vector<int> h{10};
  long n0 = 100;
  long n_source = 300;
  std::optional<int> reps;
  std::uint64_t seed = 0;
  int folds = 5;
  bool center = true;
  bool select_informative = false;
  bool has_header = false;
  std::string lambda_m = "auto";    // "auto" or comma-separated values
  std::string lambda_psi = "auto";
  unsigned threads = 1;
  std::string preset;
};

/// Writes omega0.csv and selection.json to config.out.
int cmd_estimate(const CliConfig& config, std::ostream& err);
/// Writes ground-truth matrices, sampled studies and truth.json to config.out.
int cmd_simulate(const CliConfig& config, std::ostream& err);
/// Writes report.csv and summary.json to config.out.
int cmd_benchmark(const CliConfig& config, std::ostream& err);

/// Parses argv (including the program name) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace transglasso::cli
