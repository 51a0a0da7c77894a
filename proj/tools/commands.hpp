#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pursuit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kRuntimeError = 2;

// Bad input the user can fix (missing files, empty sets, bad flags).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateOptions {
  std::filesystem::path config;
  int count = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs/rollouts";
  int jobs = 1;
  std::vector<std::string> overrides;
};

struct SplitOptions {
  std::filesystem::path data;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path data;
  std::string ablation = "omega,mi";
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "runs/models";
  std::vector<std::string> overrides;
};

struct EvalOptions {
  std::vector<std::filesystem::path> checkpoints;  // files or directories
  std::filesystem::path data;
  std::optional<double> delta;
  std::optional<double> p_threshold;
  std::optional<std::filesystem::path> report;
  std::optional<int> heatmap;
  std::filesystem::path heatmap_dir = ".";
};

struct ReportOptions {
  std::filesystem::path config;
  std::vector<std::filesystem::path> data;
  std::vector<std::string> ablations;
  std::vector<int> horizons{0, 30, 60};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path models = "runs/models";
  std::filesystem::path report = "runs/report.csv";
  std::vector<std::string> overrides;
};

// Each returns the process exit code and writes progress to `out`.
int cmd_simulate(const SimulateOptions& o, std::ostream& out);
int cmd_split(const SplitOptions& o, std::ostream& out);
int cmd_train(const TrainOptions& o, std::ostream& out);
int cmd_eval(const EvalOptions& o, std::ostream& out);
int cmd_report(const ReportOptions& o, std::ostream& out);

// Parses argv and dispatches; exceptions are mapped to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pursuit::cli
