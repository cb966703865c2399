#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dnc/domains.hpp"
#include "dnc/ga.hpp"
#include "dnc/operators.hpp"

namespace dnc::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kTrainingDivergence = 4,
};

inline constexpr int kConfigVersion = 1;

/// Everything a run/pretrain invocation needs. Defaults reproduce the
/// reference experimental protocol.
struct RunConfig {
  GAConfig ga;
  DncSettings dnc;
  std::vector<std::string> operators{"dnc", "equiprobable_uniform"};
  std::vector<std::filesystem::path> instances;
  std::size_t replicates = 20;
  std::uint64_t base_seed = 0;
  std::optional<std::filesystem::path> weights;
  std::filesystem::path output_dir = "results";
  InvalidMode invalid_mode = InvalidMode::strict;
  std::size_t permutation_rounds = 10000;
  unsigned parallel_replicates = 1;
};

/// Parses `key = value` lines ('#' starts a comment, lists are comma
/// separated) on top of `base`. Unknown keys are a ConfigError.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Applies one `key`/`value` pair, as used in config files.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_pretrain(const RunConfig& config, const std::filesystem::path& out_path, bool force,
                 std::ostream& out, std::ostream& err);

struct GenOptions {
  std::size_t items = 40;
  std::int64_t low = 10;
  std::int64_t high = 25;
  std::int64_t capacity = 100;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "instances";
};

int cmd_gen(const GenOptions& options, std::ostream& out, std::ostream& err);

/// Full command-line entry point (argv[0] included).
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dnc::cli
