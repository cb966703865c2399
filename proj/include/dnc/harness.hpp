#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnc/ga.hpp"
#include "dnc/neuralcore.hpp"
#include "dnc/operators.hpp"

namespace dnc {

struct ExperimentConfig {
  GAConfig ga;
  OperatorSettings operator_settings;  // gene_range is filled from the problem
  std::size_t replicates = 20;
  std::uint64_t base_seed = 0;
  unsigned parallel_replicates = 1;
};

struct ExperimentResult {
  std::string operator_name;
  std::string instance_name;
  std::uint64_t base_seed = 0;
  bool lower_is_better = false;
  // [replicate][generation], reported units.
  std::vector<std::vector<double>> best_per_generation;
  std::vector<std::vector<double>> generation_seconds;
  // Best individual of each replicate, reported units.
  std::vector<double> final_best;
};

/// Replicate r runs with seed base_seed + r (GA stream and policy init).
ExperimentResult run_experiment(const Problem& problem, OperatorKind kind,
                                const ExperimentConfig& config);

struct OperatorSummary {
  std::string instance;
  std::string operator_name;
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> p_vs_reference;
};

struct TimingSummary {
  std::string operator_name;
  double mean_s = 0.0;
  double max_s = 0.0;
  double std_s = 0.0;
};

struct PairwiseP {
  std::string instance;
  std::string first;
  std::string second;
  double p = 1.0;
};

struct ComparisonReport {
  std::vector<OperatorSummary> summaries;
  std::vector<PairwiseP> pairwise;
  std::vector<TimingSummary> timing;
};

/// Per-instance summaries and p-values. The reference for `p_vs_reference` is
/// the first learned operator present (dnc, then dnc_mp, then dnc_pt).
ComparisonReport compare(std::span<const ExperimentResult> results, std::size_t rounds,
                         std::uint64_t seed);

TimingSummary summarize_timing(const std::string& operator_name,
                               std::span<const ExperimentResult> results);

/// Writes summary.csv, curves.csv and timing.csv into `out_dir`.
void emit_csv(std::span<const ExperimentResult> results, const ComparisonReport& comparison,
              const std::filesystem::path& out_dir);

/// Runs one online-training GA on `problem` and saves the final policy.
PolicyParameters pretrain(const Problem& problem, const GAConfig& ga, const DncSettings& dnc,
                          std::uint64_t seed, const std::filesystem::path& out_path);

}  // namespace dnc
