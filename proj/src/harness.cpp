#include "dnc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dnc/errors.hpp"
#include "dnc/stats.hpp"

namespace dnc {

ExperimentResult run_experiment(const Problem& problem, OperatorKind kind,
                                const ExperimentConfig& config) {
  config.ga.validate();
  if (config.replicates == 0) throw ConfigError("replicates must be positive");

  ExperimentResult result;
  result.operator_name = std::string(to_string(kind));
  result.instance_name = problem.name();
  result.base_seed = config.base_seed;
  result.lower_is_better = problem.lower_is_better_reported();
  result.best_per_generation.resize(config.replicates);
  result.generation_seconds.resize(config.replicates);
  result.final_best.resize(config.replicates);

  auto replicate = [&](std::size_t r) {
    const std::uint64_t seed = config.base_seed + r;
    OperatorSettings settings = config.operator_settings;
    settings.gene_range = problem.gene_range();
    settings.init_seed = seed;
    auto op = make_operator(kind, settings);

    GAConfig ga = config.ga;
    ga.rng_seed = seed;
    Rng rng(seed);
    const GARun run = run_ga(problem, *op, ga, rng);

    auto& curve = result.best_per_generation[r];
    curve.reserve(run.best_fitness.size());
    for (double f : run.best_fitness) curve.push_back(problem.reported(f));
    result.generation_seconds[r] = run.generation_seconds;
    result.final_best[r] = problem.reported(run.best.fitness);
  };

  const unsigned workers =
      std::min<unsigned>(std::max(1u, config.parallel_replicates), static_cast<unsigned>(config.replicates));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.replicates; ++r) replicate(r);
    return result;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < config.replicates; r = next++) {
          try {
            replicate(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

TimingSummary summarize_timing(const std::string& operator_name,
                               std::span<const ExperimentResult> results) {
  std::vector<double> all;
  for (const auto& r : results)
    if (r.operator_name == operator_name)
      for (const auto& rep : r.generation_seconds) all.insert(all.end(), rep.begin(), rep.end());
  TimingSummary t{operator_name, 0.0, 0.0, 0.0};
  if (all.empty()) return t;
  t.mean_s = mean(all);
  t.max_s = *std::max_element(all.begin(), all.end());
  t.std_s = sample_std(all);
  return t;
}

ComparisonReport compare(std::span<const ExperimentResult> results, std::size_t rounds,
                         std::uint64_t seed) {
  ComparisonReport report;
  Rng rng(seed);

  std::vector<std::string> instances;
  std::vector<std::string> operators;
  for (const auto& r : results) {
    if (std::find(instances.begin(), instances.end(), r.instance_name) == instances.end())
      instances.push_back(r.instance_name);
    if (std::find(operators.begin(), operators.end(), r.operator_name) == operators.end())
      operators.push_back(r.operator_name);
  }

  for (const auto& inst : instances) {
    std::vector<const ExperimentResult*> rows;
    for (const auto& r : results)
      if (r.instance_name == inst) rows.push_back(&r);

    const ExperimentResult* reference = nullptr;
    for (const char* name : {"dnc", "dnc_mp", "dnc_pt"}) {
      for (const auto* r : rows)
        if (r->operator_name == name) {
          reference = r;
          break;
        }
      if (reference != nullptr) break;
    }

    for (const auto* r : rows) {
      OperatorSummary s{inst, r->operator_name, mean(r->final_best), sample_std(r->final_best), {}};
      if (reference != nullptr && r != reference)
        s.p_vs_reference = permutation_test(reference->final_best, r->final_best, rounds, rng);
      report.summaries.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j)
        report.pairwise.push_back({inst, rows[i]->operator_name, rows[j]->operator_name,
                                   permutation_test(rows[i]->final_best, rows[j]->final_best,
                                                    rounds, rng)});
  }
  for (const auto& op : operators) report.timing.push_back(summarize_timing(op, results));
  return report;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.imbue(std::locale::classic());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

void emit_csv(std::span<const ExperimentResult> results, const ComparisonReport& comparison,
              const std::filesystem::path& out_dir) {
  if (results.empty()) throw ConfigError("no results to write");
  std::filesystem::create_directories(out_dir);

  const auto summary_path = out_dir / "summary.csv";
  auto summary = open_csv(summary_path);
  summary << "instance,operator,mean,std,p_vs_reference\n";
  for (const auto& s : comparison.summaries) {
    summary << s.instance << ',' << s.operator_name << ',' << s.mean << ',' << s.std << ',';
    if (s.p_vs_reference) summary << *s.p_vs_reference;
    summary << '\n';
  }
  finish(summary, summary_path);

  const auto curves_path = out_dir / "curves.csv";
  auto curves = open_csv(curves_path);
  curves << "instance,operator,replicate,generation,best_fitness\n";
  for (const auto& r : results)
    for (std::size_t rep = 0; rep < r.best_per_generation.size(); ++rep)
      for (std::size_t g = 0; g < r.best_per_generation[rep].size(); ++g)
        curves << r.instance_name << ',' << r.operator_name << ',' << rep << ',' << g + 1 << ','
               << r.best_per_generation[rep][g] << '\n';
  finish(curves, curves_path);

  const auto timing_path = out_dir / "timing.csv";
  auto timing = open_csv(timing_path);
  timing << "operator,mean_s,max_s,std_s\n";
  for (const auto& t : comparison.timing)
    timing << t.operator_name << ',' << t.mean_s << ',' << t.max_s << ',' << t.std_s << '\n';
  finish(timing, timing_path);
}

PolicyParameters pretrain(const Problem& problem, const GAConfig& ga, const DncSettings& dnc,
                          std::uint64_t seed, const std::filesystem::path& out_path) {
  ga.validate();
  auto params = PolicyParameters::random(dnc.latent_dim, problem.gene_range(), seed);
  DncCrossover op(std::move(params), dnc, 2, true, "dnc");
  GAConfig cfg = ga;
  cfg.rng_seed = seed;
  Rng rng(seed);
  run_ga(problem, op, cfg, rng);
  save_parameters(op.params(), out_path);
  return op.params();
}

}  // namespace dnc
