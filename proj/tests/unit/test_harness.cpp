#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dnc/domains.hpp"
#include "dnc/harness.hpp"
#include "dnc/stats.hpp"

using namespace dnc;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::filesystem::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentConfig tiny_config(std::size_t reps) {
  ExperimentConfig c;
  c.ga.population_size = 12;
  c.ga.generations = 6;
  c.replicates = reps;
  c.base_seed = 77;
  c.operator_settings.dnc.latent_dim = 4;
  c.operator_settings.dnc.batch_size = 8;
  return c;
}

}  // namespace

TEST_CASE("run_experiment shape and determinism") {
  Rng rng(3);
  BinPackingProblem prob(generate_bpp(10, 10, 25, 100, rng, "b10"));
  const auto cfg = tiny_config(3);
  const auto a = run_experiment(prob, OperatorKind::dnc, cfg);
  CHECK(a.best_per_generation.size() == 3);
  CHECK(a.best_per_generation[0].size() == 6);
  CHECK(a.final_best.size() == 3);
  const auto b = run_experiment(prob, OperatorKind::dnc, cfg);
  CHECK(a.best_per_generation == b.best_per_generation);
  CHECK(a.final_best == b.final_best);

  auto par = cfg;
  par.parallel_replicates = 3;
  CHECK(run_experiment(prob, OperatorKind::dnc, par).final_best == a.final_best);

  auto one = cfg;
  one.replicates = 1;
  CHECK(run_experiment(prob, OperatorKind::one_point, one).final_best ==
        run_experiment(prob, OperatorKind::one_point, one).final_best);
}

TEST_CASE("compare and emit_csv") {
  Rng rng(3);
  BinPackingProblem prob(generate_bpp(10, 10, 25, 100, rng, "b10"));
  const auto cfg = tiny_config(4);
  std::vector<ExperimentResult> results{run_experiment(prob, OperatorKind::dnc, cfg),
                                        run_experiment(prob, OperatorKind::equiprobable_uniform, cfg)};
  const auto report = compare(results, 500, 1);
  REQUIRE(report.summaries.size() == 2);
  CHECK(report.summaries[0].operator_name == "dnc");
  CHECK_FALSE(report.summaries[0].p_vs_reference.has_value());
  REQUIRE(report.summaries[1].p_vs_reference.has_value());
  CHECK(*report.summaries[1].p_vs_reference >= 0.0);
  CHECK(*report.summaries[1].p_vs_reference <= 1.0);
  CHECK(report.summaries[1].mean == doctest::Approx(mean(results[1].final_best)));
  CHECK(report.timing.size() == 2);

  const auto dir = std::filesystem::temp_directory_path() / "dnc_unit" / "csv";
  std::filesystem::remove_all(dir);
  emit_csv(results, report, dir);
  CHECK(line_count(dir / "summary.csv") == 1 + 2);
  CHECK(line_count(dir / "curves.csv") == 1 + 2 * 4 * 6);
  CHECK(line_count(dir / "timing.csv") == 1 + 2);
  CHECK(slurp(dir / "timing.csv").rfind("operator,mean_s,max_s,std_s\n", 0) == 0);
  CHECK(slurp(dir / "summary.csv").rfind("instance,operator,mean,std,p_vs_reference\n", 0) == 0);
}

TEST_CASE("pretrain is deterministic and round-trips") {
  Rng rng(3);
  BinPackingProblem prob(generate_bpp(8, 10, 25, 100, rng, "b8"));
  GAConfig ga;
  ga.population_size = 10;
  ga.generations = 4;
  DncSettings s;
  s.latent_dim = 4;
  s.batch_size = 8;
  const auto dir = std::filesystem::temp_directory_path() / "dnc_unit";
  std::filesystem::create_directories(dir);
  const auto p1 = pretrain(prob, ga, s, 5, dir / "pt1.dncw");
  pretrain(prob, ga, s, 5, dir / "pt2.dncw");
  CHECK(slurp(dir / "pt1.dncw") == slurp(dir / "pt2.dncw"));
  CHECK(load_parameters(dir / "pt1.dncw") == p1);
  CHECK(p1.vocab_size() == 8);
}
