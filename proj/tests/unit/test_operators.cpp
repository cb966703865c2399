#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "../support/stats_helpers.hpp"
#include "dnc/errors.hpp"
#include "dnc/operators.hpp"

using namespace dnc;
using testing_stats::within_sigma;

namespace {

std::vector<const Individual*> ptrs(const std::vector<Individual>& v) {
  std::vector<const Individual*> out;
  for (const auto& i : v) out.push_back(&i);
  return out;
}

DncSettings small_settings(std::size_t batch = 4) {
  DncSettings s;
  s.latent_dim = 4;
  s.batch_size = batch;
  s.learning_rate = 1e-2;
  return s;
}

}  // namespace

TEST_CASE("one_point") {
  CHECK(OnePointCrossover::cut({0, 0, 0, 0}, {1, 1, 1, 1}, 2) == Genome{0, 0, 1, 1});
  OnePointCrossover op;
  Rng rng(1);
  std::vector<Individual> same{{{2, 3, 4}, 0}, {{2, 3, 4}, 0}};
  for (int i = 0; i < 20; ++i) CHECK(op.apply(ptrs(same), rng) == Genome{2, 3, 4});

  std::vector<Individual> par{{{0, 0, 0, 0}, 0}, {{1, 1, 1, 1}, 0}};
  std::vector<std::size_t> cuts(4, 0);
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = op.apply(ptrs(par), rng);
    ++cuts[static_cast<std::size_t>(std::count(c.begin(), c.end(), 0))];
  }
  CHECK(cuts[0] == 0);
  for (int k = 1; k <= 3; ++k) CHECK(within_sigma(cuts[k], trials, 1.0 / 3.0));

  std::vector<Individual> tiny{{{1}, 0}, {{2}, 0}};
  CHECK_THROWS_AS(op.apply(ptrs(tiny), rng), DegenerateGenomeError);
}

TEST_CASE("equiprobable uniform") {
  Rng rng(2);
  EquiprobableUniformCrossover two(2), three(3);
  CHECK(two.name() == "equiprobable_uniform");
  CHECK(three.name() == "multi_parent_uniform");
  CHECK(three.arity() == 3);
  std::vector<Individual> same{{{5, 6}, 0}, {{5, 6}, 0}};
  CHECK(two.apply(ptrs(same), rng) == Genome{5, 6});

  const std::size_t trials = 10000;
  std::vector<Individual> p2{{{0}, 0}, {{1}, 0}};
  std::size_t first = 0;
  for (std::size_t t = 0; t < trials; ++t) first += two.apply(ptrs(p2), rng)[0] == 0;
  CHECK(within_sigma(first, trials, 0.5));

  std::vector<Individual> p3{{{0, 0}, 0}, {{1, 1}, 0}, {{2, 2}, 0}};
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(three.apply(ptrs(p3), rng)[1])];
  for (auto c : counts) CHECK(within_sigma(c, trials, 1.0 / 3.0));
}

TEST_CASE("adaptive uniform") {
  CHECK(AdaptiveUniformCrossover::first_parent_probability(3, 3) == 0.5);
  CHECK(AdaptiveUniformCrossover::first_parent_probability(kInvalidFitness, 2) == 0.5);
  CHECK(AdaptiveUniformCrossover::first_parent_probability(2, kInvalidFitness) == 0.5);
  CHECK(AdaptiveUniformCrossover::first_parent_probability(0.9, 0.4) > 0.99);
  CHECK(AdaptiveUniformCrossover::first_parent_probability(0.4, 0.9) < 0.01);

  AdaptiveUniformCrossover op;
  Rng rng(3);
  const std::size_t trials = 10000;
  std::vector<Individual> eq{{{0}, 1.0}, {{1}, 1.0}};
  std::size_t first = 0;
  for (std::size_t t = 0; t < trials; ++t) first += op.apply(ptrs(eq), rng)[0] == 0;
  CHECK(within_sigma(first, trials, 0.5));
}

TEST_CASE("reward normalization") {
  std::vector<CrossoverRecord> recs(2);
  recs[0].reward = 1;
  recs[1].reward = 3;
  normalize_rewards(recs);
  CHECK(recs[0].normalized_reward == doctest::Approx(-1.0));
  CHECK(recs[1].normalized_reward == doctest::Approx(1.0));

  recs[0].reward = 5;
  recs[1].reward = kInvalidFitness;
  normalize_rewards(recs);
  CHECK(recs[0].normalized_reward > recs[1].normalized_reward);
  CHECK(std::isfinite(recs[1].normalized_reward));

  recs[0].reward = recs[1].reward = 2.5;
  normalize_rewards(recs);
  CHECK(recs[0].normalized_reward == 0.0);
  CHECK(recs[1].normalized_reward == 0.0);

  recs[0].reward = recs[1].reward = kInvalidFitness;
  normalize_rewards(recs);
  CHECK(recs[0].normalized_reward == 0.0);

  std::vector<CrossoverRecord> three(3);
  three[0].reward = 1;
  three[1].reward = 3;
  three[2].reward = kInvalidFitness;
  normalize_rewards(three);
  CHECK(three[2].normalized_reward < three[0].normalized_reward);
  CHECK(three[0].normalized_reward < three[1].normalized_reward);
}

TEST_CASE("dnc operator") {
  Rng rng(4);
  auto params = PolicyParameters::random(4, 6, 10);

  SUBCASE("identical parents and gene support") {
    DncCrossover op(params, small_settings(), 2, false, "dnc");
    std::vector<Individual> same{{{1, 2, 3}, 0}, {{1, 2, 3}, 0}};
    CHECK(op.apply(ptrs(same), rng) == Genome{1, 2, 3});
    std::vector<Individual> diff{{{0, 1, 2, 3}, 0}, {{5, 4, 3, 2}, 0}};
    for (int i = 0; i < 50; ++i) {
      const auto c = op.apply(ptrs(diff), rng);
      for (std::size_t j = 0; j < 4; ++j) CHECK((c[j] == diff[0].genome[j] || c[j] == diff[1].genome[j]));
    }
  }

  SUBCASE("vocabulary check") {
    DncCrossover op(params, small_settings(), 2, false, "dnc");
    std::vector<Individual> wide{{{0, 6}, 0}, {{1, 2}, 0}};
    CHECK_THROWS_AS(op.apply(ptrs(wide), rng), TransferIncompatibleError);
  }

  SUBCASE("buffer fills, flushes at the batch size, and training changes parameters") {
    DncCrossover op(params, small_settings(4), 2, true, "dnc");
    std::vector<Individual> par{{{0, 1, 2}, 0}, {{3, 4, 5}, 0}};
    for (int i = 0; i < 3; ++i) {
      const auto c = op.apply(ptrs(par), rng);
      op.offspring_evaluated(static_cast<double>(c[0] + c[1]));
    }
    CHECK(op.buffer().size() == 3);
    op.end_of_generation();
    CHECK(op.train_steps() == 0);
    CHECK(op.params() == params);
    for (int i = 0; i < 2; ++i) {
      const auto c = op.apply(ptrs(par), rng);
      op.offspring_evaluated(static_cast<double>(c[0] + c[1]));
    }
    op.end_of_generation();
    CHECK(op.train_steps() == 1);
    CHECK(op.buffer().empty());
    CHECK_FALSE(op.params() == params);
    CHECK(op.params().all_finite());
  }

  SUBCASE("frozen operator never records") {
    DncCrossover op(params, small_settings(1), 2, false, "dnc_pt");
    std::vector<Individual> par{{{0, 1, 2}, 0}, {{3, 4, 5}, 0}};
    op.apply(ptrs(par), rng);
    op.end_of_generation();
    CHECK(op.buffer().empty());
    CHECK(op.params() == params);
  }
}

TEST_CASE("make_operator") {
  OperatorSettings s;
  s.dnc = small_settings();
  s.gene_range = 5;
  CHECK(make_operator(OperatorKind::multi_parent_uniform, s)->arity() == 3);
  CHECK(make_operator(OperatorKind::dnc_mp, s)->arity() == 3);
  auto dnc = make_operator(OperatorKind::dnc, s);
  CHECK(dnc->arity() == 2);
  CHECK(dynamic_cast<DncCrossover&>(*dnc).training());
  CHECK_THROWS(make_operator(OperatorKind::dnc_pt, s));

  const auto path = std::filesystem::temp_directory_path() / "dnc_unit" / "mk.dncw";
  std::filesystem::create_directories(path.parent_path());
  save_parameters(PolicyParameters::random(4, 8, 1), path);
  s.weights = path;
  auto pt = make_operator(OperatorKind::dnc_pt, s);
  CHECK_FALSE(dynamic_cast<DncCrossover&>(*pt).training());
  s.gene_range = 9;
  CHECK_THROWS_AS(make_operator(OperatorKind::dnc_pt, s), TransferIncompatibleError);

  for (auto name : {"one_point", "equiprobable_uniform", "adaptive_uniform", "multi_parent_uniform",
                    "dnc", "dnc_pt", "dnc_mp"})
    CHECK(to_string(parse_operator_kind(name)) == name);
  CHECK_THROWS_AS(parse_operator_kind("two_point"), ConfigError);
}
