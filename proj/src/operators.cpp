#include "dnc/operators.hpp"

#include <algorithm>
#include <cmath>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

void require_parents(std::span<const Individual* const> parents, std::size_t m) {
  if (parents.size() != m)
    throw ShapeError("expected " + std::to_string(m) + " parents, got " +
                     std::to_string(parents.size()));
  for (const auto* p : parents)
    if (p->genome.size() != parents.front()->genome.size())
      throw ShapeError("parent genomes differ in length");
}

}  // namespace

Genome OnePointCrossover::cut(const Genome& first, const Genome& second, std::size_t cut) {
  Genome child(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(cut));
  child.insert(child.end(), second.begin() + static_cast<std::ptrdiff_t>(cut), second.end());
  return child;
}

Genome OnePointCrossover::apply(std::span<const Individual* const> parents, Rng& rng) {
  require_parents(parents, 2);
  const std::size_t n = parents[0]->genome.size();
  if (n < 2) throw DegenerateGenomeError("one-point crossover needs genomes of length >= 2");
  std::uniform_int_distribution<std::size_t> point(1, n - 1);
  return cut(parents[0]->genome, parents[1]->genome, point(rng));
}

Genome EquiprobableUniformCrossover::apply(std::span<const Individual* const> parents, Rng& rng) {
  require_parents(parents, parents_);
  std::uniform_int_distribution<std::size_t> pick(0, parents_ - 1);
  Genome child(parents[0]->genome.size());
  for (std::size_t j = 0; j < child.size(); ++j) child[j] = parents[pick(rng)]->genome[j];
  return child;
}

double AdaptiveUniformCrossover::first_parent_probability(double f1, double f2) {
  if (f1 == f2 || std::isinf(f1) || std::isinf(f2) || std::isnan(f1) || std::isnan(f2))
    return 0.5;
  const double low = std::min(f1, f2);
  const double shift = 1e-6 * (1.0 + std::abs(f1 - f2));
  const double a = f1 - low + shift;
  const double b = f2 - low + shift;
  return a / (a + b);
}

Genome AdaptiveUniformCrossover::apply(std::span<const Individual* const> parents, Rng& rng) {
  require_parents(parents, 2);
  const double q = first_parent_probability(parents[0]->fitness, parents[1]->fitness);
  std::bernoulli_distribution from_first(q);
  Genome child(parents[0]->genome.size());
  for (std::size_t j = 0; j < child.size(); ++j)
    child[j] = from_first(rng) ? parents[0]->genome[j] : parents[1]->genome[j];
  return child;
}

void normalize_rewards(std::span<CrossoverRecord> records) {
  if (records.empty()) return;
  double sum = 0.0, sum_sq = 0.0, low = 0.0;
  std::size_t finite = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.reward)) continue;
    low = finite == 0 ? r.reward : std::min(low, r.reward);
    sum += r.reward;
    sum_sq += r.reward * r.reward;
    ++finite;
  }
  double invalid = 0.0;
  if (finite > 0) {
    const double mean = sum / static_cast<double>(finite);
    const double sd = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(finite) - mean * mean));
    // A single distinct finite value has no spread; keep invalid strictly below it.
    invalid = low - (sd > 0.0 ? sd : 1.0);
  }

  std::vector<double> mapped(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    mapped[i] = std::isfinite(records[i].reward) ? records[i].reward : invalid;

  double mean = 0.0;
  for (double v : mapped) mean += v;
  mean /= static_cast<double>(mapped.size());
  double var = 0.0;
  for (double v : mapped) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(mapped.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    records[i].normalized_reward = sd > 1e-12 * (1.0 + std::abs(mean)) ? (mapped[i] - mean) / sd : 0.0;
}

DncCrossover::DncCrossover(PolicyParameters params, const DncSettings& settings, std::size_t arity,
                           bool training, std::string name)
    : params_(std::move(params)),
      settings_(settings),
      adam_(AdamState::for_parameters(params_, settings.learning_rate, settings.adam_beta1,
                                      settings.adam_beta2)),
      arity_(arity),
      training_(training),
      name_(std::move(name)),
      compiled_(std::make_unique<CompiledPolicy>(params_, settings.references)) {
  if (arity_ < 2) throw ConfigError("learned crossover needs at least two parents");
  if (settings_.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(settings_.epsilon >= 0.0 && settings_.epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0, 1]");
}

std::size_t DncCrossover::GenomeHash::operator()(const Genome& g) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (Gene x : g) h = (h ^ static_cast<std::size_t>(static_cast<std::uint32_t>(x))) * 1099511628211ull;
  return h;
}

const ParentEncoding& DncCrossover::encoding_for(const Genome& genome) {
  auto it = cache_.find(genome);
  if (it == cache_.end()) it = cache_.emplace(genome, compiled_->encode(genome)).first;
  return it->second;
}

Genome DncCrossover::apply(std::span<const Individual* const> parents, Rng& rng) {
  require_parents(parents, arity_);
  for (const auto* p : parents)
    for (Gene g : p->genome)
      if (g < 0 || static_cast<std::size_t>(g) >= params_.vocab_size())
        throw TransferIncompatibleError("gene value " + std::to_string(g) +
                                        " exceeds the policy vocabulary of " +
                                        std::to_string(params_.vocab_size()));

  std::vector<const Genome*> genomes;
  std::vector<const ParentEncoding*> encodings;
  for (const auto* p : parents) {
    genomes.push_back(&p->genome);
    encodings.push_back(&encoding_for(p->genome));
  }
  auto sample = compiled_->sample(genomes, encodings, settings_.epsilon, rng);

  if (training_) {
    CrossoverRecord rec;
    for (const auto* g : genomes) rec.parents.push_back(*g);
    rec.choices = std::move(sample.choices);
    rec.random_step = std::move(sample.random_step);
    rec.log_probs = std::move(sample.log_probs);
    rec.child = sample.child;
    buffer_.push_back(std::move(rec));
    awaiting_reward_ = true;
  }
  return sample.child;
}

void DncCrossover::offspring_evaluated(double fitness) {
  if (!training_ || !awaiting_reward_ || buffer_.empty()) return;
  buffer_.back().reward = fitness;
  buffer_.back().rewarded = true;
  awaiting_reward_ = false;
}

void DncCrossover::end_of_generation() {
  // Parents of the next generation are new genomes; keep the cache bounded.
  cache_.clear();
  if (training_ && buffer_.size() >= settings_.batch_size) train_step();
}

double DncCrossover::train_step() {
  std::erase_if(buffer_, [](const CrossoverRecord& r) { return !r.rewarded; });
  if (buffer_.empty()) return 0.0;
  normalize_rewards(buffer_);
  auto [loss, grads] =
      reinforce_gradients(params_, buffer_, settings_.references, settings_.threads);
  if (!std::isfinite(loss)) throw TrainingDivergenceError("surrogate loss is not finite");
  adam_step(params_, grads, adam_);
  if (!params_.all_finite()) throw TrainingDivergenceError("parameters became non-finite");
  buffer_.clear();
  awaiting_reward_ = false;
  compiled_ = std::make_unique<CompiledPolicy>(params_, settings_.references);
  cache_.clear();
  ++train_steps_;
  return loss;
}

OperatorKind parse_operator_kind(std::string_view text) {
  for (auto kind : {OperatorKind::one_point, OperatorKind::equiprobable_uniform,
                    OperatorKind::adaptive_uniform, OperatorKind::multi_parent_uniform,
                    OperatorKind::dnc, OperatorKind::dnc_pt, OperatorKind::dnc_mp})
    if (to_string(kind) == text) return kind;
  throw ConfigError("unknown operator '" + std::string(text) + "'");
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::one_point: return "one_point";
    case OperatorKind::equiprobable_uniform: return "equiprobable_uniform";
    case OperatorKind::adaptive_uniform: return "adaptive_uniform";
    case OperatorKind::multi_parent_uniform: return "multi_parent_uniform";
    case OperatorKind::dnc: return "dnc";
    case OperatorKind::dnc_pt: return "dnc_pt";
    case OperatorKind::dnc_mp: return "dnc_mp";
  }
  return "unknown";
}

bool is_learned(OperatorKind kind) {
  return kind == OperatorKind::dnc || kind == OperatorKind::dnc_pt || kind == OperatorKind::dnc_mp;
}

std::unique_ptr<CrossoverOperator> make_operator(OperatorKind kind,
                                                 const OperatorSettings& settings) {
  switch (kind) {
    case OperatorKind::one_point: return std::make_unique<OnePointCrossover>();
    case OperatorKind::equiprobable_uniform:
      return std::make_unique<EquiprobableUniformCrossover>(2);
    case OperatorKind::adaptive_uniform: return std::make_unique<AdaptiveUniformCrossover>();
    case OperatorKind::multi_parent_uniform:
      return std::make_unique<EquiprobableUniformCrossover>(3);
    case OperatorKind::dnc:
    case OperatorKind::dnc_mp: {
      if (settings.gene_range == 0) throw ConfigError("learned crossover needs the problem gene range");
      auto params = PolicyParameters::random(settings.dnc.latent_dim, settings.gene_range,
                                             settings.init_seed);
      const std::size_t arity = kind == OperatorKind::dnc_mp ? 3 : 2;
      return std::make_unique<DncCrossover>(std::move(params), settings.dnc, arity, true,
                                            std::string(to_string(kind)));
    }
    case OperatorKind::dnc_pt: {
      if (!settings.weights) throw ConfigError("dnc_pt requires a weights file");
      auto params = load_parameters(*settings.weights, settings.gene_range);
      return std::make_unique<DncCrossover>(std::move(params), settings.dnc, 2, false, "dnc_pt");
    }
  }
  throw ConfigError("unhandled operator kind");
}

}  // namespace dnc
