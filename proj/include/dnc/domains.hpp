#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dnc/common.hpp"
#include "dnc/ga.hpp"

namespace dnc {

/// How infeasible genomes are scored. `strict` gives -inf; `graded` is a
/// non-standard penalty that keeps a gradient toward feasibility.
enum class InvalidMode { strict, graded };

InvalidMode parse_invalid_mode(std::string_view text);

struct GraphColoringInstance {
  std::string name;
  std::size_t vertex_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // 0-indexed, u < v, unique
};

struct BinPackingInstance {
  std::string name;
  std::vector<std::int64_t> weights;
  std::int64_t capacity = 0;
};

/// DIMACS .col: "c" comments, one "p edge V E" line, "e u v" lines (1-indexed).
/// Self-loops are dropped and duplicate edges merged.
GraphColoringInstance parse_dimacs(std::string_view text, std::string name = "graph");

/// Canonical bin-packing text: line 1 name, line 2 "L C", then L weights.
BinPackingInstance parse_bpp(std::string_view text);

std::string format_bpp(const BinPackingInstance& instance);
std::string format_dimacs(const GraphColoringInstance& instance);

/// -(distinct colors) for proper colorings, otherwise invalid.
double coloring_fitness(const GraphColoringInstance& instance, std::span<const Gene> genome,
                        InvalidMode mode = InvalidMode::strict);

/// sum over used bins of (fill/C)^2 divided by the number of used bins; invalid
/// when a bin overflows.
double bpp_fitness(const BinPackingInstance& instance, std::span<const Gene> genome,
                   InvalidMode mode = InvalidMode::strict);

BinPackingInstance generate_bpp(std::size_t n_items, std::int64_t weight_low,
                                std::int64_t weight_high, std::int64_t capacity, Rng& rng,
                                std::string name = "generated");

class GraphColoringProblem final : public Problem {
public:
  explicit GraphColoringProblem(GraphColoringInstance instance,
                                InvalidMode mode = InvalidMode::strict);

  std::string name() const override { return instance_.name; }
  std::size_t genome_length() const override { return instance_.vertex_count; }
  std::size_t gene_range() const override { return instance_.vertex_count; }
  double fitness(std::span<const Gene> genome) const override;
  bool lower_is_better_reported() const override { return true; }
  /// Positive color count; +inf for invalid colorings.
  double reported(double internal_fitness) const override;

  const GraphColoringInstance& instance() const noexcept { return instance_; }

private:
  GraphColoringInstance instance_;
  InvalidMode mode_;
};

class BinPackingProblem final : public Problem {
public:
  explicit BinPackingProblem(BinPackingInstance instance, InvalidMode mode = InvalidMode::strict);

  std::string name() const override { return instance_.name; }
  std::size_t genome_length() const override { return instance_.weights.size(); }
  std::size_t gene_range() const override { return instance_.weights.size(); }
  double fitness(std::span<const Gene> genome) const override;

  const BinPackingInstance& instance() const noexcept { return instance_; }

private:
  BinPackingInstance instance_;
  InvalidMode mode_;
};

/// Loads a problem from disk: `.col` files are DIMACS graphs, anything else the
/// canonical bin-packing format. Throws DataError / ParseError.
std::unique_ptr<Problem> load_problem(const std::filesystem::path& path,
                                      InvalidMode mode = InvalidMode::strict);

}  // namespace dnc
