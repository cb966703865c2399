#include "dnc/domains.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::int64_t parse_int(std::string_view tok, std::size_t line, const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, std::string("expected integer ") + what + ", got '" + std::string(tok) + "'");
  return v;
}

std::size_t distinct_count(std::span<const Gene> genome) {
  std::vector<Gene> sorted(genome.begin(), genome.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

}  // namespace

InvalidMode parse_invalid_mode(std::string_view text) {
  if (text == "strict") return InvalidMode::strict;
  if (text == "graded") return InvalidMode::graded;
  throw ConfigError("unknown invalid-fitness mode '" + std::string(text) + "'");
}

GraphColoringInstance parse_dimacs(std::string_view text, std::string name) {
  GraphColoringInstance inst;
  inst.name = std::move(name);
  bool header = false;
  std::set<std::pair<std::size_t, std::size_t>> edges;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::size_t line_no = ln + 1;
    const auto line = trim(lines[ln]);
    if (line.empty() || line.front() == 'c') continue;
    const auto tok = tokens(line);
    if (tok[0] == "p") {
      if (header) throw ParseError(line_no, "duplicate problem line");
      if (tok.size() != 4 || (tok[1] != "edge" && tok[1] != "edges" && tok[1] != "col"))
        throw ParseError(line_no, "expected 'p edge V E'");
      const auto v = parse_int(tok[2], line_no, "vertex count");
      parse_int(tok[3], line_no, "edge count");
      if (v < 1) throw ParseError(line_no, "vertex count must be positive");
      inst.vertex_count = static_cast<std::size_t>(v);
      header = true;
    } else if (tok[0] == "e") {
      if (!header) throw ParseError(line_no, "edge before problem line");
      if (tok.size() != 3) throw ParseError(line_no, "expected 'e u v'");
      const auto u = parse_int(tok[1], line_no, "vertex");
      const auto v = parse_int(tok[2], line_no, "vertex");
      const auto limit = static_cast<std::int64_t>(inst.vertex_count);
      if (u < 1 || u > limit || v < 1 || v > limit)
        throw ParseError(line_no, "vertex index out of range 1.." + std::to_string(limit));
      if (u == v) continue;
      const auto a = static_cast<std::size_t>(std::min(u, v) - 1);
      const auto b = static_cast<std::size_t>(std::max(u, v) - 1);
      edges.emplace(a, b);
    } else {
      throw ParseError(line_no, "unrecognized line type '" + std::string(tok[0]) + "'");
    }
  }
  if (!header) throw ParseError(lines.size(), "missing 'p edge' problem line");
  inst.edges.assign(edges.begin(), edges.end());
  return inst;
}

std::string format_dimacs(const GraphColoringInstance& instance) {
  std::ostringstream out;
  out << "c " << instance.name << "\n";
  out << "p edge " << instance.vertex_count << ' ' << instance.edges.size() << "\n";
  for (const auto& [u, v] : instance.edges) out << "e " << u + 1 << ' ' << v + 1 << "\n";
  return out.str();
}

BinPackingInstance parse_bpp(std::string_view text) {
  const auto lines = split_lines(text);
  BinPackingInstance inst;
  if (lines.empty() || trim(lines[0]).empty()) throw ParseError(1, "missing instance name");
  inst.name = std::string(trim(lines[0]));
  if (lines.size() < 2) throw ParseError(2, "missing 'L C' header");
  const auto header = tokens(lines[1]);
  if (header.size() != 2) throw ParseError(2, "expected 'L C'");
  const auto count = parse_int(header[0], 2, "item count");
  inst.capacity = parse_int(header[1], 2, "capacity");
  if (count < 1) throw ParseError(2, "item count must be positive");
  if (inst.capacity < 1) throw ParseError(2, "capacity must be positive");

  std::size_t ln = 2;
  for (; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    const auto tok = tokens(line);
    if (tok.size() != 1) throw ParseError(ln + 1, "expected one weight per line");
    if (inst.weights.size() == static_cast<std::size_t>(count))
      throw ParseError(ln + 1, "more weights than the declared " + std::to_string(count));
    const auto w = parse_int(tok[0], ln + 1, "weight");
    if (w < 1) throw ParseError(ln + 1, "weights must be positive");
    if (w > inst.capacity)
      throw ParseError(ln + 1, "weight " + std::to_string(w) + " exceeds capacity " +
                                   std::to_string(inst.capacity));
    inst.weights.push_back(w);
  }
  if (inst.weights.size() != static_cast<std::size_t>(count))
    throw ParseError(lines.size(), "declared " + std::to_string(count) + " weights, found " +
                                       std::to_string(inst.weights.size()));
  return inst;
}

std::string format_bpp(const BinPackingInstance& instance) {
  std::ostringstream out;
  out << instance.name << "\n" << instance.weights.size() << ' ' << instance.capacity << "\n";
  for (auto w : instance.weights) out << w << "\n";
  return out.str();
}

double coloring_fitness(const GraphColoringInstance& instance, std::span<const Gene> genome,
                        InvalidMode mode) {
  if (genome.size() != instance.vertex_count)
    throw ShapeError("coloring genome length " + std::to_string(genome.size()) +
                     " != vertex count " + std::to_string(instance.vertex_count));
  std::size_t conflicts = 0;
  for (const auto& [u, v] : instance.edges)
    if (genome[u] == genome[v]) {
      if (mode == InvalidMode::strict) return kInvalidFitness;
      ++conflicts;
    }
  const auto colors = static_cast<double>(distinct_count(genome));
  if (conflicts == 0) return -colors;
  return -(static_cast<double>(conflicts) * static_cast<double>(instance.vertex_count) + colors);
}

double bpp_fitness(const BinPackingInstance& instance, std::span<const Gene> genome,
                   InvalidMode mode) {
  if (genome.size() != instance.weights.size())
    throw ShapeError("bin-packing genome length " + std::to_string(genome.size()) +
                     " != item count " + std::to_string(instance.weights.size()));
  Gene top = 0;
  for (Gene g : genome) {
    if (g < 0) throw ShapeError("negative bin index");
    top = std::max(top, g);
  }
  std::vector<std::int64_t> fill(static_cast<std::size_t>(top) + 1, 0);
  for (std::size_t i = 0; i < genome.size(); ++i)
    fill[static_cast<std::size_t>(genome[i])] += instance.weights[i];

  const auto cap = static_cast<double>(instance.capacity);
  double overflow = 0.0, sum_sq = 0.0;
  std::size_t used = 0;
  for (auto f : fill) {
    if (f == 0) continue;
    ++used;
    if (f > instance.capacity) overflow += static_cast<double>(f - instance.capacity);
    const double ratio = static_cast<double>(f) / cap;
    sum_sq += ratio * ratio;
  }
  if (overflow > 0.0) {
    if (mode == InvalidMode::strict) return kInvalidFitness;
    return -(overflow / cap + static_cast<double>(used));
  }
  return sum_sq / static_cast<double>(used);
}

BinPackingInstance generate_bpp(std::size_t n_items, std::int64_t weight_low,
                                std::int64_t weight_high, std::int64_t capacity, Rng& rng,
                                std::string name) {
  if (n_items == 0) throw DataError("generator needs at least one item");
  if (weight_low < 1 || weight_low > weight_high)
    throw DataError("weight bounds must satisfy 1 <= low <= high");
  if (weight_high > capacity) throw DataError("weight upper bound exceeds bin capacity");
  std::uniform_int_distribution<std::int64_t> weight(weight_low, weight_high);
  BinPackingInstance inst{std::move(name), {}, capacity};
  inst.weights.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) inst.weights.push_back(weight(rng));
  return inst;
}

GraphColoringProblem::GraphColoringProblem(GraphColoringInstance instance, InvalidMode mode)
    : instance_(std::move(instance)), mode_(mode) {
  if (instance_.vertex_count == 0) throw DataError("graph has no vertices");
}

double GraphColoringProblem::fitness(std::span<const Gene> genome) const {
  return coloring_fitness(instance_, genome, mode_);
}

double GraphColoringProblem::reported(double internal_fitness) const {
  return -internal_fitness;
}

BinPackingProblem::BinPackingProblem(BinPackingInstance instance, InvalidMode mode)
    : instance_(std::move(instance)), mode_(mode) {
  if (instance_.weights.empty()) throw DataError("bin-packing instance has no items");
  for (auto w : instance_.weights)
    if (w < 1 || w > instance_.capacity) throw DataError("item weight outside (0, capacity]");
}

double BinPackingProblem::fitness(std::span<const Gene> genome) const {
  return bpp_fitness(instance_, genome, mode_);
}

std::unique_ptr<Problem> load_problem(const std::filesystem::path& path, InvalidMode mode) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open instance file: " + path.string());
  std::stringstream buf;
  buf << file.rdbuf();
  const std::string text = buf.str();
  try {
    if (path.extension() == ".col") {
      auto inst = parse_dimacs(text, path.stem().string());
      return std::make_unique<GraphColoringProblem>(std::move(inst), mode);
    }
    auto inst = parse_bpp(text);
    inst.name = path.stem().string();
    return std::make_unique<BinPackingProblem>(std::move(inst), mode);
  } catch (const ParseError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dnc
