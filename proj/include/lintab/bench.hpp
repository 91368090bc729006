#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lintab/engine.hpp"

namespace lintab::bench {

enum class Shape : std::uint8_t { Pyramid, Cycle, Grid };
enum class Variant : std::uint8_t { RecursiveFirst, RecursiveLast };

std::string_view to_string(Shape s);
std::string_view to_string(Variant v);  // "first" | "last"
/// Throw std::invalid_argument on unknown names.
Shape parse_shape(std::string_view s);
Variant parse_variant(std::string_view s);

inline constexpr int kMaxDepth = 2000;

struct GraphConfig {
  Shape shape = Shape::Grid;
  int depth = 1;

  std::size_t node_count() const;
};

using Edge = std::pair<std::int64_t, std::int64_t>;

/// Deterministic edge list; node ids start at 1. Throws std::invalid_argument
/// when depth is outside [1, kMaxDepth].
std::vector<Edge> gen_edges(const GraphConfig& g);

/// "path_first" or "path_last".
std::string path_predicate(Variant v);
/// The tabled path predicate, and sld1..sld4 facts when `with_slds`.
/// Edge facts are appended by the caller.
std::string make_path_program(Variant v, bool with_slds);
std::string edge_facts(const std::vector<Edge>& edges);

/// Transitive closure by breadth-first search from every node.
std::set<Edge> oracle_reachability(const std::vector<Edge>& edges);

struct BenchSpec {
  GraphConfig graph;
  Variant variant = Variant::RecursiveFirst;
  bool with_slds = false;
  bool bound = false;  ///< query path(1,Z) instead of path(X,Z)
  std::vector<StrategyConfig> configs = {StrategyConfig{}};
  std::uint64_t step_budget = 10'000'000'000ULL;
};

struct CellResult {
  Shape shape = Shape::Grid;
  int depth = 0;
  Variant variant = Variant::RecursiveFirst;
  bool with_slds = false;
  bool bound = false;
  StrategyConfig config;
  EvalStats stats;
  std::size_t answers = 0;
  std::size_t oracle_answers = 0;
  bool matches_oracle = false;
  double wall_ms = 0;
  std::string error;  ///< empty unless the cell failed

  bool ok() const { return error.empty() && matches_oracle; }
};

struct BenchReport {
  std::vector<CellResult> cells;
  std::size_t oracle_answers = 0;

  bool all_ok() const;
  const CellResult* find(StrategyConfig c) const;
};

BenchReport run_matrix(const BenchSpec& spec);

/// Fixed-width table, one row per cell.
std::string render_text(const BenchReport& r);
/// One JSON object per line, one line per cell.
std::string render_jsonl(const BenchReport& r);
/// Inverse of render_jsonl up to wall time rounding. Throws std::invalid_argument.
BenchReport parse_jsonl(std::string_view text);

}  // namespace lintab::bench
