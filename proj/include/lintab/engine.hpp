#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lintab/reader.hpp"
#include "lintab/tablespace.hpp"
#include "lintab/terms.hpp"

namespace lintab {

/// Which of the three linear-tabling optimizations are active. All eight
/// combinations are valid; all false is standard linear tabling.
struct StrategyConfig {
  bool dre = false;  ///< followers steal the pioneer's untried clauses
  bool dra = false;  ///< re-evaluation rounds only run looping alternatives
  bool drs = false;  ///< non-leaders only re-propagate looping and round-new answers

  /// "standard", "DRE", "DRA+DRS", ..., "All".
  std::string name() const;
  static std::array<StrategyConfig, 8> all();
  /// Inverse of name(); throws std::invalid_argument.
  static StrategyConfig parse(std::string_view name);

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

struct EvalStats {
  std::uint64_t alts_explored = 0;            ///< clause bodies entered for tabled predicates
  std::uint64_t nonleader_sols_consumed = 0;  ///< answers propagated by non-leader generators
  std::uint64_t rounds_started = 0;           ///< re-evaluation rounds started by leaders
  std::uint64_t followers_created = 0;
  std::uint64_t answers_emitted = 0;
  std::uint64_t generators_created = 0;
  std::uint64_t consumers_created = 0;
  std::uint64_t steps = 0;
  std::map<std::string, std::uint64_t> sld_calls;  ///< "name/arity" of non-tabled predicates

  std::uint64_t sld(const std::string& key) const {
    auto it = sld_calls.find(key);
    return it == sld_calls.end() ? 0 : it->second;
  }

  friend bool operator==(const EvalStats&, const EvalStats&) = default;
};

/// Thrown when an evaluation exceeds its step budget.
class LimitExceeded : public std::runtime_error {
 public:
  explicit LimitExceeded(std::uint64_t budget);
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t budget_;
};

enum class EventKind : std::uint8_t {
  Call,         ///< role: generator | consumer | follower | completed
  Alternative,  ///< index: clause; role: pioneer | follower
  NewSolution,  ///< flag: solution was new
  Fixpoint,     ///< flag: frame is a leader at its fix-point check
  RoundStart,   ///< index: SCC members sent back to loop_ready
  Consume,      ///< index: solution; role: generator | consumer | follower | completed
  Complete,
};

std::string_view to_string(EventKind k);

struct Event {
  EventKind kind = EventKind::Call;
  FrameId frame = 0;
  std::string_view role;
  std::int64_t index = -1;
  bool flag = false;
  std::uint32_t round = 0;  ///< generator entries of the frame so far
  std::string subgoal;      ///< canonical call
  std::string text;         ///< solution text where relevant

  std::string to_line() const;
};

struct Answer {
  /// Named query variables (those not starting with '_') in first
  /// occurrence order.
  std::vector<std::pair<std::string, Term>> bindings;
  /// The query goals with the answer applied.
  std::vector<Term> goals;

  /// "X=1, Y=2", or "true" for a query without named variables.
  std::string to_string() const;
};

struct EngineOptions {
  std::uint64_t step_budget = 1'000'000'000;
  /// Receives every evaluation event in order; unset means no event cost.
  std::function<void(const Event&)> on_event;
  /// Unknown-predicate warnings go here; nullptr silences them.
  std::ostream* diagnostics = nullptr;
  /// When set, answers are handed here as found and SolveResult::answers stays empty.
  std::function<void(const Answer&)> on_answer;
  /// Off: SolveResult::tables and table_dump are left empty (large benches).
  bool report_tables = true;
};

struct FrameReport {
  FrameId id = 0;
  Term call;
  FrameState state = FrameState::Ready;
  std::vector<Term> solutions;
  std::vector<std::uint32_t> looping_alternatives;
  std::size_t looping_solutions = 0;
  std::uint32_t rounds = 0;
};

struct SolveResult {
  std::vector<Answer> answers;
  EvalStats stats;
  std::vector<FrameReport> tables;
  std::string table_dump;
};

/// Linear-tabling resolution engine for one program and one strategy.
/// The table space is cleared at the start of every solve().
class Engine {
 public:
  Engine(const Program& program, StrategyConfig config, EngineOptions options = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  SolveResult solve(const std::vector<Term>& query);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SolveResult solve(const Program& program, const std::vector<Term>& query, StrategyConfig config,
                  EngineOptions options = {});

}  // namespace lintab
