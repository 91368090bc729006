#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "lintab/terms.hpp"

namespace lintab {

/// Broken engine or table-space invariant. Always a bug, never bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using FrameId = std::uint32_t;
using NodeId = std::uint32_t;
using SolutionIndex = std::uint32_t;

inline constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

enum class FrameState : std::uint8_t { Ready, Evaluating, Complete, LoopReady, LoopEvaluating };

std::string_view to_string(FrameState s);

/// ready -> evaluating -> {complete | loop_ready};
/// loop_ready -> loop_evaluating -> {complete | loop_ready};
/// loop_ready -> complete for SCC members the last round never re-entered.
bool is_valid_transition(FrameState from, FrameState to);

struct TrieNode {
  Token token;
  NodeId parent = kNone;
  NodeId first_child = kNone;
  NodeId last_child = kNone;
  NodeId next_sibling = kNone;
  /// Frame id (subgoal trie) or insertion ordinal (solution trie); kNone
  /// for interior nodes.
  std::uint32_t terminal = kNone;
  bool looping = false;
};

/// Node pool holding every trie of one table space. Children keep their
/// first-insertion order; lookup goes through one hash index keyed by
/// (parent, token).
class Trie {
 public:
  NodeId new_root();
  /// Walks/extends the path for `tokens` from `root`; returns the final node
  /// and whether it was created by this call.
  std::pair<NodeId, bool> insert(NodeId root, std::span<const Token> tokens);

  const TrieNode& node(NodeId id) const { return nodes_[id]; }
  TrieNode& node(NodeId id) { return nodes_[id]; }

  /// Every root-to-terminal path under `root`, depth first in child order.
  std::vector<CanonicalTerm> paths(NodeId root) const;
  std::size_t terminal_count(NodeId root) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Key {
    NodeId parent;
    Token::Kind kind;
    std::uint32_t arity;
    std::int64_t value;

    friend bool operator==(const Key&, const Key&) = default;
    template <typename H>
    friend H AbslHashValue(H h, const Key& k) {
      return H::combine(std::move(h), k.parent, static_cast<std::uint8_t>(k.kind), k.arity, k.value);
    }
  };

  std::vector<TrieNode> nodes_;
  absl::flat_hash_map<Key, NodeId> index_;
};

/// A stored answer: its solution-trie leaf plus a flat copy of the tokens
/// for fast replay.
struct Solution {
  NodeId leaf = kNone;
  std::uint32_t offset = 0;
  std::uint32_t length = 0;
};

enum class LoadMode : std::uint8_t { All, LoopingPlusCurrentRound };

/// Per-call record. Answers are stored as the canonical tuple of the call's
/// variable bindings, so two answers are the same exactly when the
/// instantiated calls are variants.
struct SubgoalFrame {
  FrameId id = 0;
  std::uint32_t predicate = 0;
  CanonicalTerm call;
  std::uint32_t call_vars = 0;

  FrameState state = FrameState::Ready;
  NodeId solution_root = kNone;
  std::vector<Solution> solutions;

  bool is_leader = false;
  bool new_solutions = false;

  // looping alternatives in first-marked order, plus a membership mask by
  // clause index
  std::vector<std::uint32_t> looping_alternatives;
  std::vector<bool> looping_alt_mask;

  SolutionIndex first_solution_in_current_round = kNone;

  // clause cursor shared by the pioneer and its followers
  std::uint32_t next_alternative = 0;
  bool pioneer_active = false;
  std::uint32_t stack_depth = kNone;

  // Engine bookkeeping.
  const std::vector<std::uint32_t>* candidates = nullptr;  ///< matching clause indices
  std::uint32_t dep_pos = kNone;             ///< lowest stack position this frame was marked from
  std::vector<FrameId> pending_members;      ///< loop_ready SCC members awaiting re-entry
  std::vector<bool> executed_this_round;     ///< clause indices taken since the cursor reset
  std::uint32_t rounds = 0;                  ///< generator entries (first round included)
  std::uint32_t generator_cp = kNone;        ///< live generator choice point
};

class TableSpace {
 public:
  /// Looks up the variant of `call` in the subgoal trie of `predicate`,
  /// creating a ready frame when absent.
  std::pair<FrameId, bool> subgoal_check_insert(std::uint32_t predicate, std::span<const Token> call);

  /// Inserts an answer; true exactly when it was not stored before.
  bool solution_check_insert(FrameId f, std::span<const Token> answer);

  std::vector<SolutionIndex> load_solutions(FrameId f, LoadMode mode) const;
  void load_solutions(FrameId f, LoadMode mode, std::vector<SolutionIndex>& out) const;

  void mark_looping_alternative(FrameId f, std::uint32_t clause_index);
  void mark_looping_solution(FrameId f, SolutionIndex s);
  bool is_looping_solution(FrameId f, SolutionIndex s) const;

  /// Opens a new evaluation round for `f`: the current-round marker is cleared.
  void begin_round(FrameId f);
  /// Records `s` as the first answer of the round unless one is already set.
  void note_round_solution(FrameId f, SolutionIndex s);

  /// Answers of a complete frame in insertion order. Throws
  /// InvariantViolation when the frame is not complete.
  std::span<const Solution> completed_iterator(FrameId f) const;

  std::span<const Token> solution_tokens(FrameId f, SolutionIndex s) const {
    const Solution& sol = frames_[f].solutions[s];
    return {tokens_.data() + sol.offset, sol.length};
  }

  /// Checked state change; throws InvariantViolation on an illegal edge.
  void set_state(FrameId f, FrameState next);

  SubgoalFrame& frame(FrameId f) { return frames_[f]; }
  const SubgoalFrame& frame(FrameId f) const { return frames_[f]; }
  std::size_t frame_count() const { return frames_.size(); }
  const Trie& trie() const { return trie_; }
  /// Subgoal-trie root for a predicate, kNone if it was never called.
  NodeId subgoal_root(std::uint32_t predicate) const;

  /// The call with answer `s` applied, canonically renumbered.
  CanonicalTerm instantiated_solution(FrameId f, SolutionIndex s) const;

  /// One block per frame in creation order: header with call and state,
  /// then one line per answer in insertion order.
  std::string dump(const SymbolTable& symbols) const;

  void clear();

 private:
  Trie trie_;
  std::vector<NodeId> subgoal_roots_;
  std::deque<SubgoalFrame> frames_;  // stable addresses
  std::vector<Token> tokens_;
};

}  // namespace lintab
