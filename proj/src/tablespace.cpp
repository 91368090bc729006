#include "lintab/tablespace.hpp"

#include <algorithm>

namespace lintab {

std::string_view to_string(FrameState s) {
  switch (s) {
    case FrameState::Ready: return "ready";
    case FrameState::Evaluating: return "evaluating";
    case FrameState::Complete: return "complete";
    case FrameState::LoopReady: return "loop_ready";
    case FrameState::LoopEvaluating: return "loop_evaluating";
  }
  return "?";
}

bool is_valid_transition(FrameState from, FrameState to) {
  using S = FrameState;
  switch (from) {
    case S::Ready: return to == S::Evaluating;
    case S::Evaluating: return to == S::Complete || to == S::LoopReady;
    case S::LoopReady: return to == S::LoopEvaluating || to == S::Complete;
    case S::LoopEvaluating: return to == S::Complete || to == S::LoopReady;
    case S::Complete: return false;
  }
  return false;
}

NodeId Trie::new_root() {
  nodes_.emplace_back();
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::pair<NodeId, bool> Trie::insert(NodeId root, std::span<const Token> tokens) {
  NodeId cur = root;
  bool created = false;
  for (const Token& t : tokens) {
    Key key{cur, t.kind, t.arity, t.value};
    auto [it, inserted] = index_.try_emplace(key, static_cast<NodeId>(nodes_.size()));
    if (inserted) {
      TrieNode n;
      n.token = t;
      n.parent = cur;
      nodes_.push_back(n);
      NodeId id = it->second;
      TrieNode& p = nodes_[cur];
      if (p.last_child == kNone)
        p.first_child = id;
      else
        nodes_[p.last_child].next_sibling = id;
      p.last_child = id;
      created = true;
    }
    cur = it->second;
  }
  return {cur, created};
}

std::vector<CanonicalTerm> Trie::paths(NodeId root) const {
  std::vector<CanonicalTerm> out;
  CanonicalTerm prefix;
  // explicit DFS: (node, entered) pairs
  std::vector<std::pair<NodeId, bool>> stack;
  for (NodeId c = nodes_[root].first_child; c != kNone; c = nodes_[c].next_sibling) {
    stack.emplace_back(c, false);
  }
  std::reverse(stack.begin(), stack.end());
  if (nodes_[root].terminal != kNone) out.push_back({});
  while (!stack.empty()) {
    auto [id, entered] = stack.back();
    stack.pop_back();
    if (entered) {
      prefix.pop_back();
      continue;
    }
    const TrieNode& n = nodes_[id];
    prefix.push_back(n.token);
    if (n.terminal != kNone) out.push_back(prefix);
    stack.emplace_back(id, true);
    std::size_t mark = stack.size();
    for (NodeId c = n.first_child; c != kNone; c = nodes_[c].next_sibling) stack.emplace_back(c, false);
    std::reverse(stack.begin() + static_cast<std::ptrdiff_t>(mark), stack.end());
  }
  return out;
}

std::size_t Trie::terminal_count(NodeId root) const { return paths(root).size(); }

std::pair<FrameId, bool> TableSpace::subgoal_check_insert(std::uint32_t predicate,
                                                         std::span<const Token> call) {
  if (subgoal_roots_.size() <= predicate) subgoal_roots_.resize(predicate + 1, kNone);
  if (subgoal_roots_[predicate] == kNone) subgoal_roots_[predicate] = trie_.new_root();
  auto [leaf, created] = trie_.insert(subgoal_roots_[predicate], call);
  TrieNode& node = trie_.node(leaf);
  if (node.terminal != kNone) return {node.terminal, true};

  auto id = static_cast<FrameId>(frames_.size());
  node.terminal = id;
  SubgoalFrame& f = frames_.emplace_back();
  f.id = id;
  f.predicate = predicate;
  f.call.assign(call.begin(), call.end());
  for (const Token& t : call) {
    if (t.kind == Token::Kind::Var) f.call_vars = std::max(f.call_vars, static_cast<std::uint32_t>(t.value) + 1);
  }
  f.solution_root = trie_.new_root();
  return {id, false};
}

NodeId TableSpace::subgoal_root(std::uint32_t predicate) const {
  return predicate < subgoal_roots_.size() ? subgoal_roots_[predicate] : kNone;
}

bool TableSpace::solution_check_insert(FrameId fid, std::span<const Token> answer) {
  SubgoalFrame& f = frames_[fid];
  auto [leaf, created] = trie_.insert(f.solution_root, answer);
  TrieNode& node = trie_.node(leaf);
  if (node.terminal != kNone) return false;
  node.terminal = static_cast<std::uint32_t>(f.solutions.size());
  Solution sol;
  sol.leaf = leaf;
  sol.offset = static_cast<std::uint32_t>(tokens_.size());
  sol.length = static_cast<std::uint32_t>(answer.size());
  tokens_.insert(tokens_.end(), answer.begin(), answer.end());
  f.solutions.push_back(sol);
  return true;
}

void TableSpace::load_solutions(FrameId fid, LoadMode mode, std::vector<SolutionIndex>& out) const {
  out.clear();
  const SubgoalFrame& f = frames_[fid];
  const auto n = static_cast<SolutionIndex>(f.solutions.size());
  if (mode == LoadMode::All) {
    out.reserve(n);
    for (SolutionIndex i = 0; i < n; ++i) out.push_back(i);
    return;
  }
  const SolutionIndex round_start = f.first_solution_in_current_round;
  for (SolutionIndex i = 0; i < n; ++i) {
    if ((round_start != kNone && i >= round_start) || trie_.node(f.solutions[i].leaf).looping) out.push_back(i);
  }
}

std::vector<SolutionIndex> TableSpace::load_solutions(FrameId f, LoadMode mode) const {
  std::vector<SolutionIndex> out;
  load_solutions(f, mode, out);
  return out;
}

void TableSpace::mark_looping_alternative(FrameId fid, std::uint32_t clause_index) {
  SubgoalFrame& f = frames_[fid];
  if (f.looping_alt_mask.size() <= clause_index) f.looping_alt_mask.resize(clause_index + 1, false);
  if (f.looping_alt_mask[clause_index]) return;
  f.looping_alt_mask[clause_index] = true;
  f.looping_alternatives.push_back(clause_index);
}

void TableSpace::mark_looping_solution(FrameId fid, SolutionIndex s) {
  trie_.node(frames_[fid].solutions.at(s).leaf).looping = true;
}

bool TableSpace::is_looping_solution(FrameId fid, SolutionIndex s) const {
  return trie_.node(frames_[fid].solutions.at(s).leaf).looping;
}

void TableSpace::begin_round(FrameId fid) { frames_[fid].first_solution_in_current_round = kNone; }

void TableSpace::note_round_solution(FrameId fid, SolutionIndex s) {
  SubgoalFrame& f = frames_[fid];
  if (f.first_solution_in_current_round == kNone) f.first_solution_in_current_round = s;
}

std::span<const Solution> TableSpace::completed_iterator(FrameId fid) const {
  const SubgoalFrame& f = frames_[fid];
  if (f.state != FrameState::Complete) {
    throw InvariantViolation("completed_iterator on frame " + std::to_string(fid) + " in state " +
                             std::string(to_string(f.state)));
  }
  return f.solutions;
}

void TableSpace::set_state(FrameId fid, FrameState next) {
  SubgoalFrame& f = frames_[fid];
  if (!is_valid_transition(f.state, next)) {
    throw InvariantViolation("illegal state transition " + std::string(to_string(f.state)) + " -> " +
                             std::string(to_string(next)) + " on frame " + std::to_string(fid));
  }
  f.state = next;
}

CanonicalTerm TableSpace::instantiated_solution(FrameId fid, SolutionIndex s) const {
  const SubgoalFrame& f = frames_[fid];
  auto answer = solution_tokens(fid, s);
  std::vector<std::size_t> starts;
  for (std::size_t pos = 0; pos < answer.size(); pos = skip_term(answer, pos)) starts.push_back(pos);

  CanonicalTerm out;
  std::vector<std::int64_t> renumber;
  auto emit = [&](const Token& t) {
    if (t.kind != Token::Kind::Var) {
      out.push_back(t);
      return;
    }
    auto it = std::find(renumber.begin(), renumber.end(), t.value);
    if (it == renumber.end()) {
      renumber.push_back(t.value);
      it = renumber.end() - 1;
    }
    out.push_back(Token::var(static_cast<std::uint32_t>(it - renumber.begin())));
  };
  for (const Token& t : f.call) {
    if (t.kind != Token::Kind::Var) {
      out.push_back(t);
      continue;
    }
    std::size_t begin = starts.at(static_cast<std::size_t>(t.value));
    std::size_t end = skip_term(answer, begin);
    for (std::size_t i = begin; i < end; ++i) emit(answer[i]);
  }
  return out;
}

std::string TableSpace::dump(const SymbolTable& symbols) const {
  std::string out;
  for (const SubgoalFrame& f : frames_) {
    out += "subgoal ";
    out += render_tokens(f.call, symbols);
    out += " [";
    out += to_string(f.state);
    out += "] ";
    out += std::to_string(f.solutions.size());
    out += f.solutions.size() == 1 ? " solution\n" : " solutions\n";
    for (SolutionIndex i = 0; i < f.solutions.size(); ++i) {
      out += "  ";
      out += render_tokens(instantiated_solution(f.id, i), symbols);
      out += '\n';
    }
  }
  return out;
}

void TableSpace::clear() {
  trie_ = Trie{};
  subgoal_roots_.clear();
  frames_.clear();
  tokens_.clear();
}

}  // namespace lintab
