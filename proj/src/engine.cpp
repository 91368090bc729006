#include "lintab/engine.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

namespace lintab {

std::string StrategyConfig::name() const {
  if (dre && dra && drs) return "All";
  std::string s;
  auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += n;
  };
  add(dre, "DRE");
  add(dra, "DRA");
  add(drs, "DRS");
  return s.empty() ? "standard" : s;
}

std::array<StrategyConfig, 8> StrategyConfig::all() {
  // same row order as the usual strategy tables
  return {StrategyConfig{false, false, false}, StrategyConfig{true, false, false},
          StrategyConfig{false, true, false},  StrategyConfig{false, false, true},
          StrategyConfig{true, true, false},   StrategyConfig{true, false, true},
          StrategyConfig{false, true, true},   StrategyConfig{true, true, true}};
}

StrategyConfig StrategyConfig::parse(std::string_view name) {
  for (const auto& c : all()) {
    if (c.name() == name) return c;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

LimitExceeded::LimitExceeded(std::uint64_t budget)
    : std::runtime_error("step budget of " + std::to_string(budget) + " resolution steps exceeded"),
      budget_(budget) {}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Call: return "call";
    case EventKind::Alternative: return "alternative";
    case EventKind::NewSolution: return "new_solution";
    case EventKind::Fixpoint: return "fixpoint";
    case EventKind::RoundStart: return "round_start";
    case EventKind::Consume: return "consume";
    case EventKind::Complete: return "complete";
  }
  return "?";
}

std::string Event::to_line() const {
  std::string s(to_string(kind));
  s += " frame=" + std::to_string(frame);
  s += " round=" + std::to_string(round);
  if (!role.empty()) {
    s += " role=";
    s += role;
  }
  if (index >= 0) s += " index=" + std::to_string(index);
  switch (kind) {
    case EventKind::NewSolution: s += flag ? " new=true" : " new=false"; break;
    case EventKind::Fixpoint: s += flag ? " leader=true" : " leader=false"; break;
    default: break;
  }
  s += " subgoal=" + subgoal;
  if (!text.empty()) s += " solution=" + text;
  return s;
}

std::string Answer::to_string() const {
  if (bindings.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) s += ", ";
    s += bindings[i].first + "=" + bindings[i].second.to_string();
  }
  return s;
}

namespace {

enum : std::uint32_t { kBuiltinTrue = kNone - 1, kBuiltinFail = kNone - 2 };

struct Goal {
  std::vector<Token> tmpl;
  std::uint32_t pred = kNone;
};

struct CompiledClause {
  std::uint32_t index = 0;
  std::uint32_t nvars = 0;
  std::vector<Token> head;
  std::vector<Goal> body;
};

using IndexKey = std::tuple<std::uint8_t, std::uint32_t, std::int64_t>;

struct Predicate {
  PredicateKey key;
  std::string label;  // "name/arity"
  bool tabled = false;
  bool defined = false;
  bool warned = false;
  std::vector<CompiledClause> clauses;
  std::vector<std::uint32_t> all;
  std::vector<std::uint32_t> var_first;
  absl::flat_hash_map<IndexKey, std::vector<std::uint32_t>> by_first;
};

enum class NodeKind : std::uint8_t { Body, NewSolution, Answer };

struct Cont {
  std::uint32_t node = kNone;
  std::uint32_t goal = 0;
};

struct ContNode {
  NodeKind kind = NodeKind::Body;
  const CompiledClause* clause = nullptr;
  Addr base = 0;
  Cont parent;
  FrameId frame = kNone;
  Addr vars = 0;
};

enum class CpKind : std::uint8_t { Interior, Generator, Consumer, Follower };
enum class Phase : std::uint8_t { Clauses, Consuming, Completed };

struct ChoicePoint {
  CpKind kind = CpKind::Interior;
  Phase phase = Phase::Clauses;
  Addr heap_top = 0;
  std::uint32_t trail_mark = 0;
  std::uint32_t cont_top = 0;
  Cont cont;
  Addr goal = 0;
  std::uint32_t pred = 0;
  const std::vector<std::uint32_t>* list = nullptr;  // interior candidates
  std::uint32_t pos = 0;
  FrameId frame = kNone;
  Addr vars = 0;
  std::uint32_t newsol = kNone;
  std::uint32_t current_clause = kNone;
  SolutionIndex current_solution = kNone;
  std::vector<SolutionIndex> snapshot;
};

std::string_view role_of(const ChoicePoint& cp) {
  switch (cp.kind) {
    case CpKind::Generator: return cp.phase == Phase::Completed ? "completed" : "generator";
    case CpKind::Follower: return "follower";
    case CpKind::Consumer: return cp.phase == Phase::Completed ? "completed" : "consumer";
    case CpKind::Interior: return "interior";
  }
  return "?";
}

}  // namespace

struct Engine::Impl {
  Impl(const Program& program, StrategyConfig cfg, EngineOptions opts)
      : config(cfg), options(std::move(opts)) {
    compile(program);
  }

  StrategyConfig config;
  EngineOptions options;
  SymbolTable symbols;
  Symbol vars_functor = 0;
  std::vector<Predicate> preds;
  std::map<PredicateKey, std::uint32_t> pred_ids;

  Store store;
  TableSpace tables;
  std::vector<ContNode> conts;
  std::vector<ChoicePoint> cps;
  std::vector<std::uint32_t> gen_cps;  // indices of generator and follower choice points
  std::vector<FrameId> gstack;         // frames in evaluation, call order
  EvalStats stats;
  std::vector<std::uint64_t> sld_counts;

  CompiledClause query_clause;
  std::vector<std::pair<std::string, std::uint32_t>> query_vars;
  Addr query_base = 0;
  std::vector<Answer> answers;
  absl::flat_hash_set<std::string> answer_keys;

  // scratch buffers
  CanonicalTerm scratch_tokens;
  std::vector<Addr> scratch_vars;
  std::vector<Addr> scratch_slots;

  // ---------------------------------------------------------------- compile

  std::uint32_t pred_id(const PredicateKey& key) {
    auto it = pred_ids.find(key);
    if (it != pred_ids.end()) return it->second;
    auto id = static_cast<std::uint32_t>(preds.size());
    Predicate p;
    p.key = key;
    p.label = key.to_string();
    preds.push_back(std::move(p));
    pred_ids.emplace(key, id);
    return id;
  }

  void encode(const Term& t, std::vector<Token>& out) {
    switch (t.kind()) {
      case Term::Kind::Variable: out.push_back(Token::var(t.var_id())); break;
      case Term::Kind::Atom: out.push_back(Token::atom(symbols.intern(t.name()))); break;
      case Term::Kind::Integer: out.push_back(Token::integer(t.value())); break;
      case Term::Kind::Compound:
        out.push_back(Token::functor(symbols.intern(t.name()), static_cast<std::uint32_t>(t.arity())));
        for (const Term& a : t.args()) encode(a, out);
        break;
    }
  }

  Goal compile_goal(const Term& g) {
    Goal out;
    encode(g, out.tmpl);
    PredicateKey key{g.name(), static_cast<std::uint32_t>(g.arity())};
    if (key.arity == 0 && !pred_ids.contains(key)) {
      if (key.name == "true") {
        out.pred = kBuiltinTrue;
        return out;
      }
      if (key.name == "fail") {
        out.pred = kBuiltinFail;
        return out;
      }
    }
    out.pred = pred_id(key);
    return out;
  }

  CompiledClause compile_clause(const Clause& c, std::uint32_t index) {
    CompiledClause cc;
    cc.index = index;
    cc.nvars = c.var_count;
    encode(c.head, cc.head);
    for (const Term& g : c.body) cc.body.push_back(compile_goal(g));
    return cc;
  }

  static std::optional<IndexKey> index_key(const Token& t) {
    if (t.kind == Token::Kind::Var) return std::nullopt;
    return IndexKey{static_cast<std::uint8_t>(t.kind), t.arity, t.value};
  }

  void compile(const Program& program) {
    vars_functor = symbols.intern("$vars");
    // ids for every defined predicate first, so body references resolve to them
    for (const auto& [key, list] : program.predicates()) preds[pred_id(key)].defined = true;
    for (const auto& key : program.tabled()) preds[pred_id(key)].tabled = true;
    for (const auto& [key, list] : program.predicates()) {
      std::uint32_t id = pred_ids.at(key);
      std::vector<CompiledClause> compiled;
      for (std::uint32_t i = 0; i < list.size(); ++i) compiled.push_back(compile_clause(list[i], i));
      preds[id].clauses = std::move(compiled);
    }
    for (Predicate& p : preds) build_index(p);
  }

  static void build_index(Predicate& p) {
    p.all.clear();
    p.var_first.clear();
    p.by_first.clear();
    std::vector<IndexKey> keys;
    for (const auto& c : p.clauses) {
      p.all.push_back(c.index);
      if (p.key.arity == 0) continue;
      auto k = index_key(c.head[1]);
      if (!k) {
        p.var_first.push_back(c.index);
      } else if (std::find(keys.begin(), keys.end(), *k) == keys.end()) {
        keys.push_back(*k);
      }
    }
    if (p.key.arity == 0) return;
    for (const IndexKey& k : keys) {
      std::vector<std::uint32_t> list;
      for (const auto& c : p.clauses) {
        auto ck = index_key(c.head[1]);
        if (!ck || *ck == k) list.push_back(c.index);
      }
      p.by_first.emplace(k, std::move(list));
    }
  }

  const std::vector<std::uint32_t>& candidates(const Predicate& p, Addr goal) const {
    if (p.key.arity == 0 || p.by_first.empty()) return p.all;
    Addr a = store.deref(goal + 1);
    const Cell& c = store.cell(a);
    if (c.tag == Tag::Ref) return p.all;
    Token::Kind kind = c.tag == Tag::Atom ? Token::Kind::Atom
                       : c.tag == Tag::Int ? Token::Kind::Int
                                           : Token::Kind::Functor;
    auto it = p.by_first.find(IndexKey{static_cast<std::uint8_t>(kind), c.arity, c.value});
    return it == p.by_first.end() ? p.var_first : it->second;
  }

  // ------------------------------------------------------------------ events

  bool tracing() const { return static_cast<bool>(options.on_event); }

  void emit(EventKind kind, FrameId f, std::string_view role = {}, std::int64_t index = -1,
            bool flag = false, std::string text = {}) {
    Event e;
    e.kind = kind;
    e.frame = f;
    e.role = role;
    e.index = index;
    e.flag = flag;
    e.round = tables.frame(f).rounds;
    e.subgoal = render_tokens(tables.frame(f).call, symbols);
    e.text = std::move(text);
    options.on_event(e);
  }

  // --------------------------------------------------------------- machinery

  void tick() {
    if (++stats.steps > options.step_budget) throw LimitExceeded(options.step_budget);
  }

  std::uint32_t new_node(const ContNode& n) {
    conts.push_back(n);
    return static_cast<std::uint32_t>(conts.size() - 1);
  }

  ChoicePoint& push_cp(CpKind kind) {
    ChoicePoint& cp = cps.emplace_back();
    cp.kind = kind;
    cp.heap_top = store.heap_top();
    cp.trail_mark = static_cast<std::uint32_t>(store.trail_mark());
    cp.cont_top = static_cast<std::uint32_t>(conts.size());
    if (kind == CpKind::Generator || kind == CpKind::Follower)
      gen_cps.push_back(static_cast<std::uint32_t>(cps.size() - 1));
    return cp;
  }

  void pop_cp() {
    const ChoicePoint& cp = cps.back();
    if (cp.kind == CpKind::Generator || cp.kind == CpKind::Follower) gen_cps.pop_back();
    if (cp.kind == CpKind::Generator) {
      SubgoalFrame& f = tables.frame(cp.frame);
      f.pioneer_active = false;
      f.generator_cp = kNone;
    }
    cps.pop_back();
  }

  void restore(const ChoicePoint& cp) {
    store.undo_to(cp.trail_mark);
    store.truncate(cp.heap_top);
    conts.resize(cp.cont_top);
  }

  /// Unifies the head and enters the body; `next` runs after the body.
  bool activate(const CompiledClause& c, Addr goal, Cont next, Cont& k) {
    Addr base = store.make_vars(c.nvars);
    std::size_t pos = 0;
    if (!store.unify_template(c.head, pos, base, goal)) return false;
    if (c.body.empty()) {
      k = next;
    } else {
      ContNode n;
      n.clause = &c;
      n.base = base;
      n.parent = next;
      k = Cont{new_node(n), 0};
    }
    return true;
  }

  // -------------------------------------------------------------- main loop

  void run(Cont start) {
    Cont k = start;
    bool ok = true;
    for (;;) {
      if (ok) {
        ok = step(k);
      } else {
        if (cps.empty()) break;
        ok = resume(k);
      }
    }
  }

  bool step(Cont& k) {
    const ContNode n = conts[k.node];
    switch (n.kind) {
      case NodeKind::Answer:
        record_answer();
        return false;
      case NodeKind::NewSolution:
        new_solution(n.frame, n.vars);
        return false;
      case NodeKind::Body:
        break;
    }
    const auto& body = n.clause->body;
    if (k.goal >= body.size()) {
      k = n.parent;
      return true;
    }
    const Goal& g = body[k.goal];
    Cont next = k.goal + 1 == body.size() ? n.parent : Cont{k.node, k.goal + 1};
    tick();
    if (g.pred == kBuiltinTrue) {
      k = next;
      return true;
    }
    if (g.pred == kBuiltinFail) return false;
    std::size_t pos = 0;
    Addr goal = store.instantiate(g.tmpl, pos, n.base);
    if (preds[g.pred].tabled) return tabled_call(g.pred, goal, next, k);
    return call_nontabled(g.pred, goal, next, k);
  }

  bool resume(Cont& k) {
    switch (cps.back().kind) {
      case CpKind::Interior: return retry_interior(k);
      case CpKind::Generator: return resume_generator(k);
      case CpKind::Follower: return resume_follower(k);
      case CpKind::Consumer: return deliver(k);
    }
    return false;
  }

  // ------------------------------------------------------- non-tabled calls

  bool call_nontabled(std::uint32_t pid, Addr goal, Cont next, Cont& k) {
    Predicate& p = preds[pid];
    ++sld_counts[pid];
    if (!p.defined) {
      if (!p.warned && options.diagnostics) {
        *options.diagnostics << "warning: unknown predicate " << p.label << " fails\n";
      }
      p.warned = true;
      return false;
    }
    const auto& list = candidates(p, goal);
    if (list.empty()) return false;
    if (list.size() == 1) return activate(p.clauses[list[0]], goal, next, k);
    ChoicePoint& cp = push_cp(CpKind::Interior);
    cp.goal = goal;
    cp.pred = pid;
    cp.list = &list;
    cp.cont = next;
    return retry_interior(k);
  }

  bool retry_interior(Cont& k) {
    for (;;) {
      ChoicePoint& cp = cps.back();
      restore(cp);
      const Predicate& p = preds[cp.pred];
      std::uint32_t idx = (*cp.list)[cp.pos++];
      bool last = cp.pos == cp.list->size();
      Addr goal = cp.goal;
      Cont next = cp.cont;
      if (last) pop_cp();
      tick();
      if (activate(p.clauses[idx], goal, next, k)) return true;
      if (last) return false;
    }
  }

  // ----------------------------------------------------------- tabled calls

  const std::vector<std::uint32_t>& alternatives(const SubgoalFrame& f) const {
    if (config.dra && f.state == FrameState::LoopEvaluating) return f.looping_alternatives;
    return *f.candidates;
  }

  bool has_unexploited_alternatives(const SubgoalFrame& f) const {
    return f.next_alternative < alternatives(f).size();
  }

  bool tabled_call(std::uint32_t pid, Addr goal, Cont next, Cont& k) {
    scratch_tokens.clear();
    scratch_vars.clear();
    store.canonicalize(goal, scratch_tokens, scratch_vars);
    auto [fid, existed] = tables.subgoal_check_insert(pid, scratch_tokens);
    SubgoalFrame& f = tables.frame(fid);
    if (!existed) f.candidates = &candidates(preds[pid], goal);
    Addr vars = scratch_vars.empty() ? 0 : store.make_compound(vars_functor, scratch_vars);

    switch (f.state) {
      case FrameState::Ready:
        tables.set_state(fid, FrameState::Evaluating);
        push_generator(fid, goal, vars, next);
        return resume_generator(k);

      case FrameState::LoopReady:
        tables.set_state(fid, FrameState::LoopEvaluating);
        tables.begin_round(fid);
        push_generator(fid, goal, vars, next);
        return resume_generator(k);

      case FrameState::Evaluating:
      case FrameState::LoopEvaluating: {
        mark_current_branch_non_leader(fid);
        if (config.dra || config.drs) mark_current_branch_looping(fid);
        if (config.dre && has_unexploited_alternatives(f)) {
          std::uint32_t newsol = new_node(ContNode{NodeKind::NewSolution, nullptr, 0, {}, fid, vars});
          ChoicePoint& cp = push_cp(CpKind::Follower);
          cp.goal = goal;
          cp.cont = next;
          cp.frame = fid;
          cp.vars = vars;
          cp.newsol = newsol;
          ++stats.followers_created;
          if (tracing()) emit(EventKind::Call, fid, "follower");
          return resume_follower(k);
        }
        ChoicePoint& cp = push_cp(CpKind::Consumer);
        cp.goal = goal;
        cp.cont = next;
        cp.frame = fid;
        cp.vars = vars;
        ++stats.consumers_created;
        if (tracing()) emit(EventKind::Call, fid, "consumer");
        return deliver(k);
      }

      case FrameState::Complete: {
        ChoicePoint& cp = push_cp(CpKind::Consumer);
        cp.phase = Phase::Completed;
        cp.goal = goal;
        cp.cont = next;
        cp.frame = fid;
        cp.vars = vars;
        if (tracing()) emit(EventKind::Call, fid, "completed");
        return deliver(k);
      }
    }
    return false;
  }

  void push_generator(FrameId fid, Addr goal, Addr vars, Cont next) {
    std::uint32_t newsol = new_node(ContNode{NodeKind::NewSolution, nullptr, 0, {}, fid, vars});
    ChoicePoint& cp = push_cp(CpKind::Generator);
    cp.goal = goal;
    cp.cont = next;
    cp.frame = fid;
    cp.vars = vars;
    cp.newsol = newsol;

    SubgoalFrame& f = tables.frame(fid);
    f.next_alternative = 0;
    f.executed_this_round.assign(preds[f.predicate].clauses.size(), false);
    f.is_leader = true;
    f.dep_pos = kNone;
    f.pioneer_active = true;
    f.generator_cp = static_cast<std::uint32_t>(cps.size() - 1);
    f.stack_depth = static_cast<std::uint32_t>(gstack.size());
    gstack.push_back(fid);
    ++f.rounds;
    ++stats.generators_created;
    if (tracing()) emit(EventKind::Call, fid, "generator");
  }

  /// Takes the next clause from the frame's shared cursor and enters it.
  /// Returns false when the cursor is exhausted.
  bool next_clause(bool follower, Cont& k, bool& entered) {
    entered = false;
    for (;;) {
      ChoicePoint& cp = cps.back();
      restore(cp);
      SubgoalFrame& f = tables.frame(cp.frame);
      const auto& list = alternatives(f);
      if (f.next_alternative >= list.size()) return false;
      std::uint32_t clause = list[f.next_alternative++];
      if (f.executed_this_round[clause]) {
        throw InvariantViolation("clause " + std::to_string(clause) + " of frame " + std::to_string(f.id) +
                                 " taken twice in one round");
      }
      f.executed_this_round[clause] = true;
      if (config.dra && f.state == FrameState::LoopEvaluating &&
          !(clause < f.looping_alt_mask.size() && f.looping_alt_mask[clause])) {
        throw InvariantViolation("non-looping clause dispatched in a re-evaluation round");
      }
      cp.current_clause = clause;
      tick();
      const CompiledClause& c = preds[f.predicate].clauses[clause];
      if (activate(c, cp.goal, Cont{cp.newsol, 0}, k)) {
        ++stats.alts_explored;
        if (tracing()) emit(EventKind::Alternative, f.id, follower ? "follower" : "pioneer", clause);
        entered = true;
        return true;
      }
    }
  }

  bool resume_generator(Cont& k) {
    for (;;) {
      ChoicePoint& cp = cps.back();
      if (cp.phase != Phase::Clauses) return deliver(k);
      bool entered = false;
      if (next_clause(false, k, entered)) return true;
      if (fixpoint_check()) continue;  // new round: the cursor was reset
      return deliver(k);
    }
  }

  bool resume_follower(Cont& k) {
    ChoicePoint& cp = cps.back();
    if (cp.phase == Phase::Clauses) {
      bool entered = false;
      if (next_clause(true, k, entered)) return true;
      // stolen clauses exhausted: fall back to consuming everything stored
      ChoicePoint& top = cps.back();
      top.phase = Phase::Consuming;
      top.pos = 0;
    }
    return deliver(k);
  }

  /// Runs on the top generator choice point once its cursor is exhausted.
  /// Returns true when a new round was started on it.
  bool fixpoint_check() {
    ChoicePoint& cp = cps.back();
    const FrameId fid = cp.frame;
    SubgoalFrame& f = tables.frame(fid);
    if (tracing()) emit(EventKind::Fixpoint, fid, {}, -1, f.is_leader);

    if (f.is_leader) {
      if (f.new_solutions) {
        f.new_solutions = false;
        std::size_t members = start_round(f);
        tables.set_state(fid, FrameState::LoopReady);
        tables.set_state(fid, FrameState::LoopEvaluating);
        // round marker left alone: if this frame is later absorbed by an older
        // leader, everything since it was entered counts for that leader's round
        f.next_alternative = 0;
        std::fill(f.executed_this_round.begin(), f.executed_this_round.end(), false);
        ++f.rounds;
        ++stats.rounds_started;
        if (tracing()) emit(EventKind::RoundStart, fid, {}, static_cast<std::int64_t>(members));
        return true;
      }
      complete_scc(f);
      cp.phase = Phase::Completed;
      cp.pos = 0;
      return false;
    }

    SubgoalFrame& leader = current_leader(f);
    if (f.new_solutions) leader.new_solutions = true;
    f.new_solutions = false;
    move_pending(f, leader);
    cp.phase = Phase::Consuming;
    cp.pos = 0;
    tables.load_solutions(fid, config.drs ? LoadMode::LoopingPlusCurrentRound : LoadMode::All, cp.snapshot);
    return false;
  }

  static void move_pending(SubgoalFrame& from, SubgoalFrame& to) {
    if (from.pending_members.empty()) return;
    to.pending_members.insert(to.pending_members.end(), from.pending_members.begin(),
                              from.pending_members.end());
    from.pending_members.clear();
  }

  /// Sends every SCC member above `leader` back to loop_ready.
  std::size_t start_round(SubgoalFrame& leader) {
    std::vector<FrameId> keep;
    for (FrameId m : leader.pending_members) {
      if (tables.frame(m).state == FrameState::LoopReady) keep.push_back(m);
    }
    std::size_t members = 0;
    for (std::size_t p = leader.stack_depth + 1; p < gstack.size(); ++p) {
      SubgoalFrame& m = tables.frame(gstack[p]);
      tables.set_state(m.id, FrameState::LoopReady);
      m.stack_depth = kNone;
      for (FrameId x : m.pending_members) {
        if (tables.frame(x).state == FrameState::LoopReady) keep.push_back(x);
      }
      m.pending_members.clear();
      keep.push_back(m.id);
      ++members;
    }
    gstack.resize(leader.stack_depth + 1);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    leader.pending_members = std::move(keep);
    return members;
  }

  void complete_frame(SubgoalFrame& m) {
    tables.set_state(m.id, FrameState::Complete);
    m.stack_depth = kNone;
    if (tracing()) emit(EventKind::Complete, m.id);
  }

  void complete_scc(SubgoalFrame& leader) {
    const std::uint32_t base = leader.stack_depth;
    for (std::size_t p = base; p < gstack.size(); ++p) {
      SubgoalFrame& m = tables.frame(gstack[p]);
      for (FrameId x : m.pending_members) {
        if (tables.frame(x).state == FrameState::LoopReady) complete_frame(tables.frame(x));
      }
      m.pending_members.clear();
      complete_frame(m);
    }
    gstack.resize(base);
  }

  SubgoalFrame& current_leader(const SubgoalFrame& f) {
    for (std::size_t p = f.stack_depth + 1; p-- > 0;) {
      SubgoalFrame& g = tables.frame(gstack[p]);
      if (g.is_leader) return g;
    }
    throw InvariantViolation("no leader below frame " + std::to_string(f.id));
  }

  void mark_current_branch_non_leader(FrameId target) {
    const std::uint32_t s = tables.frame(target).stack_depth;
    for (std::size_t p = gstack.size(); p-- > s + 1;) {
      SubgoalFrame& g = tables.frame(gstack[p]);
      // everything between s and g was already marked from at or below s
      if (!g.is_leader && g.dep_pos <= s) break;
      g.is_leader = false;
      g.dep_pos = std::min(g.dep_pos, s);
    }
  }

  void mark_current_branch_looping(FrameId target) {
    const std::uint32_t s = tables.frame(target).stack_depth;
    for (std::size_t i = gen_cps.size(); i-- > 0;) {
      const ChoicePoint& cp = cps[gen_cps[i]];
      SubgoalFrame& g = tables.frame(cp.frame);
      if (cp.kind == CpKind::Generator) {
        if (g.state == FrameState::Complete) continue;
        if (g.stack_depth < s) break;
      }
      if (cp.phase == Phase::Clauses) {
        if (config.dra && cp.current_clause != kNone) tables.mark_looping_alternative(g.id, cp.current_clause);
      } else if (cp.phase == Phase::Consuming && cp.kind == CpKind::Generator) {
        if (config.drs && cp.current_solution != kNone) tables.mark_looping_solution(g.id, cp.current_solution);
      }
      if (cp.kind == CpKind::Generator && g.id == target) break;
    }
  }

  void new_solution(FrameId fid, Addr vars) {
    scratch_tokens.clear();
    scratch_vars.clear();
    if (vars != 0) {
      const std::uint32_t n = store.cell(vars).arity;
      for (std::uint32_t i = 1; i <= n; ++i) store.canonicalize(vars + i, scratch_tokens, scratch_vars);
    }
    SubgoalFrame& f = tables.frame(fid);
    if (f.state != FrameState::Evaluating && f.state != FrameState::LoopEvaluating) {
      throw InvariantViolation("new solution for frame " + std::to_string(fid) + " in state " +
                               std::string(to_string(f.state)));
    }
    bool is_new = tables.solution_check_insert(fid, scratch_tokens);
    if (is_new) {
      f.new_solutions = true;
      if (config.drs) tables.note_round_solution(fid, static_cast<SolutionIndex>(f.solutions.size() - 1));
    }
    if (tracing()) {
      SolutionIndex idx = is_new ? static_cast<SolutionIndex>(f.solutions.size() - 1) : kNone;
      emit(EventKind::NewSolution, fid, {}, is_new ? static_cast<std::int64_t>(idx) : -1, is_new,
           render_tokens(scratch_tokens, symbols));
    }
  }

  /// Feeds the next answer of the top choice point into its continuation.
  bool deliver(Cont& k) {
    ChoicePoint& cp = cps.back();
    restore(cp);
    SubgoalFrame& f = tables.frame(cp.frame);
    SolutionIndex s = kNone;
    if (cp.kind == CpKind::Generator && cp.phase == Phase::Consuming) {
      if (cp.pos < cp.snapshot.size()) s = cp.snapshot[cp.pos++];
    } else if (cp.pos < f.solutions.size()) {
      s = cp.pos++;
    }
    if (s == kNone) {
      pop_cp();
      return false;
    }
    tick();
    if (cp.kind == CpKind::Generator && cp.phase == Phase::Consuming) {
      ++stats.nonleader_sols_consumed;
      if (config.drs && f.state == FrameState::LoopEvaluating) {
        bool allowed = tables.is_looping_solution(f.id, s) ||
                       (f.first_solution_in_current_round != kNone && s >= f.first_solution_in_current_round);
        if (!allowed) throw InvariantViolation("non-looping solution re-propagated in a re-evaluation round");
      }
    }
    cp.current_solution = s;
    if (cp.vars != 0) store.bind_tuple(cp.vars, tables.solution_tokens(f.id, s), scratch_slots);
    k = cp.cont;
    if (tracing()) emit(EventKind::Consume, f.id, role_of(cp), s);
    return true;
  }

  // ---------------------------------------------------------------- answers

  void record_answer() {
    scratch_tokens.clear();
    std::vector<Addr> canon_vars;
    for (const auto& [name, id] : query_vars) store.canonicalize(query_base + id, scratch_tokens, canon_vars);
    if (!answer_keys.insert(render_tokens(scratch_tokens, symbols)).second) return;
    Answer a;
    std::vector<Addr> var_map;
    for (const auto& [name, id] : query_vars) a.bindings.emplace_back(name, store.to_term(query_base + id, symbols, var_map));
    for (const Goal& g : query_clause.body) {
      std::size_t pos = 0;
      Addr t = store.instantiate(g.tmpl, pos, query_base);
      a.goals.push_back(store.to_term(t, symbols, var_map));
    }
    ++stats.answers_emitted;
    if (options.on_answer) {
      options.on_answer(a);
    } else {
      answers.push_back(std::move(a));
    }
  }

  // ------------------------------------------------------------------ solve

  void reset() {
    store = Store{};
    tables.clear();
    conts.clear();
    cps.clear();
    gen_cps.clear();
    gstack.clear();
    stats = EvalStats{};
    sld_counts.assign(preds.size(), 0);
    answers.clear();
    answer_keys.clear();
  }

  SolveResult solve(const std::vector<Term>& query) {
    if (query.empty()) throw std::invalid_argument("empty query");
    query_clause = CompiledClause{};
    query_vars.clear();
    std::uint32_t nvars = 0;
    std::vector<std::pair<std::uint32_t, std::string>> seen;
    auto collect = [&](auto& self, const Term& t) -> void {
      if (t.is_variable()) {
        nvars = std::max(nvars, t.var_id() + 1);
        bool known = std::any_of(seen.begin(), seen.end(), [&](auto& p) { return p.first == t.var_id(); });
        if (!known) {
          seen.emplace_back(t.var_id(), t.name());
          if (!t.name().empty() && t.name()[0] != '_') query_vars.emplace_back(t.name(), t.var_id());
        }
      }
      for (const Term& a : t.args()) self(self, a);
    };
    for (const Term& g : query) {
      if (!g.is_callable()) throw std::invalid_argument("query goal is not callable: " + g.to_string());
      collect(collect, g);
      query_clause.body.push_back(compile_goal(g));
    }
    query_clause.nvars = nvars;
    sld_counts.resize(preds.size(), 0);
    reset();

    query_base = store.make_vars(nvars);
    std::uint32_t answer_node = new_node(ContNode{NodeKind::Answer, nullptr, 0, {}, kNone, 0});
    ContNode body;
    body.clause = &query_clause;
    body.base = query_base;
    body.parent = Cont{answer_node, 0};
    run(Cont{new_node(body), 0});

    if (!gstack.empty()) throw InvariantViolation("generator stack not empty after evaluation");
    for (std::size_t i = 0; i < tables.frame_count(); ++i) {
      if (tables.frame(static_cast<FrameId>(i)).state != FrameState::Complete)
        throw InvariantViolation("frame " + std::to_string(i) + " not complete after evaluation");
    }

    SolveResult result;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (!preds[i].tabled && sld_counts[i] > 0) stats.sld_calls[preds[i].label] = sld_counts[i];
    }
    result.stats = stats;
    result.answers = std::move(answers);
    answers.clear();
    if (options.report_tables) {
      for (std::size_t i = 0; i < tables.frame_count(); ++i) result.tables.push_back(report(static_cast<FrameId>(i)));
      result.table_dump = tables.dump(symbols);
    }
    return result;
  }

  FrameReport report(FrameId fid) {
    const SubgoalFrame& f = tables.frame(fid);
    FrameReport r;
    r.id = fid;
    r.state = f.state;
    r.rounds = f.rounds;
    r.looping_alternatives = f.looping_alternatives;
    Addr call = store.build(f.call);
    r.call = store.to_term(call, symbols);
    for (SolutionIndex s = 0; s < f.solutions.size(); ++s) {
      Addr t = store.build(tables.instantiated_solution(fid, s));
      r.solutions.push_back(store.to_term(t, symbols));
      if (tables.is_looping_solution(fid, s)) ++r.looping_solutions;
    }
    return r;
  }
};

Engine::Engine(const Program& program, StrategyConfig config, EngineOptions options)
    : impl_(std::make_unique<Impl>(program, config, std::move(options))) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

SolveResult Engine::solve(const std::vector<Term>& query) { return impl_->solve(query); }

SolveResult solve(const Program& program, const std::vector<Term>& query, StrategyConfig config,
                  EngineOptions options) {
  return Engine(program, config, std::move(options)).solve(query);
}

}  // namespace lintab
