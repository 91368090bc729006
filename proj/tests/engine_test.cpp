#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "lintab/engine.hpp"

namespace lintab {
namespace {

constexpr const char* kMutual =
    ":- table a/1, b/1.\n"
    "a(X) :- b(X).\n"
    "a(2).\n"
    "b(X) :- a(X).\n"
    "b(1).\n";

struct Traced {
  SolveResult result;
  std::vector<Event> events;
};

Traced run_traced(const std::string& program, const std::string& query, StrategyConfig c) {
  Traced t;
  EngineOptions o;
  o.on_event = [&](const Event& e) { t.events.push_back(e); };
  t.result = solve(parse_program(program), parse_query(query), c, o);
  return t;
}

std::set<std::string> answer_set(const SolveResult& r) {
  std::set<std::string> out;
  for (const auto& a : r.answers) out.insert(a.to_string());
  return out;
}

const FrameReport& frame_for(const SolveResult& r, const std::string& call) {
  for (const auto& f : r.tables) {
    if (f.call.to_string() == call) return f;
  }
  throw std::runtime_error("no frame " + call);
}

std::vector<std::string> solution_strings(const FrameReport& f) {
  std::vector<std::string> out;
  for (const auto& s : f.solutions) out.push_back(s.to_string());
  return out;
}

class AllConfigs : public ::testing::TestWithParam<int> {
 protected:
  StrategyConfig config() const { return StrategyConfig::all()[static_cast<std::size_t>(GetParam())]; }
};

TEST_P(AllConfigs, MutualAnswersAndFinalTables) {
  SolveResult r = solve(parse_program(kMutual), parse_query("a(X)."), config());
  EXPECT_EQ(answer_set(r), (std::set<std::string>{"X=1", "X=2"}));
  ASSERT_EQ(r.tables.size(), 2u);
  for (const char* call : {"a(_0)", "b(_0)"}) {
    const FrameReport& f = frame_for(r, call);
    EXPECT_EQ(f.state, FrameState::Complete);
    auto sols = solution_strings(f);
    std::set<std::string> got(sols.begin(), sols.end());
    std::string p(1, call[0]);
    EXPECT_EQ(got, (std::set<std::string>{p + "(1)", p + "(2)"}));
  }
}

TEST_P(AllConfigs, MutualRounds) {
  SolveResult r = solve(parse_program(kMutual), parse_query("a(X)."), config());
  // three passes over the SCC without DRE, two with it
  EXPECT_EQ(r.stats.rounds_started, config().dre ? 1u : 2u);
}

TEST_P(AllConfigs, Deterministic) {
  const std::string prog =
      ":- table p/2.\n"
      "p(X,Z) :- p(X,Y), e(Y,Z).\n"
      "p(X,Z) :- e(X,Z).\n"
      "e(1,2). e(2,3). e(3,1). e(3,4).\n";
  SolveResult a = solve(parse_program(prog), parse_query("p(X,Y)"), config());
  SolveResult b = solve(parse_program(prog), parse_query("p(X,Y)"), config());
  EXPECT_EQ(a.stats, b.stats);
  ASSERT_EQ(a.answers.size(), b.answers.size());
  for (std::size_t i = 0; i < a.answers.size(); ++i) EXPECT_EQ(a.answers[i].to_string(), b.answers[i].to_string());
  EXPECT_EQ(a.table_dump, b.table_dump);
}

TEST_P(AllConfigs, SelfLoopTerminates) {
  SolveResult r = solve(parse_program(":- table path/2.\npath(X,Z) :- path(X,Y), edge(Y,Z).\n"
                                      "path(X,Z) :- edge(X,Z).\nedge(1,1).\n"),
                        parse_query("path(1,X)"), config());
  EXPECT_EQ(answer_set(r), (std::set<std::string>{"X=1"}));
}

TEST_P(AllConfigs, EmptyRelation) {
  std::ostringstream diag;
  EngineOptions o;
  o.diagnostics = &diag;
  SolveResult r = solve(parse_program(":- table path/2.\npath(X,Z) :- edge(X,Y), path(Y,Z).\n"
                                      "path(X,Z) :- edge(X,Z).\n"),
                        parse_query("path(X,Y)"), config(), o);
  EXPECT_TRUE(r.answers.empty());
  ASSERT_EQ(r.tables.size(), 1u);
  EXPECT_EQ(r.tables[0].state, FrameState::Complete);
  EXPECT_TRUE(r.tables[0].solutions.empty());
  // the warning appears once even though edge/2 is called twice
  EXPECT_EQ(diag.str(), "warning: unknown predicate edge/2 fails\n");
}

INSTANTIATE_TEST_SUITE_P(Strategies, AllConfigs, ::testing::Range(0, 8),
                         [](const auto& info) {
                           std::string n = StrategyConfig::all()[static_cast<std::size_t>(info.param)].name();
                           for (char& c : n) {
                             if (c == '+') c = '_';
                           }
                           return n;
                         });

TEST(Mutual, GoldenDumpStandard) {
  SolveResult r = solve(parse_program(kMutual), parse_query("a(X)."), StrategyConfig{});
  EXPECT_EQ(r.table_dump,
            "subgoal a(_0) [complete] 2 solutions\n  a(1)\n  a(2)\n"
            "subgoal b(_0) [complete] 2 solutions\n  b(1)\n  b(2)\n");
  EXPECT_EQ(r.stats.alts_explored, 12u);
  EXPECT_EQ(r.stats.nonleader_sols_consumed, 5u);
}

TEST(Mutual, EmptyConsumerFailsImmediately) {
  Traced t = run_traced(kMutual, "a(X)", StrategyConfig{});
  // first repeated call of a(X) is a consumer with nothing to consume
  std::size_t i = 0;
  while (i < t.events.size() && !(t.events[i].kind == EventKind::Call && t.events[i].role == "consumer")) ++i;
  ASSERT_LT(i, t.events.size());
  EXPECT_EQ(t.events[i].subgoal, "a(_0)");
  ASSERT_LT(i + 1, t.events.size());
  EXPECT_NE(t.events[i + 1].kind, EventKind::Consume);
}

TEST(Mutual, DreFollowerStealsSecondClause) {
  StrategyConfig dre{true, false, false};
  Traced t = run_traced(kMutual, "a(X)", dre);
  EXPECT_EQ(t.result.stats.followers_created, 2u);
  // the first solution of a(X) comes from c2 executed by the follower
  const Event* first_alt = nullptr;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Alternative && e.role == "follower") {
      first_alt = &e;
      break;
    }
  }
  ASSERT_NE(first_alt, nullptr);
  EXPECT_EQ(first_alt->subgoal, "a(_0)");
  EXPECT_EQ(first_alt->index, 1);
  for (const auto& e : t.events) {
    if (e.kind == EventKind::NewSolution && e.flag && e.subgoal == "a(_0)") {
      EXPECT_EQ(e.text, "2");
      break;
    }
  }
  // with DRE off there are no followers
  EXPECT_EQ(solve(parse_program(kMutual), parse_query("a(X)"), StrategyConfig{}).stats.followers_created, 0u);
}

TEST(Mutual, DraLoopingAlternatives) {
  SolveResult r = solve(parse_program(kMutual), parse_query("a(X)"), StrategyConfig{false, true, false});
  EXPECT_EQ(frame_for(r, "a(_0)").looping_alternatives, (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(frame_for(r, "b(_0)").looping_alternatives, (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(r.stats.alts_explored, 8u);
}

TEST(Mutual, DraAlternativesOnlyLoopingInLaterRounds) {
  Traced t = run_traced(kMutual, "a(X)", StrategyConfig{false, true, false});
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Alternative && e.round > 1) EXPECT_EQ(e.index, 0) << e.to_line();
  }
}

std::map<std::uint32_t, std::vector<std::int64_t>> generator_consumption(const Traced& t, const std::string& sg) {
  std::map<std::uint32_t, std::vector<std::int64_t>> out;
  for (const auto& e : t.events) {
    if (e.subgoal != sg) continue;
    if (e.kind == EventKind::Call && e.role == "generator") out[e.round];
    if (e.kind == EventKind::Consume && e.role == "generator") out[e.round].push_back(e.index);
  }
  return out;
}

TEST(Mutual, DrsConsumesOnlyRoundSolutions) {
  Traced drs = run_traced(kMutual, "a(X)", StrategyConfig{false, false, true});
  auto per_round = generator_consumption(drs, "b(_0)");
  // b(X) holds X=1 at index 0 and X=2 at index 1
  EXPECT_EQ(per_round, (std::map<std::uint32_t, std::vector<std::int64_t>>{{1, {0}}, {2, {1}}, {3, {}}}));
  EXPECT_EQ(frame_for(drs.result, "b(_0)").looping_solutions, 0u);
  EXPECT_EQ(drs.result.stats.nonleader_sols_consumed, 2u);

  Traced std_run = run_traced(kMutual, "a(X)", StrategyConfig{});
  auto all_rounds = generator_consumption(std_run, "b(_0)");
  EXPECT_EQ(all_rounds, (std::map<std::uint32_t, std::vector<std::int64_t>>{{1, {0}}, {2, {0, 1}}, {3, {0, 1}}}));
}

std::map<std::string, bool> leader_flags(const Traced& t) {
  std::map<std::string, bool> out;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Fixpoint) out.emplace(e.subgoal, e.flag);
  }
  return out;
}

TEST(Leaders, ChainBelowOldestCallIsNonLeader) {
  const std::string prog =
      ":- table a/1, b/1, c/1.\n"
      "a(X) :- b(X).\nb(X) :- c(X).\nc(X) :- a(X).\nc(1).\n";
  Traced t = run_traced(prog, "a(X)", StrategyConfig{});
  EXPECT_EQ(leader_flags(t), (std::map<std::string, bool>{{"a(_0)", true}, {"b(_0)", false}, {"c(_0)", false}}));
  EXPECT_EQ(answer_set(t.result), (std::set<std::string>{"X=1"}));
}

TEST(Leaders, SelfConsumerKeepsLeadership) {
  Traced t = run_traced(":- table p/1.\np(X) :- p(X).\np(1).\n", "p(X)", StrategyConfig{});
  EXPECT_EQ(leader_flags(t), (std::map<std::string, bool>{{"p(_0)", true}}));
}

TEST(Leaders, IndependentSubgoalsCompleteSeparately) {
  const std::string prog =
      ":- table a/1, b/1.\n"
      "a(X) :- b(X).\na(3).\nb(1).\nb(2).\n";
  Traced t = run_traced(prog, "a(X)", StrategyConfig{});
  auto flags = leader_flags(t);
  EXPECT_TRUE(flags.at("a(_0)"));
  EXPECT_TRUE(flags.at("b(_0)"));
  // b completes before a finishes
  std::vector<std::string> completions;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Complete) completions.push_back(e.subgoal);
  }
  EXPECT_EQ(completions, (std::vector<std::string>{"b(_0)", "a(_0)"}));
}

TEST(Engine, CompletedTableReuse) {
  Traced t = run_traced(kMutual, "a(X), a(Y)", StrategyConfig{});
  EXPECT_EQ(t.result.answers.size(), 4u);
  bool saw_completed = false;
  for (const auto& e : t.events) saw_completed |= e.kind == EventKind::Call && e.role == "completed";
  EXPECT_TRUE(saw_completed);
  ASSERT_EQ(t.result.answers[0].goals.size(), 2u);
}

TEST(Engine, NonTabledBacktracking) {
  const std::string prog = "q(1).\nq(2).\nr(X,Y) :- q(X), q(Y).\ns :- fail.\ns :- true.\n";
  SolveResult r = solve(parse_program(prog), parse_query("r(X,Y)"), StrategyConfig{});
  std::vector<std::string> got;
  for (const auto& a : r.answers) got.push_back(a.to_string());
  EXPECT_EQ(got, (std::vector<std::string>{"X=1, Y=1", "X=1, Y=2", "X=2, Y=1", "X=2, Y=2"}));
  EXPECT_EQ(r.stats.sld("q/1"), 3u);
  EXPECT_EQ(r.stats.sld("r/2"), 1u);
  SolveResult s = solve(parse_program(prog), parse_query("s"), StrategyConfig{});
  ASSERT_EQ(s.answers.size(), 1u);
  EXPECT_EQ(s.answers[0].to_string(), "true");
}

TEST(Engine, SldCountsIncludeFailedCalls) {
  const std::string prog = "sld1.\nt(1).\ngo(X) :- sld1, t(X).\n";
  SolveResult r = solve(parse_program(prog), parse_query("go(2)"), StrategyConfig{});
  EXPECT_TRUE(r.answers.empty());
  EXPECT_EQ(r.stats.sld("sld1/0"), 1u);
  EXPECT_EQ(r.stats.sld("t/1"), 1u);
}

TEST(Engine, NonGroundAnswers) {
  SolveResult r = solve(parse_program(":- table p/2.\np(X,f(X)).\np(a,Y) :- p(Y,Z).\n"), parse_query("p(A,B)"),
                        StrategyConfig{});
  std::set<std::string> got = answer_set(r);
  EXPECT_TRUE(got.count("A=_0, B=f(_0)")) << *got.begin();
  EXPECT_TRUE(got.count("A=a, B=_0"));
}

TEST(Engine, StepBudget) {
  EngineOptions o;
  o.step_budget = 1000;
  EXPECT_THROW(solve(parse_program("p :- p.\n"), parse_query("p"), StrategyConfig{}, o), LimitExceeded);
  // the tabled version terminates
  EXPECT_NO_THROW(solve(parse_program(":- table p/0.\np :- p.\n"), parse_query("p"), StrategyConfig{}, o));
}

TEST(Engine, ReusableAcrossQueries) {
  Engine e(parse_program(kMutual), StrategyConfig{true, true, true});
  SolveResult a = e.solve(parse_query("a(X)"));
  SolveResult b = e.solve(parse_query("b(2)"));
  EXPECT_EQ(a.answers.size(), 2u);
  EXPECT_EQ(answer_set(b), (std::set<std::string>{"true"}));
  SolveResult c = e.solve(parse_query("a(X)"));
  EXPECT_EQ(a.stats, c.stats);
}

TEST(StrategyConfig, NamesRoundTrip) {
  std::set<std::string> names;
  for (const auto& c : StrategyConfig::all()) {
    names.insert(c.name());
    EXPECT_EQ(StrategyConfig::parse(c.name()), c);
  }
  EXPECT_EQ(names.size(), 8u);
  EXPECT_EQ(StrategyConfig{}.name(), "standard");
  EXPECT_EQ((StrategyConfig{true, true, true}.name()), "All");
  EXPECT_THROW(StrategyConfig::parse("DRX"), std::invalid_argument);
}

// ---- random Datalog programs against a bottom-up evaluator

using Tuple = std::vector<std::int64_t>;
using Relations = std::map<PredicateKey, std::set<Tuple>>;

// Naive bottom-up fix-point over range-restricted clauses with integer
// constants only. Independent of the engine.
Relations bottom_up(const Program& p) {
  Relations facts;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [key, clauses] : p.predicates()) {
      for (const Clause& c : clauses) {
        std::vector<std::optional<std::int64_t>> env(c.var_count);
        std::vector<Tuple> derived;
        auto value = [&](const Term& t) -> std::optional<std::int64_t> {
          return t.is_variable() ? env[t.var_id()] : std::optional<std::int64_t>(t.value());
        };
        auto join = [&](auto& self, std::size_t i) -> void {
          if (i == c.body.size()) {
            Tuple head;
            for (const Term& a : c.head.args()) head.push_back(*value(a));
            derived.push_back(std::move(head));
            return;
          }
          const Term& g = c.body[i];
          auto it = facts.find(PredicateKey{g.name(), static_cast<std::uint32_t>(g.arity())});
          if (it == facts.end()) return;
          for (const Tuple& f : it->second) {
            auto saved = env;
            bool ok = true;
            for (std::size_t k = 0; k < f.size() && ok; ++k) {
              const Term& a = g.args()[k];
              auto v = value(a);
              if (v) {
                ok = *v == f[k];
              } else {
                env[a.var_id()] = f[k];
              }
            }
            if (ok) self(self, i + 1);
            env = std::move(saved);
          }
        };
        join(join, 0);
        for (auto& t : derived) changed |= facts[key].insert(std::move(t)).second;
      }
    }
  }
  return facts;
}

std::string random_edges(std::mt19937& rng, const char* name, int nodes, int count) {
  std::uniform_int_distribution<int> node(1, nodes);
  std::string out;
  for (int i = 0; i < count; ++i) {
    out += std::string(name) + "(" + std::to_string(node(rng)) + "," + std::to_string(node(rng)) + ").\n";
  }
  return out;
}

const char* kRules[] = {
    // right recursion, both clause orders
    ":- table p/2.\np(X,Z) :- e(X,Y), p(Y,Z).\np(X,Z) :- e(X,Z).\n",
    ":- table p/2.\np(X,Z) :- e(X,Z).\np(X,Z) :- e(X,Y), p(Y,Z).\n",
    // left recursion
    ":- table p/2.\np(X,Z) :- p(X,Y), e(Y,Z).\np(X,Z) :- e(X,Z).\n",
    // double recursion
    ":- table p/2.\np(X,Z) :- p(X,Y), p(Y,Z).\np(X,Z) :- e(X,Z).\n",
    // mutual recursion through a second relation
    ":- table p/2, q/2.\np(X,Z) :- e(X,Z).\np(X,Z) :- e(X,Y), q(Y,Z).\n"
    "q(X,Z) :- f(X,Y), p(Y,Z).\nq(X,Z) :- f(X,Z).\n",
    // mutual recursion, left-recursive, with a non-tabled bridge
    ":- table p/2, q/2.\np(X,Z) :- q(X,Y), e(Y,Z).\np(X,Z) :- e(X,Z).\n"
    "q(X,Z) :- p(X,Y), r(Y,Z).\nq(X,Z) :- f(X,Z).\nr(X,Z) :- f(X,Z).\n",
};

TEST(RandomPrograms, MatchBottomUp) {
  std::mt19937 rng(20240611);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::string rules = kRules[trial % std::size(kRules)];
    const int nodes = 3 + trial % 5;
    std::string text = rules + random_edges(rng, "e", nodes, nodes + trial % 4) + random_edges(rng, "f", nodes, 3);
    Program program = parse_program(text);
    Relations expected = bottom_up(program);
    const std::set<Tuple>& p = expected[PredicateKey{"p", 2}];

    std::vector<std::pair<std::string, std::set<Tuple>>> queries;
    queries.emplace_back("p(X,Y)", p);
    for (std::int64_t k : {1, 2}) {
      std::set<Tuple> bound_first, bound_second;
      for (const Tuple& t : p) {
        if (t[0] == k) bound_first.insert({t[1]});
        if (t[1] == k) bound_second.insert({t[0]});
      }
      queries.emplace_back("p(" + std::to_string(k) + ",Y)", bound_first);
      queries.emplace_back("p(X," + std::to_string(k) + ")", bound_second);
    }
    for (const auto& [query, want] : queries) {
      for (const StrategyConfig& c : StrategyConfig::all()) {
        SolveResult r = solve(program, parse_query(query), c);
        std::set<Tuple> got;
        for (const Answer& a : r.answers) {
          Tuple t;
          for (const auto& [name, term] : a.bindings) t.push_back(term.value());
          got.insert(t);
        }
        EXPECT_EQ(got, want) << c.name() << " " << query << "\n" << text;
        EXPECT_EQ(got.size(), r.answers.size());
        for (const auto& f : r.tables) EXPECT_EQ(f.state, FrameState::Complete);
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 60 * 5 * 8);
}

// ---- properties read off the event log

TEST(EventLog, LocalSchedulingAndMonotonicity) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 24; ++trial) {
    std::string text = std::string(kRules[trial % std::size(kRules)]) + random_edges(rng, "e", 5, 7) +
                       random_edges(rng, "f", 5, 3);
    for (const StrategyConfig& c : StrategyConfig::all()) {
      Traced t = run_traced(text, "p(X,Y)", c);
      std::map<FrameId, bool> exploring;     // generator still trying clauses
      std::map<FrameId, std::size_t> count;  // solutions stored so far
      std::map<FrameId, std::size_t> round_start_at;
      std::map<FrameId, bool> found_since_round;
      for (std::size_t i = 0; i < t.events.size(); ++i) {
        const Event& e = t.events[i];
        switch (e.kind) {
          case EventKind::Call:
            if (e.role == "generator") exploring[e.frame] = true;
            break;
          case EventKind::Fixpoint:
            exploring[e.frame] = false;
            break;
          case EventKind::Consume:
            // a generator hands answers out only once its clauses are exhausted
            if (e.role == "generator") {
              EXPECT_FALSE(exploring[e.frame]) << c.name() << " " << e.to_line();
            }
            break;
          case EventKind::NewSolution:
            if (e.flag) {
              ++count[e.frame];
              for (auto& [f, found] : found_since_round) found = true;
            }
            break;
          case EventKind::RoundStart:
            exploring[e.frame] = true;
            round_start_at[e.frame] = i;
            found_since_round[e.frame] = false;
            break;
          case EventKind::Complete:
            // the leader's last round added nothing anywhere
            if (i > 0 && t.events[i - 1].kind == EventKind::Fixpoint && t.events[i - 1].frame == e.frame &&
                found_since_round.count(e.frame)) {
              EXPECT_FALSE(found_since_round[e.frame]) << c.name() << " " << e.to_line();
            }
            break;
          default:
            break;
        }
      }
      for (const auto& f : t.result.tables) EXPECT_EQ(count[f.id], f.solutions.size());
    }
  }
}

}  // namespace
}  // namespace lintab
