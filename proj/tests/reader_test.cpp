#include <gtest/gtest.h>

#include "lintab/reader.hpp"

namespace lintab {
namespace {

TEST(Reader, PathProgram) {
  Program p = parse_program(":- table path/2.\npath(X,Z) :- edge(X,Y), path(Y,Z).\npath(X,Z) :- edge(X,Z).");
  EXPECT_TRUE(p.is_tabled({"path", 2}));
  EXPECT_FALSE(p.is_tabled({"edge", 2}));
  ASSERT_EQ(p.clauses({"path", 2}).size(), 2u);
  EXPECT_TRUE(p.clauses({"edge", 2}).empty());
  const Clause& c0 = p.clauses({"path", 2})[0];
  EXPECT_EQ(c0.head.to_string(), "path(X,Z)");
  ASSERT_EQ(c0.body.size(), 2u);
  EXPECT_EQ(c0.body[1].to_string(), "path(Y,Z)");
  EXPECT_EQ(c0.var_count, 3u);
}

TEST(Reader, SingleFact) {
  Program p = parse_program("p(a).");
  ASSERT_EQ(p.clauses({"p", 1}).size(), 1u);
  EXPECT_TRUE(p.clauses({"p", 1})[0].body.empty());
  EXPECT_TRUE(p.tabled().empty());
}

TEST(Reader, DanglingNeckIsSyntaxError) {
  try {
    parse_program("p(a) :-");
    FAIL() << "expected a syntax error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_GE(e.column(), 7u);
  }
}

TEST(Reader, ErrorPositionOnLaterLine) {
  try {
    parse_program("p(a).\nq(b) r.\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 6u);
  }
}

TEST(Reader, DuplicateTableDirective) {
  Program p = parse_program(":- table a/1.\n:- table a/1, b/1.\na(1).");
  EXPECT_EQ(p.tabled().size(), 2u);
}

TEST(Reader, CommentsAndAnonymousVariables) {
  Program p = parse_program("% header\nq(_, _). % trailing\nr(X) :- q(X, _).\n");
  const Clause& q = p.clauses({"q", 2})[0];
  EXPECT_EQ(q.var_count, 2u);  // each _ is distinct
  EXPECT_NE(q.head.args()[0].var_id(), q.head.args()[1].var_id());
}

TEST(Reader, NegativeIntegersAndZeroArity) {
  Program p = parse_program("n(-4).\ngo :- n(X), true.\n");
  EXPECT_EQ(p.clauses({"n", 1})[0].head.args()[0].value(), -4);
  EXPECT_EQ(p.clauses({"go", 0})[0].body.size(), 2u);
}

TEST(Reader, OnlyTableDirectives) {
  EXPECT_THROW(parse_program(":- dynamic p/1."), ParseError);
}

TEST(Query, SingleGoal) {
  auto q = parse_query("path(X,Y).");
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].to_string(), "path(X,Y)");
}

TEST(Query, ConjunctionSharesVariables) {
  auto q = parse_query("edge(1,X), path(X,Y).");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].args()[1].var_id(), q[1].args()[0].var_id());
}

TEST(Query, EmptyIsError) {
  EXPECT_THROW(parse_query(""), ParseError);
  EXPECT_THROW(parse_query("  % nothing\n"), ParseError);
}

TEST(Query, TrailingTokensRejected) {
  EXPECT_THROW(parse_query("a(X). b"), ParseError);
}

TEST(Reader, RoundTrip) {
  const char* text =
      ":- table path/2, p/1.\n"
      "path(X,Z) :- edge(X,Y), path(Y,Z).\n"
      "path(X,Z) :- edge(X,Z).\n"
      "edge(1,2).\nedge(2,-3).\n"
      "p(f(g(A),A,_)).\n"
      "go :- true, p(x).\n";
  Program p = parse_program(text);
  Program again = parse_program(p.to_string());
  EXPECT_EQ(p, again);
  EXPECT_EQ(p.to_string(), again.to_string());
}

TEST(Reader, SourceOrderPreserved) {
  Program p = parse_program("e(3).\nf(0).\ne(1).\ne(2).\n");
  auto cs = p.clauses({"e", 1});
  ASSERT_EQ(cs.size(), 3u);
  for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_EQ(cs[i].source_index, i);
  EXPECT_EQ(cs[0].head.args()[0].value(), 3);
  EXPECT_EQ(cs[2].head.args()[0].value(), 2);
}

}  // namespace
}  // namespace lintab
