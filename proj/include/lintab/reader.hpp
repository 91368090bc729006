#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lintab/terms.hpp"

namespace lintab {

/// Raised for malformed program or query text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct PredicateKey {
  std::string name;
  std::uint32_t arity = 0;

  std::string to_string() const { return name + "/" + std::to_string(arity); }
  friend auto operator<=>(const PredicateKey&, const PredicateKey&) = default;
};

/// Variables in head and body share clause-local ids numbered from 0 in
/// first-occurrence order; `var_count` is one past the largest id.
struct Clause {
  Term head;
  std::vector<Term> body;
  std::size_t source_index = 0;
  std::uint32_t var_count = 0;

  PredicateKey key() const { return {head.name(), static_cast<std::uint32_t>(head.arity())}; }
  std::string to_string() const;

  friend bool operator==(const Clause&, const Clause&) = default;
};

class Program {
 public:
  /// Appends a clause to its predicate and assigns its source index.
  void add_clause(Clause clause);
  void add_table(PredicateKey key) { tabled_.insert(std::move(key)); }

  bool is_tabled(const PredicateKey& key) const { return tabled_.contains(key); }
  /// Empty for predicates without clauses.
  std::span<const Clause> clauses(const PredicateKey& key) const;

  const std::map<PredicateKey, std::vector<Clause>>& predicates() const { return predicates_; }
  const std::set<PredicateKey>& tabled() const { return tabled_; }

  /// Re-parseable source text: table directives first, then clauses per
  /// predicate in source order.
  std::string to_string() const;

  friend bool operator==(const Program&, const Program&) = default;

 private:
  std::map<PredicateKey, std::vector<Clause>> predicates_;
  std::set<PredicateKey> tabled_;
};

Program parse_program(std::string_view text);

/// Parses `g1, g2, ...` with an optional final period; variables are numbered across the whole query.
std::vector<Term> parse_query(std::string_view text);

}  // namespace lintab
