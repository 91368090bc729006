#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lintab {

using Symbol = std::uint32_t;

/// Interns atom and functor names. Ids are dense and stable for the
/// lifetime of the table.
class SymbolTable {
 public:
  Symbol intern(std::string_view name);
  std::optional<Symbol> find(std::string_view name) const;
  const std::string& name(Symbol s) const { return names_.at(s); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Symbol> ids_;
};

/// Value-semantics term used by the reader, the public API and reports.
/// Variables carry a clause- or query-local id plus their source name.
class Term {
 public:
  enum class Kind : std::uint8_t { Variable, Atom, Integer, Compound };

  Term() = default;

  static Term variable(std::uint32_t id, std::string name = {});
  static Term atom(std::string name);
  static Term integer(std::int64_t value);
  /// Throws std::invalid_argument when `args` is empty; arity-0 terms are atoms.
  static Term compound(std::string functor, std::vector<Term> args);

  Kind kind() const { return kind_; }
  bool is_variable() const { return kind_ == Kind::Variable; }
  bool is_atom() const { return kind_ == Kind::Atom; }
  bool is_integer() const { return kind_ == Kind::Integer; }
  bool is_compound() const { return kind_ == Kind::Compound; }
  bool is_callable() const { return is_atom() || is_compound(); }

  /// Atom name, functor name, or variable source name.
  const std::string& name() const { return name_; }
  std::int64_t value() const { return value_; }
  std::uint32_t var_id() const { return static_cast<std::uint32_t>(value_); }
  const std::vector<Term>& args() const { return args_; }
  std::size_t arity() const { return args_.size(); }

  std::string to_string() const;

  friend bool operator==(const Term& a, const Term& b);

 private:
  Kind kind_ = Kind::Atom;
  std::string name_;
  std::int64_t value_ = 0;
  std::vector<Term> args_;
};

/// One position of a term in prefix order. Canonical terms, trie paths and
/// clause templates all use this encoding: `Functor` carries a symbol and an
/// arity and is followed by its arguments; `Var` carries a variable index.
struct Token {
  enum class Kind : std::uint8_t { Atom, Int, Functor, Var };

  Kind kind = Kind::Atom;
  std::uint32_t arity = 0;
  std::int64_t value = 0;

  static Token atom(Symbol s) { return {Kind::Atom, 0, s}; }
  static Token integer(std::int64_t v) { return {Kind::Int, 0, v}; }
  static Token functor(Symbol s, std::uint32_t arity) { return {Kind::Functor, arity, s}; }
  static Token var(std::uint32_t index) { return {Kind::Var, 0, index}; }

  friend bool operator==(const Token&, const Token&) = default;
};

/// Variables renumbered 0,1,2,... by first occurrence. Two terms are
/// variants iff their canonical forms compare equal.
using CanonicalTerm = std::vector<Token>;

/// Index one past the subterm starting at `pos`.
std::size_t skip_term(std::span<const Token> tokens, std::size_t pos);

std::string render_tokens(std::span<const Token> tokens, const SymbolTable& symbols);

using Addr = std::uint32_t;

enum class Tag : std::uint8_t { Ref, Atom, Int, Functor };

/// Heap cell. An unbound variable is a Ref to itself. A compound is a
/// Functor cell followed by `arity` argument cells; compound arguments are
/// Refs to their own Functor cells.
struct Cell {
  Tag tag = Tag::Ref;
  std::uint32_t arity = 0;
  std::int64_t value = 0;
};

/// Binding store: a cell heap with a trail. Backtracking is `undo_to` on the
/// trail followed by `truncate` of the heap to a saved top.
class Store {
 public:
  Store();

  Addr make_var();
  Addr make_atom(Symbol s);
  Addr make_int(std::int64_t v);
  Addr make_compound(Symbol functor, std::span<const Addr> args);
  /// Allocates `n` consecutive unbound variables and returns the first.
  Addr make_vars(std::uint32_t n);

  Addr deref(Addr a) const {
    for (;;) {
      const Cell& c = heap_[a];
      if (c.tag != Tag::Ref || static_cast<Addr>(c.value) == a) return a;
      a = static_cast<Addr>(c.value);
    }
  }
  const Cell& cell(Addr a) const { return heap_[a]; }
  bool is_unbound(Addr a) const {
    const Cell& c = heap_[a];
    return c.tag == Tag::Ref && static_cast<Addr>(c.value) == a;
  }

  /// Most general unifier, no occurs check. On failure the caller unwinds
  /// the trail to its own mark; partial bindings may remain until then.
  bool unify(Addr a, Addr b);
  /// Binds the unbound variable `var` to the (dereferenced) term `value`.
  void bind(Addr var, Addr value);

  std::size_t trail_mark() const { return trail_.size(); }
  void undo_to(std::size_t mark);

  Addr heap_top() const { return static_cast<Addr>(heap_.size()); }
  void truncate(Addr top) { heap_.resize(top); }

  /// Appends the canonical encoding of `t` to `out`. `var_map` holds the
  /// variables already numbered; it is extended in first-occurrence order.
  void canonicalize(Addr t, CanonicalTerm& out, std::vector<Addr>& var_map) const;
  CanonicalTerm canonicalize(Addr t) const;

  /// Builds the subterm at `tokens[pos]`; `var_slots[i]` is the heap variable
  /// for canonical index i, 0 meaning not yet allocated. Returns the term and
  /// advances `pos` past it.
  Addr build(std::span<const Token> tokens, std::size_t& pos, std::vector<Addr>& var_slots);
  Addr build(std::span<const Token> tokens);
  /// Builds a clause template whose Var tokens index the block at `var_base`.
  Addr instantiate(std::span<const Token> tokens, std::size_t& pos, Addr var_base);
  /// Unifies a clause template against a heap term without copying the
  /// template first.
  bool unify_template(std::span<const Token> tokens, std::size_t& pos, Addr var_base, Addr term);

  /// Binds the unbound argument variables of the compound `tuple` to the
  /// consecutive terms encoded in `answer`.
  void bind_tuple(Addr tuple, std::span<const Token> answer, std::vector<Addr>& scratch);

  /// `vars_by_id` maps Term variable ids to heap variables (grown as needed).
  Addr from_term(const Term& t, SymbolTable& symbols, std::vector<Addr>& vars_by_id);
  /// Unbound variables are named `_N` in first-occurrence order.
  Term to_term(Addr t, const SymbolTable& symbols) const;
  Term to_term(Addr t, const SymbolTable& symbols, std::vector<Addr>& var_map) const;

  std::size_t heap_size() const { return heap_.size(); }

 private:
  void push_cell(Tag tag, std::uint32_t arity, std::int64_t value) {
    heap_.push_back(Cell{tag, arity, value});
  }
  void set_arg(Addr slot, Addr term);

  std::vector<Cell> heap_;
  std::vector<Addr> trail_;
  std::vector<std::pair<Addr, Addr>> pdl_;
};

}  // namespace lintab
