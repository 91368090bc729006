#include "lintab/terms.hpp"

#include <stdexcept>

namespace lintab {

Symbol SymbolTable::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  auto id = static_cast<Symbol>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<Symbol> SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Term Term::variable(std::uint32_t id, std::string name) {
  Term t;
  t.kind_ = Kind::Variable;
  t.value_ = id;
  t.name_ = std::move(name);
  return t;
}

Term Term::atom(std::string name) {
  Term t;
  t.kind_ = Kind::Atom;
  t.name_ = std::move(name);
  return t;
}

Term Term::integer(std::int64_t value) {
  Term t;
  t.kind_ = Kind::Integer;
  t.value_ = value;
  return t;
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) throw std::invalid_argument("compound term needs at least one argument");
  Term t;
  t.kind_ = Kind::Compound;
  t.name_ = std::move(functor);
  t.args_ = std::move(args);
  return t;
}

std::string Term::to_string() const {
  switch (kind_) {
    case Kind::Variable:
      return name_.empty() ? "_G" + std::to_string(value_) : name_;
    case Kind::Atom:
      return name_;
    case Kind::Integer:
      return std::to_string(value_);
    case Kind::Compound: {
      std::string s = name_ + "(";
      for (std::size_t i = 0; i < args_.size(); ++i) {
        if (i) s += ',';
        s += args_[i].to_string();
      }
      return s + ")";
    }
  }
  return {};
}

bool operator==(const Term& a, const Term& b) {
  return a.kind_ == b.kind_ && a.name_ == b.name_ && a.value_ == b.value_ && a.args_ == b.args_;
}

std::size_t skip_term(std::span<const Token> tokens, std::size_t pos) {
  std::size_t pending = 1;
  while (pending > 0) {
    const Token& t = tokens[pos++];
    --pending;
    if (t.kind == Token::Kind::Functor) pending += t.arity;
  }
  return pos;
}

namespace {

void render_at(std::span<const Token> tokens, std::size_t& pos, const SymbolTable& symbols,
               std::string& out) {
  const Token& t = tokens[pos++];
  switch (t.kind) {
    case Token::Kind::Atom:
      out += symbols.name(static_cast<Symbol>(t.value));
      break;
    case Token::Kind::Int:
      out += std::to_string(t.value);
      break;
    case Token::Kind::Var:
      out += '_';
      out += std::to_string(t.value);
      break;
    case Token::Kind::Functor:
      out += symbols.name(static_cast<Symbol>(t.value));
      out += '(';
      for (std::uint32_t i = 0; i < t.arity; ++i) {
        if (i) out += ',';
        render_at(tokens, pos, symbols, out);
      }
      out += ')';
      break;
  }
}

}  // namespace

std::string render_tokens(std::span<const Token> tokens, const SymbolTable& symbols) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    if (pos) out += ',';
    render_at(tokens, pos, symbols, out);
  }
  return out;
}

// Address 0 is reserved so that 0 can mean "no variable" in slot tables.
Store::Store() { heap_.push_back(Cell{Tag::Atom, 0, 0}); }

Addr Store::make_var() {
  Addr a = heap_top();
  push_cell(Tag::Ref, 0, a);
  return a;
}

Addr Store::make_vars(std::uint32_t n) {
  Addr base = heap_top();
  for (std::uint32_t i = 0; i < n; ++i) push_cell(Tag::Ref, 0, base + i);
  return base;
}

Addr Store::make_atom(Symbol s) {
  Addr a = heap_top();
  push_cell(Tag::Atom, 0, s);
  return a;
}

Addr Store::make_int(std::int64_t v) {
  Addr a = heap_top();
  push_cell(Tag::Int, 0, v);
  return a;
}

Addr Store::make_compound(Symbol functor, std::span<const Addr> args) {
  Addr f = heap_top();
  push_cell(Tag::Functor, static_cast<std::uint32_t>(args.size()), functor);
  for (std::size_t i = 0; i < args.size(); ++i) push_cell(Tag::Ref, 0, f + 1 + i);
  for (std::size_t i = 0; i < args.size(); ++i) set_arg(f + 1 + static_cast<Addr>(i), args[i]);
  return f;
}

void Store::set_arg(Addr slot, Addr term) {
  term = deref(term);
  const Cell& c = heap_[term];
  if (c.tag == Tag::Atom || c.tag == Tag::Int)
    heap_[slot] = c;
  else
    heap_[slot] = Cell{Tag::Ref, 0, term};
}

void Store::bind(Addr var, Addr value) {
  value = deref(value);
  if (value == var) return;
  Cell c = heap_[value];
  if (c.tag == Tag::Ref && value > var) {
    // both unbound: the younger variable points at the older one
    heap_[value] = Cell{Tag::Ref, 0, var};
    trail_.push_back(value);
    return;
  }
  if (c.tag == Tag::Atom || c.tag == Tag::Int)
    heap_[var] = c;
  else
    heap_[var] = Cell{Tag::Ref, 0, value};
  trail_.push_back(var);
}

bool Store::unify(Addr a, Addr b) {
  pdl_.clear();
  pdl_.emplace_back(a, b);
  while (!pdl_.empty()) {
    auto [x, y] = pdl_.back();
    pdl_.pop_back();
    x = deref(x);
    y = deref(y);
    if (x == y) continue;
    const Cell cx = heap_[x];
    const Cell cy = heap_[y];
    if (cx.tag == Tag::Ref) {
      bind(x, y);
      continue;
    }
    if (cy.tag == Tag::Ref) {
      bind(y, x);
      continue;
    }
    if (cx.tag != cy.tag || cx.value != cy.value || cx.arity != cy.arity) return false;
    if (cx.tag == Tag::Functor) {
      for (std::uint32_t i = cx.arity; i > 0; --i) pdl_.emplace_back(x + i, y + i);
    }
  }
  return true;
}

void Store::undo_to(std::size_t mark) {
  while (trail_.size() > mark) {
    Addr a = trail_.back();
    trail_.pop_back();
    heap_[a] = Cell{Tag::Ref, 0, a};
  }
}

void Store::canonicalize(Addr t, CanonicalTerm& out, std::vector<Addr>& var_map) const {
  std::vector<Addr> stack{t};
  while (!stack.empty()) {
    Addr a = deref(stack.back());
    stack.pop_back();
    const Cell& c = heap_[a];
    switch (c.tag) {
      case Tag::Ref: {
        std::uint32_t idx = 0;
        while (idx < var_map.size() && var_map[idx] != a) ++idx;
        if (idx == var_map.size()) var_map.push_back(a);
        out.push_back(Token::var(idx));
        break;
      }
      case Tag::Atom:
        out.push_back(Token::atom(static_cast<Symbol>(c.value)));
        break;
      case Tag::Int:
        out.push_back(Token::integer(c.value));
        break;
      case Tag::Functor:
        out.push_back(Token::functor(static_cast<Symbol>(c.value), c.arity));
        for (std::uint32_t i = c.arity; i > 0; --i) stack.push_back(a + i);
        break;
    }
  }
}

CanonicalTerm Store::canonicalize(Addr t) const {
  CanonicalTerm out;
  std::vector<Addr> vars;
  canonicalize(t, out, vars);
  return out;
}

Addr Store::build(std::span<const Token> tokens, std::size_t& pos, std::vector<Addr>& var_slots) {
  const Token t = tokens[pos++];
  switch (t.kind) {
    case Token::Kind::Atom:
      return make_atom(static_cast<Symbol>(t.value));
    case Token::Kind::Int:
      return make_int(t.value);
    case Token::Kind::Var: {
      auto idx = static_cast<std::size_t>(t.value);
      if (var_slots.size() <= idx) var_slots.resize(idx + 1, 0);
      if (var_slots[idx] == 0) var_slots[idx] = make_var();
      return var_slots[idx];
    }
    case Token::Kind::Functor: {
      Addr f = heap_top();
      push_cell(Tag::Functor, t.arity, t.value);
      for (std::uint32_t i = 0; i < t.arity; ++i) push_cell(Tag::Ref, 0, f + 1 + i);
      for (std::uint32_t i = 0; i < t.arity; ++i) {
        Addr slot = f + 1 + i;
        const Token& a = tokens[pos];
        if (a.kind == Token::Kind::Atom) {
          heap_[slot] = Cell{Tag::Atom, 0, a.value};
          ++pos;
        } else if (a.kind == Token::Kind::Int) {
          heap_[slot] = Cell{Tag::Int, 0, a.value};
          ++pos;
        } else if (a.kind == Token::Kind::Var) {
          auto idx = static_cast<std::size_t>(a.value);
          if (var_slots.size() <= idx) var_slots.resize(idx + 1, 0);
          if (var_slots[idx] == 0)
            var_slots[idx] = slot;  // the argument cell itself becomes the variable
          else
            heap_[slot] = Cell{Tag::Ref, 0, var_slots[idx]};
          ++pos;
        } else {
          Addr sub = build(tokens, pos, var_slots);
          heap_[slot] = Cell{Tag::Ref, 0, sub};
        }
      }
      return f;
    }
  }
  return 0;
}

Addr Store::build(std::span<const Token> tokens) {
  std::size_t pos = 0;
  std::vector<Addr> slots;
  return build(tokens, pos, slots);
}

Addr Store::instantiate(std::span<const Token> tokens, std::size_t& pos, Addr var_base) {
  const Token t = tokens[pos++];
  switch (t.kind) {
    case Token::Kind::Atom:
      return make_atom(static_cast<Symbol>(t.value));
    case Token::Kind::Int:
      return make_int(t.value);
    case Token::Kind::Var:
      return var_base + static_cast<Addr>(t.value);
    case Token::Kind::Functor: {
      Addr f = heap_top();
      push_cell(Tag::Functor, t.arity, t.value);
      for (std::uint32_t i = 0; i < t.arity; ++i) push_cell(Tag::Ref, 0, f + 1 + i);
      for (std::uint32_t i = 0; i < t.arity; ++i) {
        Addr slot = f + 1 + i;
        const Token& a = tokens[pos];
        if (a.kind == Token::Kind::Atom) {
          heap_[slot] = Cell{Tag::Atom, 0, a.value};
          ++pos;
        } else if (a.kind == Token::Kind::Int) {
          heap_[slot] = Cell{Tag::Int, 0, a.value};
          ++pos;
        } else if (a.kind == Token::Kind::Var) {
          set_arg(slot, var_base + static_cast<Addr>(a.value));
          ++pos;
        } else {
          Addr sub = instantiate(tokens, pos, var_base);
          heap_[slot] = Cell{Tag::Ref, 0, sub};
        }
      }
      return f;
    }
  }
  return 0;
}

bool Store::unify_template(std::span<const Token> tokens, std::size_t& pos, Addr var_base,
                           Addr term) {
  term = deref(term);
  const Token t = tokens[pos];
  switch (t.kind) {
    case Token::Kind::Var:
      ++pos;
      return unify(var_base + static_cast<Addr>(t.value), term);
    case Token::Kind::Atom:
    case Token::Kind::Int: {
      ++pos;
      const Tag want = t.kind == Token::Kind::Atom ? Tag::Atom : Tag::Int;
      const Cell& c = heap_[term];
      if (c.tag == Tag::Ref) {
        heap_[term] = Cell{want, 0, t.value};
        trail_.push_back(term);
        return true;
      }
      return c.tag == want && c.value == t.value;
    }
    case Token::Kind::Functor: {
      const Cell& c = heap_[term];
      if (c.tag == Tag::Ref) {
        Addr built = instantiate(tokens, pos, var_base);
        bind(term, built);
        return true;
      }
      if (c.tag != Tag::Functor || c.value != t.value || c.arity != t.arity) return false;
      ++pos;
      for (std::uint32_t i = 1; i <= t.arity; ++i) {
        if (!unify_template(tokens, pos, var_base, term + i)) return false;
      }
      return true;
    }
  }
  return false;
}

void Store::bind_tuple(Addr tuple, std::span<const Token> answer, std::vector<Addr>& scratch) {
  scratch.clear();
  const std::uint32_t n = heap_[tuple].arity;
  std::size_t pos = 0;
  for (std::uint32_t i = 1; i <= n; ++i) {
    Addr var = deref(tuple + i);
    const Token t = answer[pos];
    if (!is_unbound(var)) {
      Addr sub = build(answer, pos, scratch);
      unify(var, sub);
      continue;
    }
    switch (t.kind) {
      case Token::Kind::Atom:
      case Token::Kind::Int:
        heap_[var] = Cell{t.kind == Token::Kind::Atom ? Tag::Atom : Tag::Int, 0, t.value};
        trail_.push_back(var);
        ++pos;
        break;
      case Token::Kind::Var: {
        auto idx = static_cast<std::size_t>(t.value);
        if (scratch.size() <= idx) scratch.resize(idx + 1, 0);
        if (scratch[idx] == 0)
          scratch[idx] = var;
        else
          bind(var, scratch[idx]);
        ++pos;
        break;
      }
      case Token::Kind::Functor: {
        Addr sub = build(answer, pos, scratch);
        bind(var, sub);
        break;
      }
    }
  }
}

Addr Store::from_term(const Term& t, SymbolTable& symbols, std::vector<Addr>& vars_by_id) {
  switch (t.kind()) {
    case Term::Kind::Variable: {
      std::uint32_t id = t.var_id();
      if (vars_by_id.size() <= id) vars_by_id.resize(id + 1, 0);
      if (vars_by_id[id] == 0) vars_by_id[id] = make_var();
      return vars_by_id[id];
    }
    case Term::Kind::Atom:
      return make_atom(symbols.intern(t.name()));
    case Term::Kind::Integer:
      return make_int(t.value());
    case Term::Kind::Compound: {
      std::vector<Addr> args;
      args.reserve(t.arity());
      for (const Term& a : t.args()) args.push_back(from_term(a, symbols, vars_by_id));
      return make_compound(symbols.intern(t.name()), args);
    }
  }
  return 0;
}

Term Store::to_term(Addr t, const SymbolTable& symbols, std::vector<Addr>& var_map) const {
  t = deref(t);
  const Cell& c = heap_[t];
  switch (c.tag) {
    case Tag::Ref: {
      std::uint32_t idx = 0;
      while (idx < var_map.size() && var_map[idx] != t) ++idx;
      if (idx == var_map.size()) var_map.push_back(t);
      return Term::variable(idx, "_" + std::to_string(idx));
    }
    case Tag::Atom:
      return Term::atom(symbols.name(static_cast<Symbol>(c.value)));
    case Tag::Int:
      return Term::integer(c.value);
    case Tag::Functor: {
      std::vector<Term> args;
      args.reserve(c.arity);
      for (std::uint32_t i = 1; i <= c.arity; ++i) args.push_back(to_term(t + i, symbols, var_map));
      return Term::compound(symbols.name(static_cast<Symbol>(c.value)), std::move(args));
    }
  }
  return {};
}

Term Store::to_term(Addr t, const SymbolTable& symbols) const {
  std::vector<Addr> vars;
  return to_term(t, symbols, vars);
}

}  // namespace lintab
