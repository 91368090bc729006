#include "lintab/reader.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

namespace lintab {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

std::string Clause::to_string() const {
  std::string s = head.to_string();
  if (!body.empty()) {
    s += " :- ";
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i) s += ", ";
      s += body[i].to_string();
    }
  }
  return s + ".";
}

void Program::add_clause(Clause clause) {
  auto& list = predicates_[clause.key()];
  clause.source_index = list.size();
  list.push_back(std::move(clause));
}

std::span<const Clause> Program::clauses(const PredicateKey& key) const {
  auto it = predicates_.find(key);
  if (it == predicates_.end()) return {};
  return it->second;
}

std::string Program::to_string() const {
  std::string out;
  for (const auto& key : tabled_) out += ":- table " + key.to_string() + ".\n";
  for (const auto& [key, list] : predicates_) {
    for (const auto& c : list) out += c.to_string() + "\n";
  }
  return out;
}

namespace {

enum class Tok { Atom, Var, Int, LParen, RParen, Comma, Dot, Neck, Slash, End };

struct Lexeme {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Lexeme next() {
    skip_layout();
    Lexeme lx;
    lx.line = line_;
    lx.column = column_;
    if (pos_ >= src_.size()) return lx;
    char c = src_[pos_];
    auto ident_char = [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
    };
    if (std::islower(static_cast<unsigned char>(c))) {
      lx.kind = Tok::Atom;
      lx.text = take_while(ident_char);
      return lx;
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      lx.kind = Tok::Var;
      lx.text = take_while(ident_char);
      return lx;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::size_t start = pos_;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      lx.kind = Tok::Int;
      lx.text = std::string(src_.substr(start, pos_ - start));
      auto [ptr, ec] = std::from_chars(lx.text.data(), lx.text.data() + lx.text.size(), lx.value);
      if (ec != std::errc{}) throw ParseError("integer out of range", lx.line, lx.column);
      return lx;
    }
    advance();
    switch (c) {
      case '(':
        lx.kind = Tok::LParen;
        return lx;
      case ')':
        lx.kind = Tok::RParen;
        return lx;
      case ',':
        lx.kind = Tok::Comma;
        return lx;
      case '.':
        lx.kind = Tok::Dot;
        return lx;
      case '/':
        lx.kind = Tok::Slash;
        return lx;
      case ':':
        if (pos_ < src_.size() && src_[pos_] == '-') {
          advance();
          lx.kind = Tok::Neck;
          return lx;
        }
        break;
      default:
        break;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", lx.line, lx.column);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_layout() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  template <typename Pred>
  std::string take_while(Pred pred) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && pred(src_[pos_])) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Atom: return "atom";
    case Tok::Var: return "variable";
    case Tok::Int: return "integer";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Neck: return "':-'";
    case Tok::Slash: return "'/'";
    case Tok::End: return "end of input";
  }
  return "token";
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { cur_ = lexer_.next(); }

  Program program() {
    Program prog;
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::Neck) {
        directive(prog);
        continue;
      }
      reset_scope();
      Clause c;
      c.head = callable("clause head");
      if (cur_.kind == Tok::Neck) {
        shift();
        c.body = goals();
      }
      expect(Tok::Dot);
      c.var_count = next_var_;
      prog.add_clause(std::move(c));
    }
    return prog;
  }

  std::vector<Term> query() {
    reset_scope();
    if (cur_.kind == Tok::End) error("empty query");
    auto body = goals();
    if (cur_.kind == Tok::Dot) shift();
    if (cur_.kind != Tok::End) error(std::string("unexpected ") + describe(cur_.kind) + " after query");
    return body;
  }

 private:
  void directive(Program& prog) {
    shift();
    if (cur_.kind != Tok::Atom || cur_.text != "table") error("only ':- table Name/Arity.' directives are supported");
    shift();
    for (;;) {
      if (cur_.kind != Tok::Atom) error("expected predicate name in table directive");
      PredicateKey key{cur_.text, 0};
      shift();
      expect(Tok::Slash);
      if (cur_.kind != Tok::Int || cur_.value < 0) error("expected arity in table directive");
      key.arity = static_cast<std::uint32_t>(cur_.value);
      shift();
      prog.add_table(std::move(key));
      if (cur_.kind != Tok::Comma) break;
      shift();
    }
    expect(Tok::Dot);
  }

  std::vector<Term> goals() {
    std::vector<Term> out;
    out.push_back(callable("goal"));
    while (cur_.kind == Tok::Comma) {
      shift();
      out.push_back(callable("goal"));
    }
    return out;
  }

  Term callable(const char* what) {
    if (cur_.kind != Tok::Atom) error(std::string("expected ") + what + ", found " + describe(cur_.kind));
    return term();
  }

  Term term() {
    switch (cur_.kind) {
      case Tok::Var: {
        std::string name = cur_.text;
        shift();
        if (name == "_") return Term::variable(next_var_++, "_");
        auto [it, inserted] = scope_.try_emplace(name, next_var_);
        if (inserted) ++next_var_;
        return Term::variable(it->second, name);
      }
      case Tok::Int: {
        auto v = cur_.value;
        shift();
        return Term::integer(v);
      }
      case Tok::Atom: {
        std::string name = cur_.text;
        shift();
        if (cur_.kind != Tok::LParen) return Term::atom(std::move(name));
        shift();
        std::vector<Term> args;
        args.push_back(term());
        while (cur_.kind == Tok::Comma) {
          shift();
          args.push_back(term());
        }
        expect(Tok::RParen);
        return Term::compound(std::move(name), std::move(args));
      }
      default:
        error(std::string("expected term, found ") + describe(cur_.kind));
    }
    return {};
  }

  void expect(Tok kind) {
    if (cur_.kind != kind)
      error(std::string("expected ") + describe(kind) + ", found " + describe(cur_.kind));
    shift();
  }

  void shift() { cur_ = lexer_.next(); }

  [[noreturn]] void error(const std::string& msg) { throw ParseError(msg, cur_.line, cur_.column); }

  void reset_scope() {
    scope_.clear();
    next_var_ = 0;
  }

  Lexer lexer_;
  Lexeme cur_;
  std::unordered_map<std::string, std::uint32_t> scope_;
  std::uint32_t next_var_ = 0;
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).program(); }

std::vector<Term> parse_query(std::string_view text) { return Parser(text).query(); }

}  // namespace lintab
