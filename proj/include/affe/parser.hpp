#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "affe/syntax.hpp"

namespace affe {

struct ParseError : std::runtime_error {
  SourceLoc loc;
  ParseError(const std::string& msg, SourceLoc l)
      : std::runtime_error(msg + " at line " + std::to_string(l.line) + ", column " +
                           std::to_string(l.column)),
        loc(l) {}
};

// A declared type constructor or primitive constant.
struct Declaration {
  enum class Kind { TyCon, Val };
  Kind kind;
  std::string name;
  KindScheme kscheme;  // TyCon
  TypeScheme scheme;   // Val
};

// One top-level binding: `let name = expr`.
struct TopBinding {
  std::string name;
  SExprPtr body;
  SourceLoc loc;
};

struct Program {
  std::vector<Declaration> decls;
  std::vector<TopBinding> bindings;
};

// Parses a whole source file: declarations and top-level let bindings.
// Fresh type/kind variables for schemes are drawn from `fresh`.
Program parse_program(const std::string& source, FreshSource& fresh);

// Parses a single expression (testing convenience).
SExprPtr parse_expr(const std::string& source);

// Parses a type scheme in the printer's rendering (constraints, bounds,
// arrows, postfix and infix constructors).
TypeScheme parse_scheme(const std::string& source, FreshSource& fresh);

// Parses declaration text only (prelude files).
std::vector<Declaration> parse_declarations(const std::string& source, FreshSource& fresh);

}  // namespace affe
