#include <doctest.h>

#include <fstream>
#include <sstream>

#include "affe/parser.hpp"
#include "affe/printer.hpp"
#include "affe/region.hpp"
#include "affe/syntax.hpp"

using namespace affe;

TEST_CASE("parse basic terms") {
  SExprPtr id = parse_expr("fun x -> x");
  REQUIRE(id->tag == SurfaceExpr::Tag::Lam);
  CHECK(id->var == "x");
  CHECK(id->a->tag == SurfaceExpr::Tag::Var);
  CHECK(id->a->var == "x");

  SExprPtr res = parse_expr("let a = create 8 in destroy a");
  REQUIRE(res->tag == SurfaceExpr::Tag::Let);
  CHECK(res->a->tag == SurfaceExpr::Tag::App);
  CHECK(res->a->a->tag == SurfaceExpr::Tag::Create);
  CHECK(res->b->a->tag == SurfaceExpr::Tag::Destroy);

  // parsing is scope-free: an unbound borrow target parses fine
  SExprPtr b = parse_expr("&!x");
  CHECK(b->tag == SurfaceExpr::Tag::Borrow);
  CHECK(b->bspec == BorrowSpec::Exclusive);
  CHECK(b->var == "x");
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_expr("fun x ->");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.loc.line == 1);
    CHECK(e.loc.column > 1);
  }
}

TEST_CASE("sequencing desugars to a wildcard let") {
  SExprPtr e = parse_expr("f x; g y");
  REQUIRE(e->tag == SurfaceExpr::Tag::Let);
  CHECK(e->var.substr(0, 2) == "_w");
}

TEST_CASE("borrow match patterns") {
  SExprPtr e = parse_expr("match p with &(x, y) -> x");
  REQUIRE(e->tag == SurfaceExpr::Tag::Match);
  CHECK(e->mspec == MatchSpec{BorrowSpec::Shared});
  SExprPtr e2 = parse_expr("match p with &!(x, y) -> x");
  CHECK(e2->mspec == MatchSpec{BorrowSpec::Exclusive});
  SExprPtr e3 = parse_expr("match p with (x, y) -> x");
  CHECK(e3->mspec == MatchSpec{});
}

TEST_CASE("print and reparse surface programs round-trip") {
  const char* corpus[] = {
      "fun x -> x",
      "fun f -> fun x -> f x",
      "let a = create 8 in destroy a",
      "let w = File.write &!h in w a; w b",
      "fun a -> let x = f &!a in g &!x; f &x &x",
      "match p with (x, y) -> (y, x)",
      "match p with &!(x, y) -> update x 1",
      "{| f &a |}",
      "fun a -> set r {| g &a |}; f &a",
      "(1, \"two\", ())",
      "let r = create 0 in let v = {| observe &r |} in destroy r; v",
  };
  for (const char* src : corpus) {
    CAPTURE(src);
    SExprPtr once = parse_expr(src);
    SExprPtr twice = parse_expr(print_surface(once));
    CHECK(surface_equal(once, twice));
  }
}

TEST_CASE("annotated programs print deterministically") {
  SExprPtr e1 = annotate_program(parse_expr("fun a -> let x = f &!a in g &!x; f &x &x"));
  SExprPtr e2 = annotate_program(parse_expr("fun a -> let x = f &!a in g &!x; f &x &x"));
  CHECK(print_surface(e1) == print_surface(e2));
  CHECK(print_surface(e1).find("{|1:a!|") != std::string::npos);
}

TEST_CASE("type scheme parsing and printing") {
  FreshSource fs;
  TypeScheme app = parse_scheme("('a -{'k}> 'b) -> ('a -{'k}> 'b)", fs);
  CHECK(print_scheme(app) == "('a -{'k}> 'b) -> 'a -{'k}> 'b");

  TypeScheme compose = parse_scheme(
      "('k <= 'k_1) => ('b -{'k}> 'c) -> ('a -{'k_1}> 'b) -{'k}> ('a -{'k_1}> 'c)", fs);
  // the printer renames variables in creation order; the parse assigned
  // ids in textual order 'b,'c,'a
  CHECK(print_scheme(compose) ==
        "('k <= 'k_1) => ('a -{'k}> 'b) -> ('c -{'k_1}> 'a) -{'k}> 'c -{'k_1}> 'b");

  TypeScheme mono = parse_scheme("int", fs);
  CHECK(print_scheme(mono) == "int");
}

TEST_CASE("alpha equivalence") {
  FreshSource fs;
  TypeScheme a1 = parse_scheme("('a -{'k}> 'b) -> ('a -{'k}> 'b)", fs);
  TypeScheme a2 = parse_scheme("('x -{'q}> 'y) -> ('x -{'q}> 'y)", fs);
  CHECK(alpha_equiv(a1, a2));

  TypeScheme c1 = parse_scheme(
      "('k <= 'k_1) => ('b -{'k}> 'c) -> ('a -{'k_1}> 'b) -{'k}> ('a -{'k_1}> 'c)", fs);
  TypeScheme c2 = parse_scheme(
      "('k_1 <= 'k, 'k_1 <= 'k) => ('b -{'k_1}> 'c) -> ('a -{'k}> 'b) -{'k_1}> ('a -{'k}> 'c)",
      fs);
  CHECK(alpha_equiv(c1, c2));  // permuted/duplicated constraints, renamed vars
  CHECK_FALSE(alpha_equiv(a1, c1));

  // a missing constraint is not equivalent
  TypeScheme c3 = parse_scheme(
      "('b -{'k}> 'c) -> ('a -{'k_1}> 'b) -{'k}> ('a -{'k_1}> 'c)", fs);
  CHECK_FALSE(alpha_equiv(c1, c3));
}

TEST_CASE("environments reject duplicate subjects") {
  TypeEnv env;
  env.bind(Binding::regular("x", TypeScheme::of_type(Type::mk_app("int", {}))));
  CHECK_THROWS_AS(env.bind(Binding::regular("x", TypeScheme::of_type(Type::mk_app("int", {})))),
                  std::invalid_argument);
}

TEST_CASE("splitting shape validator") {
  auto lam = ElabExpr::mk(ElabExpr::Tag::Lam);
  lam->var = "x";
  lam->a = ElabExpr::mk(ElabExpr::Tag::Var);
  lam->a->var = "x";
  std::string err;
  CHECK(validate_splitting_shape(lam, &err));
  lam->split.tags.push_back({"x", SplitTag::Both});
  CHECK_FALSE(validate_splitting_shape(lam, &err));

  auto app = ElabExpr::mk(ElabExpr::Tag::App);
  app->a = ElabExpr::mk(ElabExpr::Tag::Var);
  app->b = ElabExpr::mk(ElabExpr::Tag::Var);
  app->split.tags.push_back({"x", SplitTag::Left});
  app->split.tags.push_back({"x", SplitTag::Right});
  CHECK_FALSE(validate_splitting_shape(app, &err));
}
