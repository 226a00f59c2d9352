#include <doctest.h>

#include <array>
#include <cstdio>
#include <string>

#include "affe/parser.hpp"
#include "affe/pipeline.hpp"

using namespace affe;

namespace {

struct CliResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(AFFE_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  int status = pclose(pipe);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, out};
}

std::string corpus(const std::string& name) {
  return std::string(AFFE_CORPUS_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("infer-only on app prints the scheme and exits 0") {
  CliResult r = run_cli("--infer-only " + corpus("app.affe"));
  CHECK(r.exit_code == 0);
  CHECK(r.output == "# app : ('a -{'k}> 'b) -> 'a -{'k}> 'b\n");
}

TEST_CASE("eval on create/destroy prints unit") {
  CliResult r = run_cli("--eval " + corpus("create_destroy.affe"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("()") != std::string::npos);
}

TEST_CASE("the double-use program exits 1 with a linearity diagnostic") {
  CliResult r = run_cli("--infer-only --prelude " + corpus("file.prelude") + " " +
                        corpus("neg_double_use.affe"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("linearity") != std::string::npos);
}

TEST_CASE("check mode runs the monitor") {
  CliResult r = run_cli("--check " + corpus("create_destroy.affe"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("monitor violations") == std::string::npos);
}

TEST_CASE("usage errors exit 4") {
  CliResult r = run_cli("");
  CHECK(r.exit_code == 4);
  CliResult r2 = run_cli("--no-such-flag file.affe");
  CHECK(r2.exit_code == 4);
}

TEST_CASE("timeout exits 3") {
  CliResult r = run_cli("--eval --fuel 0 " + corpus("create_destroy.affe"));
  CHECK(r.exit_code == 3);
}

TEST_CASE("golden stability: identical bytes across runs for the corpus") {
  const char* cases[] = {"app.affe", "compose.affe", "create_destroy.affe",
                         "pair_example.affe"};
  for (const char* c : cases) {
    CAPTURE(c);
    CliResult a = run_cli("--infer-only " + corpus(c));
    CliResult b = run_cli("--infer-only " + corpus(c));
    CHECK(a.exit_code == b.exit_code);
    CHECK(a.output == b.output);
  }
  CliResult a = run_cli("--eval --trace " + corpus("create_destroy.affe"));
  CliResult b = run_cli("--eval --trace " + corpus("create_destroy.affe"));
  CHECK(a.output == b.output);
}

TEST_CASE("load_prelude registers constructors and primitives") {
  Pipeline p;
  auto decls = parse_declarations(
      "type ('s) st : lin\nval close : st -> unit\n", p.fresh);
  p.load_declarations(decls);
  CHECK(p.env.lookup_tycon("st"));
  const Binding* close = p.env.lookup("close");
  REQUIRE(close);
  CHECK(close->primitive);

  // the builtin prelude carries the four resource operations' types
  InferCtx ctx(p.fresh, p.env);
  TypeScheme create = builtin_prim_scheme(ctx, ElabExpr::Tag::Create);
  REQUIRE(create.ctr.kinds.size() == 1);
  CHECK(create.ctr.kinds[0].rhs == Kind::mk_const(Quality::Un, 0));

  // duplicate declarations are rejected
  CHECK_THROWS(p.load_declarations(decls));

  // empty prelude: just builtins
  Pipeline p2;
  CHECK(p2.env.lookup_tycon("int"));
  CHECK(p2.env.lookup_tycon("res"));
}

TEST_CASE("declaration parsing: the session st constructor") {
  FreshSource fs;
  auto decls = parse_declarations("type ('a : 'k) st : lin", fs);
  REQUIRE(decls.size() == 1);
  CHECK(decls[0].kind == Declaration::Kind::TyCon);
  REQUIRE(decls[0].kscheme.args.size() == 1);
  CHECK(decls[0].kscheme.args[0].is_var());
  CHECK(decls[0].kscheme.result == Kind::mk_const(Quality::Lin, 0));
  CHECK(decls[0].kscheme.kvars.size() == 1);
}

TEST_CASE("malformed declarations are rejected") {
  FreshSource fs;
  CHECK_THROWS_AS(parse_declarations("type st", fs), ParseError);
  CHECK_THROWS_AS(parse_declarations("val x int", fs), ParseError);
}
