#include <doctest.h>

#include <functional>

#include "affe/monitor.hpp"
#include "affe/parser.hpp"
#include "affe/pipeline.hpp"
#include "affe/printer.hpp"

using namespace affe;

namespace {

EvalRun run_checked(const std::string& src, std::vector<Violation>& out,
                    uint64_t fuel = 100000) {
  Pipeline p;
  Program prog = parse_program(src, p.fresh);
  p.process_program(prog);
  Monitor monitor(p.table);
  EvalRun run = eval_pipeline(p, fuel, &monitor);
  out = monitor.violations();
  return run;
}

}  // namespace

TEST_CASE("rawloc strips modifiers; constants contribute nothing") {
  Result addr = Value::mk_addr({4, {BorrowSpec::Shared, BorrowSpec::Exclusive}});
  auto m = rawloc(addr);
  REQUIRE(m.size() == 1);
  CHECK(m.at(4) == 1);

  CHECK(rawloc(Value::mk_int(7)).empty());

  VEnv env;
  env.vars["x"] = Value::mk_addr({2, {}});
  env.vars["y"] = Value::mk_addr({2, {BorrowSpec::Shared}});
  auto locs = rawloc_env(env);
  CHECK(locs.at(2) == 2);  // multiset: both entries count
}

TEST_CASE("reach traces pairs and contents") {
  Store store;
  Storable r1;
  r1.tag = Storable::Tag::Resource;
  r1.content = Value::mk_int(1);
  Loc l1 = salloc(store, r1);
  Loc l2 = salloc(store, r1);
  Storable pair;
  pair.tag = Storable::Tag::Pair;
  pair.kind = Kind::mk_const(Quality::Lin, 0);
  pair.fst = Value::mk_addr({l1, {}});
  pair.snd = Value::mk_addr({l2, {}});
  Loc lp = salloc(store, pair);

  VEnv env;
  env.vars["x"] = Value::mk_addr({lp, {}});
  ReachSet r = reach(store, env);
  CHECK(r.contains({lp, {}}));
  CHECK(r.contains({l1, {}}));
  CHECK(r.contains({l2, {}}));
  CHECK(r.count_raw(l1) == 1);

  VEnv consts;
  consts.vars["c"] = Value::mk_int(3);
  CHECK(reach(store, consts).counts.empty());
}

TEST_CASE("reach saturates on self-referential cells") {
  Store store;
  Storable pair;
  pair.tag = Storable::Tag::Pair;
  pair.kind = Kind::mk_const(Quality::Un, 0);
  Loc lp = salloc(store, pair);
  store.at(lp).fst = Value::mk_addr({lp, {}});  // cycle
  store.at(lp).snd = Value::mk_int(0);

  VEnv env;
  env.vars["x"] = Value::mk_addr({lp, {}});
  ReachSet r = reach(store, env);
  CHECK(r.count_raw(lp) >= store.size() + 1);  // saturated, terminated
}

TEST_CASE("perm_closure strips modifier suffixes") {
  Permission p;
  p.add({3, {BorrowSpec::Shared, BorrowSpec::Exclusive}});
  auto c = perm_closure(p);
  CHECK(c.count({3, {BorrowSpec::Shared, BorrowSpec::Exclusive}}));
  CHECK(c.count({3, {BorrowSpec::Exclusive}}));
  CHECK(c.count({3, {}}));
  CHECK(c.size() == 3);

  Permission single;
  single.add({5, {}});
  CHECK(perm_closure(single).size() == 1);
  CHECK(perm_closure({}).empty());
}

TEST_CASE("create/destroy trace passes all conditions") {
  std::vector<Violation> v;
  EvalRun run = run_checked("let main = let r = create 8 in destroy r", v);
  REQUIRE(run.outcome.is_ok());
  for (auto& violation : v) MESSAGE(violation.condition, ": ", violation.detail);
  CHECK(v.empty());
}

TEST_CASE("region/observe trace passes the frame and restore conditions") {
  std::vector<Violation> v;
  EvalRun run = run_checked(
      "let main = let r = create 9 in let v = {| observe &r |} in destroy r; v", v);
  REQUIRE(run.outcome.is_ok());
  for (auto& violation : v) MESSAGE(violation.condition, ": ", violation.detail);
  CHECK(v.empty());
}

TEST_CASE("update through a region passes") {
  std::vector<Violation> v;
  EvalRun run = run_checked(
      "let main = let r = create 1 in {| update &!r 5 |}; "
      "let v = {| observe &r |} in destroy r; v",
      v);
  REQUIRE(run.outcome.is_ok());
  for (auto& violation : v) MESSAGE(violation.condition, ": ", violation.detail);
  CHECK(v.empty());
}

namespace {

// A deliberately broken evaluator step: forget to revoke the permission and
// to free the cell on destroy. The monitor must flag R4/R9/R10-style
// violations when replayed over the recorded pre/post states.
class BrokenDestroyMonitorProbe {
 public:
  static void run(std::vector<Violation>& out) {
    Pipeline p;
    Program prog = parse_program("let main = let r = create 8 in destroy r", p.fresh);
    p.process_program(prog);
    Monitor monitor(p.table);

    // evaluate honestly up to the let body, then fake a broken destroy:
    // result (), store unchanged (not freed), permission kept
    Store store;
    Storable w;
    w.tag = Storable::Tag::Resource;
    w.content = Value::mk_int(8);
    Loc l = salloc(store, w);
    Permission perm;
    perm.add({l, {}});
    VEnv env;
    env.vars["r"] = Value::mk_addr({l, {}});

    // locate the destroy application node and its recorded classes
    std::function<std::shared_ptr<ElabExpr>(const std::shared_ptr<ElabExpr>&)> find_app =
        [&](const std::shared_ptr<ElabExpr>& e) -> std::shared_ptr<ElabExpr> {
      if (!e) return nullptr;
      if (e->tag == ElabExpr::Tag::App) return e;
      if (auto r = find_app(e->a)) return r;
      return find_app(e->b);
    };
    auto app = find_app(p.bindings[0].elab);
    REQUIRE(app);

    monitor.on_enter(store, perm, env, *app);
    // broken post-state: cell not freed, permission not revoked
    monitor.on_exit(store, perm, env, *app, store, perm, Value::mk_unit());
    out = monitor.violations();
  }
};

}  // namespace

TEST_CASE("a broken destroy is flagged by the resource conditions") {
  std::vector<Violation> v;
  BrokenDestroyMonitorProbe::run(v);
  bool r9 = false;
  for (auto& violation : v)
    if (violation.condition == "R9") r9 = true;
  CHECK(r9);
}

TEST_CASE("partition raw locations stay disjoint on a mixed program") {
  std::vector<Violation> v;
  EvalRun run = run_checked(
      "let main = let a = create 1 in let b = create 2 in "
      "let x = {| observe &a |} in destroy a; destroy b; x",
      v);
  REQUIRE(run.outcome.is_ok());
  for (auto& violation : v) MESSAGE(violation.condition, ": ", violation.detail);
  CHECK(v.empty());
}

TEST_CASE("containment: region results reach no address at the region's level") {
  // the region result is a plain value; its reach holds no leveled borrows
  Pipeline p;
  Program prog = parse_program(
      "let main = let r = create 3 in let v = {| observe &r |} in destroy r; v", p.fresh);
  p.process_program(prog);
  Monitor monitor(p.table);
  EvalRun run = eval_pipeline(p, 100000, &monitor);
  REQUIRE(run.outcome.is_ok());
  ReachSet res = reach_result(run.outcome.store, run.outcome.result);
  for (auto& [addr, count] : res.counts) {
    (void)count;
    CHECK(addr.mods.empty());
  }
}
