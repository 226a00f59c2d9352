#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affe/check.hpp"
#include "affe/eval.hpp"
#include "affe/infer.hpp"
#include "affe/monitor.hpp"
#include "affe/parser.hpp"
#include "affe/syntax.hpp"

namespace affe {

// Built-in prelude: int/string/unit, the linear `res` constructor, and the
// four resource operations.
TypeEnv builtin_env();

// Loads declarations (type constructors with kind schemes, primitive
// constants with type schemes) into an environment.
void load_prelude(TypeEnv& env, const std::vector<Declaration>& decls);

struct ProcessedBinding {
  std::string name;
  TypeScheme display_scheme;  // simplified unless disabled
  TypeScheme raw_scheme;      // pre-simplification
  std::shared_ptr<ElabExpr> elab;
  SExprPtr annotated;
  Constraint solved;
  bool poly = false;
};

// A full pipeline over one source file: declarations are registered, each
// top-level binding is annotated, inferred, generalized, simplified,
// checked against the internal rules, and added to the environment.
struct Pipeline {
  FreshSource fresh;
  TypeEnv env = builtin_env();
  MonitorTable table;   // pipeline-wide, indexed by node id
  int next_node = 0;
  bool simplify = true;
  bool cross_check = true;
  size_t n_base = 0;    // environment entries exempt from per-binding linearity

  std::vector<ProcessedBinding> bindings;

  Pipeline() { n_base = env.bindings.size(); }

  void load_declarations(const std::vector<Declaration>& decls);

  // Throws InferFailure / CheckError / std::runtime_error on annotation
  // violations.
  ProcessedBinding& process(const std::string& name, const SExprPtr& body);

  // Runs a whole parsed program (throws on the first failing binding).
  void process_program(const Program& prog);
};

// Evaluates the processed bindings in sequence; returns the final binding's
// outcome. The monitor is attached when given.
struct EvalRun {
  Store store;
  Permission perm;
  VEnv env;
  Outcome outcome;  // of the last binding
  std::string trace;
};

EvalRun eval_pipeline(const Pipeline& p, uint64_t fuel, Monitor* monitor = nullptr,
                      bool want_trace = false);

}  // namespace affe
