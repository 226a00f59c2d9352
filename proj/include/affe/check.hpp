#pragma once

#include <string>

#include "affe/infer.hpp"
#include "affe/monitor.hpp"
#include "affe/syntax.hpp"

namespace affe {

struct CheckError : std::runtime_error {
  std::string rule;
  explicit CheckError(const std::string& r, const std::string& msg)
      : std::runtime_error("[" + r + "] " + msg), rule(r) {}
};

// Syntax-directed checking of an elaborated term against the internal
// typing rules, using entailment for every side condition. `c` is the
// inference run's solved constraint; `env` may contain every binding mode.
// Records the per-node environment partition classes into `table` when
// given (the monitor's side table). Returns the term's type.
//
// Base (top-level) bindings are marked via `n_globals`: the first
// `n_globals` entries of `env` are exempt from droppability and capture
// constraints, matching the per-binding top-level semantics.
TypePtr check_internal(InferCtx& ctx, const Constraint& c, const TypeEnv& env,
                       const EExprPtr& e, MonitorTable* table = nullptr,
                       size_t n_globals = 0);

}  // namespace affe
