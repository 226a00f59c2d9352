#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "affe/parser.hpp"
#include "affe/pipeline.hpp"
#include "affe/printer.hpp"

namespace {

enum ExitCode {
  kOk = 0,
  kTypeError = 1,
  kRuntimeError = 2,
  kTimeOut = 3,
  kUsage = 4,
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* class_name(affe::ErrorClass c) {
  switch (c) {
    case affe::ErrorClass::Unbound: return "unbound";
    case affe::ErrorClass::Linearity: return "linearity";
    case affe::ErrorClass::RegionEscape: return "region-escape";
    case affe::ErrorClass::BorrowError: return "borrow";
    case affe::ErrorClass::KindMismatch: return "kind";
    case affe::ErrorClass::TypeMismatch: return "type";
    case affe::ErrorClass::Internal: return "internal";
  }
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affe: region-annotating, kind-inferring interpreter"};
  app.failure_message(CLI::FailureMessage::simple);

  std::string input_path, inline_text, prelude_path;
  bool infer_only = false, do_eval = false, do_check = false;
  bool print_constraints = false, print_regions = false, no_simplify = false, trace = false;
  uint64_t fuel = 100000;

  app.add_option("file", input_path, "source file (.affe)");
  app.add_option("--expr", inline_text, "inline source text");
  app.add_option("--prelude", prelude_path, "declaration file loaded first");
  app.add_flag("--infer-only", infer_only, "infer and print schemes only (default)");
  app.add_flag("--eval", do_eval, "evaluate after inference");
  app.add_flag("--check", do_check, "evaluate under the soundness monitor");
  app.add_option("--fuel", fuel, "evaluation step budget");
  app.add_flag("--print-constraints", print_constraints,
               "print solved constraints and pre-simplification schemes");
  app.add_flag("--print-regions", print_regions, "print the region-annotated program");
  app.add_flag("--no-simplify", no_simplify, "skip variance-based scheme simplification");
  app.add_flag("--trace", trace, "print an evaluation trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (input_path.empty() == inline_text.empty()) {
    std::cerr << "error: provide exactly one of a source file or --expr\n";
    return kUsage;
  }

  try {
    std::string source = inline_text.empty() ? read_file(input_path) : inline_text;

    affe::Pipeline pipeline;
    pipeline.simplify = !no_simplify;
    if (!prelude_path.empty()) {
      auto decls = affe::parse_declarations(read_file(prelude_path), pipeline.fresh);
      pipeline.load_declarations(decls);
    }
    affe::Program prog = affe::parse_program(source, pipeline.fresh);
    pipeline.load_declarations(prog.decls);

    for (auto& b : prog.bindings) {
      auto& pb = pipeline.process(b.name, b.body);
      if (print_regions)
        std::cout << "## " << pb.name << " regions: " << affe::print_surface(pb.annotated)
                  << "\n";
      if (print_constraints) {
        std::cout << "## " << pb.name
                  << " pre-simplification: " << affe::print_scheme(pb.raw_scheme) << "\n";
        for (auto& a : pb.solved.kinds)
          std::cout << "## constraint: " << affe::print_kind(a.lhs)
                    << " <= " << affe::print_kind(a.rhs) << "\n";
      }
      std::cout << "# " << pb.name << " : " << affe::print_scheme(pb.display_scheme) << "\n";
    }

    if (do_eval || do_check) {
      affe::Monitor monitor(pipeline.table);
      affe::EvalRun run = affe::eval_pipeline(pipeline, fuel,
                                              do_check ? &monitor : nullptr, trace);
      if (trace) std::cout << run.trace;
      switch (run.outcome.tag) {
        case affe::Outcome::Tag::TimeOut:
          std::cout << "timeout\n";
          return kTimeOut;
        case affe::Outcome::Tag::Error:
          std::cout << "runtime error: " << run.outcome.error << "\n";
          return kRuntimeError;
        case affe::Outcome::Tag::Ok:
          std::cout << affe::show_result(run.outcome.result) << "\n";
          break;
      }
      if (do_check && !monitor.violations().empty()) {
        std::cout << "monitor violations:\n" << monitor.report();
        return kRuntimeError;
      }
    }
    return kOk;
  } catch (const affe::ParseError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return kTypeError;
  } catch (const affe::InferFailure& e) {
    std::cerr << "type error (" << class_name(e.error.cls) << "): " << e.error.message;
    if (e.error.loc.line) std::cerr << " at line " << e.error.loc.line;
    std::cerr << "\n";
    return kTypeError;
  } catch (const affe::CheckError& e) {
    std::cerr << "internal check failure: " << e.what() << "\n";
    return kTypeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
