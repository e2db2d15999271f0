#ifndef HLSOPT_VERIFY_HPP
#define HLSOPT_VERIFY_HPP

#include <string>
#include <vector>

#include "hlsopt/ir.hpp"

namespace hlsopt {

struct Diagnostic {
  std::string path;     // function name + statement path
  std::string rule;     // stable rule id
  std::string message;

  std::string str() const { return path + ": [" + rule + "] " + message; }
};

// Structural/type/SSA/directive checks. Empty result means the IR is
// well-formed. Never mutates the program.
std::vector<Diagnostic> verify(const Program &p);
std::vector<Diagnostic> verify(const Function &f, const Program *context = nullptr);

// Outcome of a transform pass: diagnostics explain why a transform was
// skipped or rejected; `changed` reports whether the IR was touched.
struct PassResult {
  bool changed = false;
  std::vector<Diagnostic> diags;
  bool ok() const { return diags.empty(); }
  static PassResult unchanged() { return {}; }
  static PassResult skipped(std::string path, std::string rule,
                            std::string msg) {
    PassResult r;
    r.diags.push_back({std::move(path), std::move(rule), std::move(msg)});
    return r;
  }
};

}  // namespace hlsopt

#endif
