#ifndef HLSOPT_FRONTEND_HPP
#define HLSOPT_FRONTEND_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "hlsopt/ir.hpp"

namespace hlsopt {

// Rejection of source outside the accepted C subset. The message carries a
// file:line:col prefix.
struct SourceError : std::runtime_error {
  int line = 0, col = 0;
  SourceError(const std::string &file, int line_, int col_,
              const std::string &msg)
      : std::runtime_error(file + ":" + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_), col(col_) {}
};

// Parses the restricted C kernel subset into general (non-affine) loop IR.
// Accepted: functions over fixed-size array / scalar / scalar-pointer
// parameters; `for (int v = L; v < U; v += S)` loops with positive constant
// step; `if` with &&-joined comparisons; assignments with = += -= *=; local
// array declarations; single-assignment scalar temporaries; expressions over
// + - * / %; calls to previously defined functions; a trailing `return`.
// Scalar pointers become rank-1 extent-1 arrays and returned values become
// output array arguments. Everything else is rejected with a SourceError.
Program parse_c(const std::string &source,
                const std::string &filename = "<input>");

// Marks every loop whose bounds are affine expressions of enclosing affine
// induction variables and constants as affine, and every memory access and
// guard whose index expressions qualify likewise. Best-effort: non-qualifying
// operations stay general. Returns the number of operations raised.
int raise_to_affine(Program &p);
int raise_to_affine(Function &f);

}  // namespace hlsopt

#endif
