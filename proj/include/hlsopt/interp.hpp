#ifndef HLSOPT_INTERP_HPP
#define HLSOPT_INTERP_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsopt/ir.hpp"

namespace hlsopt {

// Flat row-major value buffer. Partition layouts are ignored by execution;
// they are pure performance annotations.
struct Buffer {
  ElemKind kind = ElemKind::F32;
  std::vector<int64_t> shape;
  std::vector<float> f;
  std::vector<int32_t> i;
  std::vector<uint8_t> init;

  static Buffer make(std::vector<int64_t> shape, ElemKind kind,
                     bool initialized = false);
  int64_t size() const { return static_cast<int64_t>(init.size()); }
  bool operator==(const Buffer &o) const;
};

struct Tape {
  std::map<std::string, Buffer> arrays;
  std::map<std::string, double> fscalars;
  std::map<std::string, int64_t> iscalars;
};

struct InterpError : std::runtime_error {
  std::string path;
  InterpError(std::string p, const std::string &msg)
      : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

struct InterpStats {
  uint64_t stores = 0;
  uint64_t loads = 0;
  uint64_t arith = 0;
  uint64_t loopIterations = 0;
};

// Executes the named function (default: program top) on the given inputs and
// returns the resulting tape. Loops iterate [lower, upper) by step, guards
// take the then-branch iff every constraint holds, directives are inert.
// Out-of-bounds accesses, uninitialized reads and division by zero trap.
Tape execute(const Program &p, const Tape &inputs, const std::string &func = "",
             InterpStats *stats = nullptr);
Tape execute(const Function &f, const Tape &inputs,
             InterpStats *stats = nullptr);

}  // namespace hlsopt

#endif
