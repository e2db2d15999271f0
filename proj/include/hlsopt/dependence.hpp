#ifndef HLSOPT_DEPENDENCE_HPP
#define HLSOPT_DEPENDENCE_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsopt/ir.hpp"

namespace hlsopt {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DepKind : uint8_t { Flow, Anti, Output };

// Per-loop dependence distance; `known` is false when the distance varies
// between dependent iteration pairs. min/max bound the observed distances
// either way.
struct DepDistance {
  bool known = true;
  int64_t value = 0;
  int64_t minValue = 0;
  int64_t maxValue = 0;
  bool operator==(const DepDistance &o) const {
    return known == o.known && minValue == o.minValue &&
           maxValue == o.maxValue && (!known || value == o.value);
  }
};

struct BandAccess {
  std::string array;
  bool isStore = false;
  int depth = 0;  // number of band loops enclosing the access
  std::vector<int> path;  // relative to the band's outermost loop
};

// Direct dependence between two accesses of a band:
//   Flow:   a store and the loads that read the stored value before the next
//           store to the same address,
//   Anti:   a load and the next store to the same address,
//   Output: consecutive stores to the same address.
// The distance vector covers the band loops enclosing both accesses
// (outermost first) and is lexicographically non-negative by construction.
struct DependenceVector {
  int src = 0, dst = 0;  // indices into DependenceResult::accesses
  DepKind kind = DepKind::Flow;
  std::vector<DepDistance> distance;

  bool operator==(const DependenceVector &o) const {
    return src == o.src && dst == o.dst && kind == o.kind &&
           distance == o.distance;
  }
  bool carried() const {  // any nonzero or unknown component
    for (auto &d : distance)
      if (!d.known || d.value != 0) return true;
    return false;
  }
  // Index of the carrying loop: first component that is unknown or nonzero.
  std::optional<size_t> carryingLoop() const {
    for (size_t i = 0; i < distance.size(); ++i)
      if (!distance[i].known || distance[i].value != 0) return i;
    return std::nullopt;
  }
};

struct DependenceResult {
  std::vector<BandAccess> accesses;  // textual order within the band
  std::vector<DependenceVector> dependences;
};

// Enumerates the band's iteration domain and derives all direct dependences
// from the access trace. Exact (guards and triangular bounds included) but
// bounded: bands whose trace exceeds maxTraceEvents raise AnalysisError, as
// do non-affine bands and bands containing calls.
DependenceResult analyze_dependences(const Function &f, const Band &band,
                                     uint64_t maxTraceEvents = (1ull << 22));

std::string depKindName(DepKind k);

}  // namespace hlsopt

#endif
