#ifndef HLSOPT_DIRECTIVE_OPT_HPP
#define HLSOPT_DIRECTIVE_OPT_HPP

#include <map>
#include <optional>

#include "hlsopt/ir.hpp"
#include "hlsopt/verify.hpp"

namespace hlsopt {

// Pipelines the band loop at position loopPos (0 = outermost, default
// innermost): all loops nested inside are fully unrolled, callees of calls in
// the region are pipelined with the same II, the loop gets
// {pipeline, targetII} and every outer perfectly nested loop gets flatten.
PassResult pipeline_loop(Program &p, Function &f, int bandIndex,
                         int64_t targetII, int loopPos = -1);

// Same legalization applied to a whole function body.
PassResult pipeline_func(Program &p, Function &f, int64_t targetII);

// Per-dimension partition demand derived from the access pattern of the
// pipelined/unrolled regions.
struct PartitionDemand {
  PartitionKind kind = PartitionKind::None;
  int64_t factor = 1;
  int64_t accesses = 0;  // unique accesses of the deciding group
};

// Decides cyclic/block partition factors from unique accesses and maximal
// constant index distances in all pipelined regions, aggregates demands
// inter-procedurally onto the instantiating buffers, and rewrites layout
// maps. Explicit overrides (array name -> per-dim factors) win.
PassResult array_partition(
    Program &p,
    const std::map<std::string, std::vector<int64_t>> *overrides = nullptr);

// Access-pattern analysis behind array_partition, exposed for testing:
// per array, per dimension demand for one function's pipelined regions.
std::map<std::string, std::vector<PartitionDemand>> partition_demands(
    const Function &f);

// Removes always-true conditions and dead branches of affine guards using
// interval analysis over the enclosing loop domains.
PassResult simplify_affine_if(Function &f);

// Store-to-load forwarding within straight-line regions, dead store removal
// and elimination of never-read local buffers.
PassResult store_forward(Function &f);

// Folds duplicate loads of one address and collapses duplicate stores.
PassResult simplify_memref_access(Function &f);

// Constant folding, identity simplification, common subexpression
// elimination and dead arithmetic removal. Idempotent.
PassResult canonicalize(Function &f);

}  // namespace hlsopt

#endif
