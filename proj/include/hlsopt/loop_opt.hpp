#ifndef HLSOPT_LOOP_OPT_HPP
#define HLSOPT_LOOP_OPT_HPP

#include "hlsopt/dependence.hpp"
#include "hlsopt/ir.hpp"
#include "hlsopt/verify.hpp"

namespace hlsopt {

// Band passes address the band rooted at the bandIndex-th top-level loop of
// the function body. Bands are re-collected internally, so callers can chain
// passes without holding pointers across structural changes.

// Sinks statements between band loops into the innermost body. State-modifying
// statements land under a guard firing on the first (resp. last) iteration of
// the skipped loops; other statements are hoisted out of the guard.
PassResult perfectize(Function &f, int bandIndex);

// Permutes a perfect band. With permMap, entry i is the new position of loop
// i (outermost = 0); without it the best legal order is chosen, moving
// dependence-carrying loops outward (larger carried distance first).
PassResult order_opt(Function &f, int bandIndex,
                     const std::vector<int> *permMap = nullptr);

// Replaces variable loop bounds by their extreme constant values over the
// enclosing ranges and guards the body with the original iteration domain.
PassResult remove_variable_bound(Function &f, int bandIndex);

// Tiles a perfect rectangular band; intra-tile loops are relocated innermost.
// Size 1 leaves a loop untiled. Non-dividing sizes get boundary guards.
PassResult tile(Function &f, int bandIndex, const std::vector<int64_t> &sizes);

// Unrolls the loop at body[index] of the given statement list by `factor`
// (factor >= trip count fully unrolls; a remainder loop is emitted when the
// trip count is not divisible).
PassResult unroll(Function &f, StmtList &parent, size_t index, int64_t factor);
// Unrolls the innermost loop of a band.
PassResult unroll_innermost(Function &f, int bandIndex, int64_t factor);

// Fully unrolls every loop nested inside `body` (not the statements of body
// itself). All nested loops need constant trip counts once enclosing loops
// are unrolled; otherwise nothing is changed and a diagnostic is returned.
PassResult fully_unroll_nested(Function &f, StmtList &body);

// Permutation legality on dependence vectors: see order_opt.
bool permutationLegal(const DependenceResult &deps,
                      const std::vector<int> &newPosOf);

}  // namespace hlsopt

#endif
