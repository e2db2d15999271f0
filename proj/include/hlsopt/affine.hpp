#ifndef HLSOPT_AFFINE_HPP
#define HLSOPT_AFFINE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hlsopt {

// Integer expressions built from +, constant *, floordiv and mod by a
// positive constant. Leaves are either constants or positional inputs
// ("dims"). Inside memref layout maps a dim is a logical array dimension;
// inside statements a dim refers to an SSA value id.
enum class ExprKind : uint8_t { Constant, Dim, Add, MulConst, FloorDiv, Mod };

int64_t floor_div(int64_t a, int64_t b);
int64_t floor_mod(int64_t a, int64_t b);
int64_t ceil_div(int64_t a, int64_t b);

class AffineExpr {
public:
  AffineExpr() = default;

  static AffineExpr constant(int64_t value);
  static AffineExpr dim(uint32_t index);
  static AffineExpr add(AffineExpr a, AffineExpr b);
  static AffineExpr add(AffineExpr a, int64_t c);
  static AffineExpr sub(AffineExpr a, AffineExpr b);
  static AffineExpr mul(AffineExpr a, int64_t factor);
  static AffineExpr floorDiv(AffineExpr a, int64_t divisor);  // divisor > 0
  static AffineExpr mod(AffineExpr a, int64_t divisor);       // divisor > 0

  bool valid() const { return node_ != nullptr; }
  ExprKind kind() const;
  int64_t constantValue() const;   // Constant
  uint32_t dimIndex() const;       // Dim
  int64_t rhsConstant() const;     // MulConst/FloorDiv/Mod
  AffineExpr lhs() const;          // Add / MulConst / FloorDiv / Mod operand
  AffineExpr rhs() const;          // Add only

  bool isConstant() const { return valid() && kind() == ExprKind::Constant; }

  int64_t evaluate(std::span<const int64_t> dims) const;
  // Substitute dim(i) -> repl[i]. Every referenced dim must be covered.
  AffineExpr replaceDims(std::span<const AffineExpr> repl) const;
  // Substitute a single dim, leaving others untouched.
  AffineExpr replaceDim(uint32_t index, const AffineExpr &repl) const;
  void collectDims(std::vector<uint32_t> &out) const;
  uint32_t maxDimPlusOne() const;
  bool usesDim(uint32_t index) const;

  // Canonical sum-of-terms form; structural equality of canonical forms is
  // the equality used for address comparison and CSE.
  AffineExpr canonical() const;
  bool operator==(const AffineExpr &other) const;  // structural
  bool operator!=(const AffineExpr &other) const { return !(*this == other); }

  std::string str() const;  // deterministic, dims printed as d0, d1, ...
  std::string str(const std::vector<std::string> &dimNames) const;

  // Inclusive bounds of the expression when each dim ranges over the given
  // inclusive interval. Exact for linear expressions, conservative for
  // div/mod.
  std::pair<int64_t, int64_t> range(
      std::span<const std::pair<int64_t, int64_t>> dimRanges) const;

private:
  struct Node {
    ExprKind kind;
    int64_t value = 0;  // constant / dim index / rhs constant
    std::shared_ptr<const Node> a, b;
  };
  explicit AffineExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static AffineExpr make(ExprKind k, int64_t v, AffineExpr a = {},
                         AffineExpr b = {});
  std::shared_ptr<const Node> node_;
};

// Decomposition of an expression as sum(coeff_i * term_i) + constant where a
// term is a dim or an (already canonical) floordiv/mod subexpression. Used
// for constant-difference tests: two expressions differ by a constant iff
// their term lists are identical.
struct LinearForm {
  struct Term {
    ExprKind kind;       // Dim, FloorDiv or Mod
    uint32_t dim = 0;    // Dim
    AffineExpr sub;      // canonical operand for FloorDiv/Mod
    int64_t divisor = 0; // FloorDiv/Mod

    bool operator==(const Term &o) const;
    bool operator<(const Term &o) const;
  };
  std::vector<std::pair<Term, int64_t>> terms;  // sorted, coeff != 0
  int64_t constant = 0;

  static LinearForm of(const AffineExpr &e);
  AffineExpr toExpr() const;
  bool sameShape(const LinearForm &o) const;  // equal terms, any constant
  // Constant difference a - b when both have identical terms.
  static std::optional<int64_t> constantDifference(const AffineExpr &a,
                                                   const AffineExpr &b);
  // True when the expression contains no floordiv/mod terms.
  bool isLinear() const;
};

struct AffineMap {
  uint32_t numInputs = 0;
  std::vector<AffineExpr> results;

  static AffineMap identity(uint32_t n);
  bool isIdentity() const;
  std::vector<int64_t> evaluate(std::span<const int64_t> inputs) const;
  std::string str() const;
  bool operator==(const AffineMap &o) const;
};

// result(x) = outer(inner(x)); requires outer.numInputs == inner.results.size().
AffineMap compose_affine(const AffineMap &outer, const AffineMap &inner);

enum class PartitionKind : uint8_t { None, Cyclic, Block };

struct DimPartition {
  PartitionKind kind = PartitionKind::None;
  int64_t factor = 1;
  bool operator==(const DimPartition &o) const = default;
};

// Layout map of a rank-N array: N inputs, 2N results; results[d] is the
// partition index of dimension d, results[N+d] the physical index.
// Cyclic with factor F: (d mod F, d floordiv F).
// Block with factor F:  (d floordiv B, d mod B) where B = ceil(extent/F).
AffineMap make_partition_layout(std::span<const int64_t> shape,
                                std::span<const DimPartition> parts);
std::optional<std::vector<DimPartition>> decode_partition_layout(
    const AffineMap &layout, std::span<const int64_t> shape);

}  // namespace hlsopt

#endif
