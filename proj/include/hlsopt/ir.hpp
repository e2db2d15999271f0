#ifndef HLSOPT_IR_HPP
#define HLSOPT_IR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hlsopt/affine.hpp"

namespace hlsopt {

using ValueId = uint32_t;
inline constexpr ValueId kNoValue = 0xFFFFFFFFu;

enum class ElemKind : uint8_t { F32, I32 };
enum class ValueKind : uint8_t { F32, I32, Index };
enum class MemSpace : uint8_t { OnChip1P, OnChip2PSimple, OnChip2PTrue, OffChip };
enum class IfaceKind : uint8_t { Axi, Bram };

inline ValueKind valueKindOf(ElemKind e) {
  return e == ElemKind::F32 ? ValueKind::F32 : ValueKind::I32;
}
inline int portsOf(MemSpace s) {
  switch (s) {
    case MemSpace::OnChip1P: return 1;
    case MemSpace::OnChip2PSimple:
    case MemSpace::OnChip2PTrue: return 2;
    case MemSpace::OffChip: return 2;
  }
  return 1;
}

struct MemRefType {
  std::vector<int64_t> shape;
  ElemKind elem = ElemKind::F32;
  AffineMap layout;  // N inputs -> 2N results (partition, physical)
  MemSpace space = MemSpace::OnChip2PTrue;

  uint32_t rank() const { return static_cast<uint32_t>(shape.size()); }
  int64_t elementCount() const {
    int64_t n = 1;
    for (auto e : shape) n *= e;
    return n;
  }
  int64_t bits() const { return elementCount() * 32; }
  static MemRefType get(std::vector<int64_t> shape, ElemKind elem,
                        MemSpace space = MemSpace::OnChip2PTrue);
  std::vector<DimPartition> partitions() const;
  void setPartitions(std::span<const DimPartition> parts);
  int64_t bankCount() const;
  bool operator==(const MemRefType &o) const;
};

// (partition indices, physical indices) of a logical index vector.
std::pair<std::vector<int64_t>, std::vector<int64_t>> partition_indices(
    const MemRefType &t, std::span<const int64_t> logical);

struct LoopDirective {
  bool pipeline = false;
  int64_t targetII = 1;
  bool flatten = false;
};

struct FuncDirective {
  bool dataflow = false;
  bool pipeline = false;
  int64_t targetII = 1;
};

enum class ArithOp : uint8_t { Const, Add, Sub, Mul, Div, Mod, Neg };

struct Statement;
using StmtPtr = std::unique_ptr<Statement>;
using StmtList = std::vector<StmtPtr>;

struct LoopStmt {
  ValueId iv = kNoValue;
  AffineExpr lower, upper;  // dims are ValueIds; iterates [lower, upper) by step
  int64_t step = 1;
  bool affine = false;
  std::optional<LoopDirective> directive;
  StmtList body;
};

struct AffineConstraint {
  AffineExpr expr;       // dims are ValueIds
  bool equality = false; // expr == 0 when set, expr >= 0 otherwise
};

struct IfStmt {
  std::vector<AffineConstraint> conditions;  // conjunction
  bool affine = false;
  StmtList thenBody;
  StmtList elseBody;
};

struct LoadStmt {
  std::string array;
  std::vector<AffineExpr> indices;  // dims are ValueIds
  ValueId result = kNoValue;
  bool affine = false;
};

struct StoreStmt {
  std::string array;
  std::vector<AffineExpr> indices;
  ValueId value = kNoValue;
  bool affine = false;
};

struct ArithStmt {
  ArithOp op = ArithOp::Const;
  ValueId lhs = kNoValue, rhs = kNoValue;
  ValueId result = kNoValue;
  ValueKind type = ValueKind::F32;
  float f32Const = 0.0f;   // ArithOp::Const, F32
  int64_t intConst = 0;    // ArithOp::Const, I32/Index
};

struct CallStmt {
  std::string callee;
  std::vector<std::string> arrays;   // caller-side array names, positional
  std::vector<ValueId> scalars;      // caller-side values, positional
};

struct CopyStmt {
  std::string src, dst;  // same shape/elem
};

struct Statement {
  std::variant<LoopStmt, IfStmt, LoadStmt, StoreStmt, ArithStmt, CallStmt,
               CopyStmt>
      node;

  template <typename T> T *as() { return std::get_if<T>(&node); }
  template <typename T> const T *as() const { return std::get_if<T>(&node); }
  template <typename T> bool is() const { return as<T>() != nullptr; }
};

StmtPtr makeStmt(LoopStmt s);
StmtPtr makeStmt(IfStmt s);
StmtPtr makeStmt(LoadStmt s);
StmtPtr makeStmt(StoreStmt s);
StmtPtr makeStmt(ArithStmt s);
StmtPtr makeStmt(CallStmt s);
StmtPtr makeStmt(CopyStmt s);
StmtPtr cloneStmt(const Statement &s);
StmtList cloneBody(const StmtList &body);

struct ScalarParam {
  std::string name;
  ValueId value = kNoValue;
  ValueKind kind = ValueKind::F32;
};

struct ArrayParam {
  std::string name;
  MemRefType type;
  IfaceKind iface = IfaceKind::Bram;
};

struct LocalArray {
  std::string name;
  MemRefType type;
};

struct Function {
  std::string name;
  std::vector<ScalarParam> scalars;
  std::vector<ArrayParam> arrays;
  std::vector<LocalArray> locals;
  StmtList body;
  FuncDirective directive;
  ElemKind dataKind = ElemKind::F32;
  std::vector<ValueKind> valueKinds;           // indexed by ValueId
  std::vector<std::string> valueNames;         // optional, for printing

  ValueId newValue(ValueKind k, std::string name = "");
  uint32_t numValues() const { return static_cast<uint32_t>(valueKinds.size()); }
  const MemRefType *arrayType(const std::string &n) const;
  MemRefType *arrayType(const std::string &n);
  bool isLocal(const std::string &n) const;
  Function clone() const;
};

struct Program {
  std::vector<Function> functions;
  std::string top;

  Function *find(const std::string &name);
  const Function *find(const std::string &name) const;
  Function &topFunction();
  const Function &topFunction() const;
  Program clone() const;
};

// Pre-order walk over a statement tree. The callback gets each statement and
// its path (indices into nested bodies); returning false stops descent into
// that statement's regions.
using StmtVisitor = std::function<bool(Statement &, const std::vector<int> &)>;
void walkStmts(StmtList &body, const StmtVisitor &fn);
using ConstStmtVisitor =
    std::function<bool(const Statement &, const std::vector<int> &)>;
void walkStmts(const StmtList &body, const ConstStmtVisitor &fn);

std::string pathToString(const std::vector<int> &path);

// A band is a chain of nested loops; loops[k+1] is the unique loop statement
// directly inside loops[k] (other statements may sit in between).
struct Band {
  std::vector<LoopStmt *> loops;
  LoopStmt *outer() const { return loops.front(); }
  LoopStmt *inner() const { return loops.back(); }
  size_t depth() const { return loops.size(); }
};

// Bands rooted at each top-level loop of the function body, textual order.
std::vector<Band> collectBands(Function &f);
Band bandFrom(LoopStmt *root);
// True when only the innermost loop body contains non-loop statements.
bool isPerfect(const Band &band);

// Rewrites every dim leaf through the map (identity when the map returns an
// invalid expr).
AffineExpr rewriteExpr(const AffineExpr &e,
                       const std::function<AffineExpr(ValueId)> &map);

// Deep-clones a statement list giving every value defined inside a fresh id
// in `dst`; `subst` maps outside values into the clone (ValueId -> expr for
// index uses). Values not in `subst` keep their ids. Value kinds are taken
// from `src`. Entries for inner definitions are appended to `subst`.
StmtList cloneRemap(Function &dst, const Function &src, const StmtList &body,
                    std::map<ValueId, AffineExpr> &subst);

// Constant trip count of a loop when both bounds are constants.
std::optional<int64_t> constantTripCount(const LoopStmt &l);

}  // namespace hlsopt

#endif
