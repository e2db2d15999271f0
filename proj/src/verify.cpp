#include "hlsopt/verify.hpp"

#include <algorithm>

namespace hlsopt {

namespace {

struct Verifier {
  const Function &f;
  const Program *prog;
  std::vector<Diagnostic> diags;
  std::vector<uint8_t> defined;   // live defs in current scope
  std::vector<uint8_t> everDefined;

  Verifier(const Function &fn, const Program *p) : f(fn), prog(p) {
    defined.assign(f.valueKinds.size(), 0);
    everDefined = defined;
  }

  void emit(const std::vector<int> &path, const std::string &rule,
            const std::string &msg) {
    diags.push_back({f.name + pathToString(path), rule, msg});
  }

  bool validValue(ValueId v) { return v < f.valueKinds.size(); }

  void define(ValueId v, const std::vector<int> &path) {
    if (!validValue(v)) {
      emit(path, "ssa-unknown-value", "definition of out-of-range value id");
      return;
    }
    if (everDefined[v])
      emit(path, "ssa-redefinition",
           "value defined more than once: id " + std::to_string(v));
    defined[v] = 1;
    everDefined[v] = 1;
  }

  void use(ValueId v, const std::vector<int> &path, const char *what) {
    if (!validValue(v)) {
      emit(path, "ssa-unknown-value",
           std::string(what) + " references out-of-range value id");
      return;
    }
    if (!defined[v])
      emit(path, "ssa-use-before-def",
           std::string(what) + " uses value id " + std::to_string(v) +
               " before its definition");
  }

  void useExpr(const AffineExpr &e, const std::vector<int> &path,
               const char *what) {
    if (!e.valid()) {
      emit(path, "expr-missing", std::string(what) + " has no expression");
      return;
    }
    std::vector<uint32_t> dims;
    e.collectDims(dims);
    for (auto d : dims) {
      use(d, path, what);
      if (validValue(d) && f.valueKinds[d] == ValueKind::F32)
        emit(path, "index-kind",
             std::string(what) + " references a f32 value as an index");
    }
    checkDivisors(e, path);
  }

  void checkDivisors(const AffineExpr &e, const std::vector<int> &path) {
    switch (e.kind()) {
      case ExprKind::Constant:
      case ExprKind::Dim: return;
      case ExprKind::Add:
        checkDivisors(e.lhs(), path);
        checkDivisors(e.rhs(), path);
        return;
      case ExprKind::MulConst: checkDivisors(e.lhs(), path); return;
      case ExprKind::FloorDiv:
      case ExprKind::Mod:
        if (e.rhsConstant() <= 0)
          emit(path, "affine-divisor", "floordiv/mod divisor must be positive");
        checkDivisors(e.lhs(), path);
        return;
    }
  }

  void checkAccess(const std::string &array,
                   const std::vector<AffineExpr> &indices,
                   const std::vector<int> &path) {
    const auto *t = f.arrayType(array);
    if (!t) {
      emit(path, "unknown-array", "no array named '" + array + "' in scope");
      return;
    }
    if (indices.size() != t->rank())
      emit(path, "access-arity",
           "access to '" + array + "' has " + std::to_string(indices.size()) +
               " indices, array rank is " + std::to_string(t->rank()));
    for (auto &e : indices) useExpr(e, path, "access index");
  }

  bool containsLoop(const StmtList &body) {
    bool found = false;
    walkStmts(body, [&](const Statement &s, const std::vector<int> &) {
      if (s.is<LoopStmt>()) found = true;
      return !found;
    });
    return found;
  }

  // flatten is only legal on loops that perfectly wrap a pipelined loop (or
  // another flattened loop leading to one).
  void checkFlatten(const LoopStmt &l, const std::vector<int> &path) {
    if (l.body.size() != 1 || !l.body[0]->is<LoopStmt>()) {
      emit(path, "directive-flatten-shape",
           "flatten on a loop that does not perfectly wrap a nested loop");
      return;
    }
    const auto *inner = l.body[0]->as<LoopStmt>();
    if (!inner->directive ||
        (!inner->directive->pipeline && !inner->directive->flatten))
      emit(path, "directive-flatten-shape",
           "flatten must wrap a pipelined or flattened loop");
  }

  void checkMemref(const MemRefType &t, const std::vector<int> &path,
                   const std::string &name) {
    for (auto e : t.shape)
      if (e <= 0)
        emit(path, "memref-extent", "array '" + name + "' has extent " +
                                        std::to_string(e));
    if (t.layout.numInputs != t.rank() ||
        t.layout.results.size() != 2 * t.rank()) {
      emit(path, "layout-arity",
           "array '" + name + "': layout of a rank-" +
               std::to_string(t.rank()) + " array needs " +
               std::to_string(t.rank()) + " inputs and " +
               std::to_string(2 * t.rank()) + " results");
      return;
    }
    if (!decode_partition_layout(t.layout, t.shape))
      emit(path, "layout-fashion",
           "array '" + name + "': layout is not a per-dimension cyclic/block/"
           "identity partition map");
  }

  void stmts(const StmtList &body, std::vector<int> &path) {
    for (int i = 0; i < static_cast<int>(body.size()); ++i) {
      path.push_back(i);
      stmt(*body[i], path);
      path.pop_back();
    }
  }

  void stmt(const Statement &s, std::vector<int> &path) {
    if (auto *l = s.as<LoopStmt>()) {
      useExpr(l->lower, path, "loop lower bound");
      useExpr(l->upper, path, "loop upper bound");
      if (l->step <= 0)
        emit(path, "loop-step-positive",
             "loop step must be a positive constant");
      if (l->directive) {
        if (l->directive->targetII <= 0)
          emit(path, "directive-ii", "target II must be positive");
        if (l->directive->pipeline && containsLoop(l->body))
          emit(path, "directive-pipeline-nested-loop",
               "pipelined loop contains a nested loop");
        if (l->directive->flatten) checkFlatten(*l, path);
      }
      auto saved = defined;
      define(l->iv, path);
      if (validValue(l->iv) && f.valueKinds[l->iv] != ValueKind::Index)
        emit(path, "index-kind", "loop induction variable must be index-typed");
      stmts(l->body, path);
      defined = saved;  // iv and body defs go out of scope
      return;
    }
    if (auto *g = s.as<IfStmt>()) {
      if (g->conditions.empty())
        emit(path, "guard-empty", "guard has no condition");
      for (auto &c : g->conditions) useExpr(c.expr, path, "guard condition");
      auto saved = defined;
      stmts(g->thenBody, path);
      defined = saved;
      stmts(g->elseBody, path);
      defined = saved;
      return;
    }
    if (auto *l = s.as<LoadStmt>()) {
      checkAccess(l->array, l->indices, path);
      if (const auto *t = f.arrayType(l->array); t && validValue(l->result) &&
          f.valueKinds[l->result] != valueKindOf(t->elem))
        emit(path, "type-mismatch", "load result kind differs from element kind");
      define(l->result, path);
      return;
    }
    if (auto *st = s.as<StoreStmt>()) {
      checkAccess(st->array, st->indices, path);
      use(st->value, path, "store");
      if (const auto *t = f.arrayType(st->array); t && validValue(st->value) &&
          f.valueKinds[st->value] != valueKindOf(t->elem))
        emit(path, "type-mismatch", "stored value kind differs from element kind");
      return;
    }
    if (auto *a = s.as<ArithStmt>()) {
      if (a->op != ArithOp::Const) {
        use(a->lhs, path, "arith");
        if (a->op != ArithOp::Neg) use(a->rhs, path, "arith");
      }
      define(a->result, path);
      if (validValue(a->result) && f.valueKinds[a->result] != a->type)
        emit(path, "type-mismatch", "arith result kind differs from op type");
      return;
    }
    if (auto *c = s.as<CallStmt>()) {
      for (auto &v : c->scalars) use(v, path, "call");
      if (!prog) return;
      const auto *callee = prog->find(c->callee);
      if (!callee) {
        emit(path, "call-unknown-callee", "no function named '" + c->callee + "'");
        return;
      }
      if (callee->arrays.size() != c->arrays.size() ||
          callee->scalars.size() != c->scalars.size()) {
        emit(path, "call-arity", "call to '" + c->callee + "' arity mismatch");
        return;
      }
      for (size_t i = 0; i < c->arrays.size(); ++i) {
        const auto *t = f.arrayType(c->arrays[i]);
        if (!t) {
          emit(path, "unknown-array",
               "call argument '" + c->arrays[i] + "' is not an array in scope");
          continue;
        }
        if (t->shape != callee->arrays[i].type.shape ||
            t->elem != callee->arrays[i].type.elem)
          emit(path, "call-arg-type",
               "call argument '" + c->arrays[i] + "' does not match parameter '" +
                   callee->arrays[i].name + "'");
      }
      return;
    }
    if (auto *c = s.as<CopyStmt>()) {
      const auto *a = f.arrayType(c->src);
      const auto *b = f.arrayType(c->dst);
      if (!a) emit(path, "unknown-array", "copy source '" + c->src + "' unknown");
      if (!b) emit(path, "unknown-array", "copy destination '" + c->dst + "' unknown");
      if (a && b && (a->shape != b->shape || a->elem != b->elem))
        emit(path, "copy-shape", "copy between differently shaped arrays");
      return;
    }
  }

  std::vector<Diagnostic> run() {
    std::vector<int> path;
    if (f.directive.dataflow && f.directive.pipeline)
      emit(path, "directive-func-exclusive",
           "dataflow and pipeline are mutually exclusive on a function");
    for (auto &sp : f.scalars) define(sp.value, path);
    for (auto &ap : f.arrays) checkMemref(ap.type, path, ap.name);
    for (auto &l : f.locals) checkMemref(l.type, path, l.name);
    {
      // duplicate array names
      std::vector<std::string> names;
      for (auto &ap : f.arrays) names.push_back(ap.name);
      for (auto &l : f.locals) names.push_back(l.name);
      auto sorted = names;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        emit(path, "duplicate-array", "duplicate array name in function");
    }
    stmts(f.body, path);
    return std::move(diags);
  }
};

}  // namespace

std::vector<Diagnostic> verify(const Function &f, const Program *context) {
  return Verifier(f, context).run();
}

std::vector<Diagnostic> verify(const Program &p) {
  std::vector<Diagnostic> all;
  for (auto &f : p.functions) {
    auto d = Verifier(f, &p).run();
    all.insert(all.end(), d.begin(), d.end());
  }
  return all;
}

}  // namespace hlsopt
