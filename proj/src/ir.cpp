#include "hlsopt/ir.hpp"

#include <stdexcept>

namespace hlsopt {

MemRefType MemRefType::get(std::vector<int64_t> shape, ElemKind elem,
                           MemSpace space) {
  MemRefType t;
  t.elem = elem;
  t.space = space;
  uint32_t n = static_cast<uint32_t>(shape.size());
  t.shape = std::move(shape);
  std::vector<DimPartition> none(n);
  t.layout = make_partition_layout(t.shape, none);
  return t;
}

std::vector<DimPartition> MemRefType::partitions() const {
  auto p = decode_partition_layout(layout, shape);
  if (!p) throw std::runtime_error("memref has unsupported layout map");
  return *p;
}

void MemRefType::setPartitions(std::span<const DimPartition> parts) {
  layout = make_partition_layout(shape, parts);
}

int64_t MemRefType::bankCount() const {
  int64_t n = 1;
  for (auto &p : partitions()) n *= p.factor;
  return n;
}

bool MemRefType::operator==(const MemRefType &o) const {
  return shape == o.shape && elem == o.elem && layout == o.layout &&
         space == o.space;
}

std::pair<std::vector<int64_t>, std::vector<int64_t>> partition_indices(
    const MemRefType &t, std::span<const int64_t> logical) {
  uint32_t n = t.rank();
  if (logical.size() != n)
    throw std::invalid_argument("partition_indices: rank mismatch");
  for (uint32_t d = 0; d < n; ++d)
    if (logical[d] < 0 || logical[d] >= t.shape[d])
      throw std::out_of_range("partition_indices: index out of bounds in dim " +
                              std::to_string(d));
  auto all = t.layout.evaluate(logical);
  std::vector<int64_t> part(all.begin(), all.begin() + n);
  std::vector<int64_t> phys(all.begin() + n, all.end());
  return {part, phys};
}

StmtPtr makeStmt(LoopStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(IfStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(LoadStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(StoreStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(ArithStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(CallStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }
StmtPtr makeStmt(CopyStmt s) { return std::make_unique<Statement>(Statement{std::move(s)}); }

StmtPtr cloneStmt(const Statement &s) {
  if (auto *l = s.as<LoopStmt>()) {
    LoopStmt c;
    c.iv = l->iv;
    c.lower = l->lower;
    c.upper = l->upper;
    c.step = l->step;
    c.affine = l->affine;
    c.directive = l->directive;
    c.body = cloneBody(l->body);
    return makeStmt(std::move(c));
  }
  if (auto *i = s.as<IfStmt>()) {
    IfStmt c;
    c.conditions = i->conditions;
    c.affine = i->affine;
    c.thenBody = cloneBody(i->thenBody);
    c.elseBody = cloneBody(i->elseBody);
    return makeStmt(std::move(c));
  }
  if (auto *l = s.as<LoadStmt>()) return makeStmt(LoadStmt(*l));
  if (auto *st = s.as<StoreStmt>()) return makeStmt(StoreStmt(*st));
  if (auto *a = s.as<ArithStmt>()) return makeStmt(ArithStmt(*a));
  if (auto *c = s.as<CallStmt>()) return makeStmt(CallStmt(*c));
  if (auto *c = s.as<CopyStmt>()) return makeStmt(CopyStmt(*c));
  throw std::logic_error("cloneStmt: unhandled statement");
}

StmtList cloneBody(const StmtList &body) {
  StmtList out;
  out.reserve(body.size());
  for (auto &s : body) out.push_back(cloneStmt(*s));
  return out;
}

ValueId Function::newValue(ValueKind k, std::string name) {
  valueKinds.push_back(k);
  valueNames.push_back(std::move(name));
  return static_cast<ValueId>(valueKinds.size() - 1);
}

const MemRefType *Function::arrayType(const std::string &n) const {
  for (auto &a : arrays)
    if (a.name == n) return &a.type;
  for (auto &l : locals)
    if (l.name == n) return &l.type;
  return nullptr;
}

MemRefType *Function::arrayType(const std::string &n) {
  for (auto &a : arrays)
    if (a.name == n) return &a.type;
  for (auto &l : locals)
    if (l.name == n) return &l.type;
  return nullptr;
}

bool Function::isLocal(const std::string &n) const {
  for (auto &l : locals)
    if (l.name == n) return true;
  return false;
}

Function Function::clone() const {
  Function f;
  f.name = name;
  f.scalars = scalars;
  f.arrays = arrays;
  f.locals = locals;
  f.body = cloneBody(body);
  f.directive = directive;
  f.dataKind = dataKind;
  f.valueKinds = valueKinds;
  f.valueNames = valueNames;
  return f;
}

Function *Program::find(const std::string &name) {
  for (auto &f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

const Function *Program::find(const std::string &name) const {
  for (auto &f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

Function &Program::topFunction() {
  auto *f = find(top);
  if (!f) throw std::runtime_error("program has no top function '" + top + "'");
  return *f;
}

const Function &Program::topFunction() const {
  auto *f = find(top);
  if (!f) throw std::runtime_error("program has no top function '" + top + "'");
  return *f;
}

Program Program::clone() const {
  Program p;
  p.top = top;
  p.functions.reserve(functions.size());
  for (auto &f : functions) p.functions.push_back(f.clone());
  return p;
}

namespace {

template <typename List, typename Fn>
void walkImpl(List &body, std::vector<int> &path, const Fn &fn) {
  for (int i = 0; i < static_cast<int>(body.size()); ++i) {
    path.push_back(i);
    auto &stmt = *body[i];
    if (fn(stmt, path)) {
      if (auto *l = stmt.template as<LoopStmt>()) {
        walkImpl(l->body, path, fn);
      } else if (auto *g = stmt.template as<IfStmt>()) {
        walkImpl(g->thenBody, path, fn);
        walkImpl(g->elseBody, path, fn);
      }
    }
    path.pop_back();
  }
}

}  // namespace

void walkStmts(StmtList &body, const StmtVisitor &fn) {
  std::vector<int> path;
  walkImpl(body, path, fn);
}

void walkStmts(const StmtList &body, const ConstStmtVisitor &fn) {
  std::vector<int> path;
  walkImpl(body, path, fn);
}

std::string pathToString(const std::vector<int> &path) {
  std::string s;
  for (auto i : path) {
    if (!s.empty()) s += "/";
    s += std::to_string(i);
  }
  return "[" + s + "]";
}

Band bandFrom(LoopStmt *root) {
  Band b;
  LoopStmt *cur = root;
  while (cur) {
    b.loops.push_back(cur);
    LoopStmt *next = nullptr;
    int loopCount = 0;
    for (auto &s : cur->body) {
      if (auto *l = s->as<LoopStmt>()) {
        ++loopCount;
        next = l;
      }
    }
    cur = loopCount == 1 ? next : nullptr;
  }
  return b;
}

std::vector<Band> collectBands(Function &f) {
  std::vector<Band> bands;
  for (auto &s : f.body)
    if (auto *l = s->as<LoopStmt>()) bands.push_back(bandFrom(l));
  return bands;
}

bool isPerfect(const Band &band) {
  for (size_t k = 0; k + 1 < band.loops.size(); ++k) {
    if (band.loops[k]->body.size() != 1) return false;
    if (!band.loops[k]->body[0]->is<LoopStmt>()) return false;
  }
  return true;
}

AffineExpr rewriteExpr(const AffineExpr &e,
                       const std::function<AffineExpr(ValueId)> &map) {
  switch (e.kind()) {
    case ExprKind::Constant: return e;
    case ExprKind::Dim: {
      AffineExpr r = map(e.dimIndex());
      return r.valid() ? r : e;
    }
    case ExprKind::Add:
      return AffineExpr::add(rewriteExpr(e.lhs(), map),
                             rewriteExpr(e.rhs(), map));
    case ExprKind::MulConst:
      return AffineExpr::mul(rewriteExpr(e.lhs(), map), e.rhsConstant());
    case ExprKind::FloorDiv:
      return AffineExpr::floorDiv(rewriteExpr(e.lhs(), map), e.rhsConstant());
    case ExprKind::Mod:
      return AffineExpr::mod(rewriteExpr(e.lhs(), map), e.rhsConstant());
  }
  return e;
}

namespace {

struct Remapper {
  Function &dst;
  const Function &src;
  std::map<ValueId, AffineExpr> &subst;

  AffineExpr expr(const AffineExpr &e) {
    return rewriteExpr(e, [&](ValueId v) {
      auto it = subst.find(v);
      return it != subst.end() ? it->second : AffineExpr();
    });
  }

  ValueId use(ValueId v) {
    auto it = subst.find(v);
    if (it == subst.end()) return v;
    const AffineExpr &e = it->second;
    if (e.kind() != ExprKind::Dim)
      throw std::logic_error("scalar use remapped to a non-value expression");
    return e.dimIndex();
  }

  ValueId def(ValueId v) {
    std::string name = v < src.valueNames.size() ? src.valueNames[v] : "";
    ValueId nv = dst.newValue(src.valueKinds[v], name);
    subst[v] = AffineExpr::dim(nv);
    return nv;
  }

  StmtList run(const StmtList &body) {
    StmtList out;
    out.reserve(body.size());
    for (auto &sp : body) {
      const Statement &s = *sp;
      if (auto *l = s.as<LoopStmt>()) {
        LoopStmt c;
        c.lower = expr(l->lower);
        c.upper = expr(l->upper);
        c.step = l->step;
        c.affine = l->affine;
        c.directive = l->directive;
        c.iv = def(l->iv);
        c.body = run(l->body);
        out.push_back(makeStmt(std::move(c)));
      } else if (auto *g = s.as<IfStmt>()) {
        IfStmt c;
        c.affine = g->affine;
        for (auto &cond : g->conditions)
          c.conditions.push_back({expr(cond.expr), cond.equality});
        c.thenBody = run(g->thenBody);
        c.elseBody = run(g->elseBody);
        out.push_back(makeStmt(std::move(c)));
      } else if (auto *l = s.as<LoadStmt>()) {
        LoadStmt c;
        c.array = l->array;
        c.affine = l->affine;
        for (auto &e : l->indices) c.indices.push_back(expr(e));
        c.result = def(l->result);
        out.push_back(makeStmt(std::move(c)));
      } else if (auto *st = s.as<StoreStmt>()) {
        StoreStmt c;
        c.array = st->array;
        c.affine = st->affine;
        for (auto &e : st->indices) c.indices.push_back(expr(e));
        c.value = use(st->value);
        out.push_back(makeStmt(std::move(c)));
      } else if (auto *a = s.as<ArithStmt>()) {
        ArithStmt c = *a;
        if (a->op != ArithOp::Const) {
          c.lhs = use(a->lhs);
          if (a->op != ArithOp::Neg) c.rhs = use(a->rhs);
        }
        c.result = def(a->result);
        out.push_back(makeStmt(std::move(c)));
      } else if (auto *cl = s.as<CallStmt>()) {
        CallStmt c = *cl;
        for (auto &v : c.scalars) v = use(v);
        out.push_back(makeStmt(std::move(c)));
      } else {
        out.push_back(cloneStmt(s));
      }
    }
    return out;
  }
};

}  // namespace

StmtList cloneRemap(Function &dst, const Function &src, const StmtList &body,
                    std::map<ValueId, AffineExpr> &subst) {
  Remapper r{dst, src, subst};
  return r.run(body);
}

std::optional<int64_t> constantTripCount(const LoopStmt &l) {
  if (!l.lower.isConstant() || !l.upper.isConstant()) return std::nullopt;
  int64_t lo = l.lower.constantValue(), up = l.upper.constantValue();
  if (up <= lo) return 0;
  return ceil_div(up - lo, l.step);
}

}  // namespace hlsopt
