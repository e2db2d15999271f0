#include "hlsopt/interp.hpp"

namespace hlsopt {

Buffer Buffer::make(std::vector<int64_t> shape, ElemKind kind,
                    bool initialized) {
  Buffer b;
  b.kind = kind;
  b.shape = std::move(shape);
  int64_t n = 1;
  for (auto e : b.shape) n *= e;
  if (kind == ElemKind::F32) b.f.assign(n, 0.0f);
  else b.i.assign(n, 0);
  b.init.assign(n, initialized ? 1 : 0);
  return b;
}

bool Buffer::operator==(const Buffer &o) const {
  return kind == o.kind && shape == o.shape && f == o.f && i == o.i;
}

namespace {

struct Frame {
  const Function *fn;
  std::vector<int64_t> ienv;   // index and i32 values, by ValueId
  std::vector<float> fenv;     // f32 values, by ValueId
  std::map<std::string, Buffer *> buffers;  // array name -> storage
  std::vector<Buffer> localStorage;
};

struct Interp {
  const Program *prog;
  InterpStats stats;
  std::string pathPrefix;

  [[noreturn]] void trap(const Frame &fr, const std::vector<int> &path,
                         const std::string &msg) {
    throw InterpError(fr.fn->name + pathToString(path), msg);
  }

  int64_t evalExpr(Frame &fr, const AffineExpr &e) {
    return e.evaluate(fr.ienv);
  }

  int64_t flatIndex(Frame &fr, const Buffer &buf,
                    const std::vector<AffineExpr> &indices,
                    const std::vector<int> &path, const std::string &array) {
    int64_t flat = 0;
    for (size_t d = 0; d < indices.size(); ++d) {
      int64_t v = evalExpr(fr, indices[d]);
      if (v < 0 || v >= buf.shape[d])
        trap(fr, path,
             "index " + std::to_string(v) + " out of bounds for dim " +
                 std::to_string(d) + " of '" + array + "' (extent " +
                 std::to_string(buf.shape[d]) + ")");
      flat = flat * buf.shape[d] + v;
    }
    return flat;
  }

  void run(Frame &fr, const StmtList &body, std::vector<int> &path) {
    for (int i = 0; i < static_cast<int>(body.size()); ++i) {
      path.push_back(i);
      exec(fr, *body[i], path);
      path.pop_back();
    }
  }

  void exec(Frame &fr, const Statement &s, std::vector<int> &path) {
    if (auto *l = s.as<LoopStmt>()) {
      int64_t lo = evalExpr(fr, l->lower);
      int64_t up = evalExpr(fr, l->upper);
      for (int64_t v = lo; v < up; v += l->step) {
        fr.ienv[l->iv] = v;
        ++stats.loopIterations;
        run(fr, l->body, path);
      }
      return;
    }
    if (auto *g = s.as<IfStmt>()) {
      bool taken = true;
      for (auto &c : g->conditions) {
        int64_t v = evalExpr(fr, c.expr);
        if (c.equality ? (v != 0) : (v < 0)) {
          taken = false;
          break;
        }
      }
      run(fr, taken ? g->thenBody : g->elseBody, path);
      return;
    }
    if (auto *l = s.as<LoadStmt>()) {
      auto it = fr.buffers.find(l->array);
      if (it == fr.buffers.end()) trap(fr, path, "unknown array '" + l->array + "'");
      Buffer &buf = *it->second;
      int64_t flat = flatIndex(fr, buf, l->indices, path, l->array);
      if (!buf.init[flat])
        trap(fr, path, "uninitialized read from '" + l->array + "'");
      if (buf.kind == ElemKind::F32) fr.fenv[l->result] = buf.f[flat];
      else fr.ienv[l->result] = buf.i[flat];
      ++stats.loads;
      return;
    }
    if (auto *st = s.as<StoreStmt>()) {
      auto it = fr.buffers.find(st->array);
      if (it == fr.buffers.end()) trap(fr, path, "unknown array '" + st->array + "'");
      Buffer &buf = *it->second;
      int64_t flat = flatIndex(fr, buf, st->indices, path, st->array);
      if (buf.kind == ElemKind::F32) buf.f[flat] = fr.fenv[st->value];
      else buf.i[flat] = static_cast<int32_t>(fr.ienv[st->value]);
      buf.init[flat] = 1;
      ++stats.stores;
      return;
    }
    if (auto *a = s.as<ArithStmt>()) {
      ++stats.arith;
      if (a->type == ValueKind::F32) {
        float x = a->op == ArithOp::Const ? 0.0f : fr.fenv[a->lhs];
        float y = (a->op == ArithOp::Const || a->op == ArithOp::Neg)
                      ? 0.0f
                      : fr.fenv[a->rhs];
        float r = 0.0f;
        switch (a->op) {
          case ArithOp::Const: r = a->f32Const; break;
          case ArithOp::Add: r = x + y; break;
          case ArithOp::Sub: r = x - y; break;
          case ArithOp::Mul: r = x * y; break;
          case ArithOp::Div:
            if (y == 0.0f) trap(fr, path, "division by zero");
            r = x / y;
            break;
          case ArithOp::Mod: trap(fr, path, "mod on f32");
          case ArithOp::Neg: r = -x; break;
        }
        fr.fenv[a->result] = r;
      } else {
        int64_t x = a->op == ArithOp::Const ? 0 : fr.ienv[a->lhs];
        int64_t y = (a->op == ArithOp::Const || a->op == ArithOp::Neg)
                        ? 0
                        : fr.ienv[a->rhs];
        int64_t r = 0;
        switch (a->op) {
          case ArithOp::Const: r = a->intConst; break;
          case ArithOp::Add: r = x + y; break;
          case ArithOp::Sub: r = x - y; break;
          case ArithOp::Mul: r = x * y; break;
          case ArithOp::Div:
            if (y == 0) trap(fr, path, "division by zero");
            r = x / y;  // C truncating division
            break;
          case ArithOp::Mod:
            if (y == 0) trap(fr, path, "mod by zero");
            r = x % y;
            break;
          case ArithOp::Neg: r = -x; break;
        }
        // i32 values wrap; index values keep full width
        if (a->type == ValueKind::I32)
          r = static_cast<int32_t>(static_cast<uint32_t>(r));
        fr.ienv[a->result] = r;
      }
      return;
    }
    if (auto *c = s.as<CallStmt>()) {
      if (!prog) trap(fr, path, "call without program context");
      const Function *callee = prog->find(c->callee);
      if (!callee) trap(fr, path, "unknown callee '" + c->callee + "'");
      Frame sub;
      sub.fn = callee;
      sub.ienv.assign(callee->valueKinds.size(), 0);
      sub.fenv.assign(callee->valueKinds.size(), 0.0f);
      for (size_t i = 0; i < callee->scalars.size(); ++i) {
        auto &sp = callee->scalars[i];
        ValueId src = c->scalars[i];
        if (sp.kind == ValueKind::F32) sub.fenv[sp.value] = fr.fenv[src];
        else sub.ienv[sp.value] = fr.ienv[src];
      }
      for (size_t i = 0; i < callee->arrays.size(); ++i) {
        auto it = fr.buffers.find(c->arrays[i]);
        if (it == fr.buffers.end())
          trap(fr, path, "unknown array argument '" + c->arrays[i] + "'");
        sub.buffers[callee->arrays[i].name] = it->second;
      }
      allocLocals(sub);
      std::vector<int> subPath;
      run(sub, callee->body, subPath);
      return;
    }
    if (auto *c = s.as<CopyStmt>()) {
      auto a = fr.buffers.find(c->src);
      auto b = fr.buffers.find(c->dst);
      if (a == fr.buffers.end()) trap(fr, path, "unknown array '" + c->src + "'");
      if (b == fr.buffers.end()) trap(fr, path, "unknown array '" + c->dst + "'");
      b->second->f = a->second->f;
      b->second->i = a->second->i;
      b->second->init = a->second->init;
      return;
    }
  }

  void allocLocals(Frame &fr) {
    fr.localStorage.reserve(fr.fn->locals.size());
    for (auto &l : fr.fn->locals) {
      fr.localStorage.push_back(Buffer::make(l.type.shape, l.type.elem));
      fr.buffers[l.name] = &fr.localStorage.back();
    }
  }
};

Tape executeImpl(const Program *prog, const Function &f, const Tape &inputs,
                 InterpStats *stats) {
  Tape tape = inputs;
  Interp interp;
  interp.prog = prog;
  Frame fr;
  fr.fn = &f;
  fr.ienv.assign(f.valueKinds.size(), 0);
  fr.fenv.assign(f.valueKinds.size(), 0.0f);
  for (auto &sp : f.scalars) {
    if (sp.kind == ValueKind::F32) {
      auto it = tape.fscalars.find(sp.name);
      if (it == tape.fscalars.end())
        throw InterpError(f.name, "missing scalar input '" + sp.name + "'");
      fr.fenv[sp.value] = static_cast<float>(it->second);
    } else {
      auto it = tape.iscalars.find(sp.name);
      if (it == tape.iscalars.end())
        throw InterpError(f.name, "missing scalar input '" + sp.name + "'");
      fr.ienv[sp.value] = it->second;
    }
  }
  for (auto &ap : f.arrays) {
    auto it = tape.arrays.find(ap.name);
    if (it == tape.arrays.end())
      throw InterpError(f.name, "missing array input '" + ap.name + "'");
    if (it->second.shape != ap.type.shape || it->second.kind != ap.type.elem)
      throw InterpError(f.name, "array input '" + ap.name + "' has wrong shape or kind");
    fr.buffers[ap.name] = &it->second;
  }
  interp.allocLocals(fr);
  std::vector<int> path;
  interp.run(fr, f.body, path);
  if (stats) *stats = interp.stats;
  return tape;
}

}  // namespace

Tape execute(const Program &p, const Tape &inputs, const std::string &func,
             InterpStats *stats) {
  const Function *f = func.empty() ? &p.topFunction() : p.find(func);
  if (!f) throw InterpError("program", "no function named '" + func + "'");
  return executeImpl(&p, *f, inputs, stats);
}

Tape execute(const Function &f, const Tape &inputs, InterpStats *stats) {
  return executeImpl(nullptr, f, inputs, stats);
}

}  // namespace hlsopt
