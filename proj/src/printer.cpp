#include "hlsopt/printer.hpp"

#include <sstream>

namespace hlsopt {

namespace {

struct Printer {
  const Function &f;
  std::ostringstream out;
  std::vector<std::string> names;  // by ValueId
  int nextTemp = 0;
  int indent = 0;

  explicit Printer(const Function &fn) : f(fn) {
    names.resize(f.valueKinds.size());
  }

  std::string &nameOf(ValueId v) {
    if (names[v].empty()) {
      const std::string &given = v < f.valueNames.size() ? f.valueNames[v] : "";
      if (!given.empty()) {
        names[v] = "%" + given;
      } else {
        names[v] = "%t" + std::to_string(nextTemp++);
      }
    }
    return names[v];
  }

  std::string expr(const AffineExpr &e) {
    std::vector<std::string> dimNames(names.size());
    std::vector<uint32_t> dims;
    e.collectDims(dims);
    for (auto d : dims) dimNames[d] = nameOf(d);
    return e.str(dimNames);
  }

  void line(const std::string &s) {
    for (int i = 0; i < indent; ++i) out << "  ";
    out << s << "\n";
  }

  static std::string kindSuffix(ValueKind k) {
    switch (k) {
      case ValueKind::F32: return "f32";
      case ValueKind::I32: return "i32";
      case ValueKind::Index: return "index";
    }
    return "?";
  }

  std::string memref(const MemRefType &t) {
    std::string s = "memref<";
    for (size_t i = 0; i < t.shape.size(); ++i)
      s += std::to_string(t.shape[i]) + "x";
    s += t.elem == ElemKind::F32 ? "f32" : "i32";
    auto parts = decode_partition_layout(t.layout, t.shape);
    bool any = false;
    if (parts)
      for (auto &p : *parts)
        if (p.kind != PartitionKind::None) any = true;
    if (!parts) {
      s += ", layout=" + t.layout.str();
    } else if (any) {
      s += ", [";
      for (size_t i = 0; i < parts->size(); ++i) {
        if (i) s += ", ";
        auto &p = (*parts)[i];
        if (p.kind == PartitionKind::None) s += "none";
        else if (p.kind == PartitionKind::Cyclic)
          s += "cyclic " + std::to_string(p.factor);
        else
          s += "block " + std::to_string(p.factor);
      }
      s += "]";
    }
    switch (t.space) {
      case MemSpace::OnChip1P: s += ", 1p"; break;
      case MemSpace::OnChip2PSimple: s += ", 2ps"; break;
      case MemSpace::OnChip2PTrue: break;  // default space
      case MemSpace::OffChip: s += ", off"; break;
    }
    return s + ">";
  }

  void body(const StmtList &stmts) {
    ++indent;
    for (auto &s : stmts) stmt(*s);
    --indent;
  }

  void stmt(const Statement &s) {
    if (auto *l = s.as<LoopStmt>()) {
      std::string d;
      if (l->directive) {
        d = " {";
        bool first = true;
        auto item = [&](const std::string &x) {
          if (!first) d += ", ";
          d += x;
          first = false;
        };
        if (l->directive->pipeline)
          item("pipeline ii=" + std::to_string(l->directive->targetII));
        if (l->directive->flatten) item("flatten");
        d += "}";
      }
      line(std::string(l->affine ? "affine.for " : "for ") + nameOf(l->iv) +
           " = " + expr(l->lower) + " to " + expr(l->upper) + " step " +
           std::to_string(l->step) + d + " {");
      body(l->body);
      line("}");
      return;
    }
    if (auto *g = s.as<IfStmt>()) {
      std::string c;
      for (size_t i = 0; i < g->conditions.size(); ++i) {
        if (i) c += ", ";
        c += expr(g->conditions[i].expr);
        c += g->conditions[i].equality ? " == 0" : " >= 0";
      }
      line(std::string(g->affine ? "affine.if" : "if") + " (" + c + ") {");
      body(g->thenBody);
      if (!g->elseBody.empty()) {
        line("} else {");
        body(g->elseBody);
      }
      line("}");
      return;
    }
    if (auto *l = s.as<LoadStmt>()) {
      std::string idx;
      for (size_t i = 0; i < l->indices.size(); ++i) {
        if (i) idx += ", ";
        idx += expr(l->indices[i]);
      }
      line(nameOf(l->result) + " = load %" + l->array + "[" + idx + "]");
      return;
    }
    if (auto *st = s.as<StoreStmt>()) {
      std::string idx;
      for (size_t i = 0; i < st->indices.size(); ++i) {
        if (i) idx += ", ";
        idx += expr(st->indices[i]);
      }
      line("store " + nameOf(st->value) + ", %" + st->array + "[" + idx + "]");
      return;
    }
    if (auto *a = s.as<ArithStmt>()) {
      std::string rhs;
      bool isFloat = a->type == ValueKind::F32;
      switch (a->op) {
        case ArithOp::Const: {
          std::ostringstream c;
          if (isFloat) c << a->f32Const;
          else c << a->intConst;
          rhs = "const " + c.str();
          break;
        }
        case ArithOp::Add: rhs = (isFloat ? "addf " : "addi ") + nameOf(a->lhs) + ", " + nameOf(a->rhs); break;
        case ArithOp::Sub: rhs = (isFloat ? "subf " : "subi ") + nameOf(a->lhs) + ", " + nameOf(a->rhs); break;
        case ArithOp::Mul: rhs = (isFloat ? "mulf " : "muli ") + nameOf(a->lhs) + ", " + nameOf(a->rhs); break;
        case ArithOp::Div: rhs = (isFloat ? "divf " : "divi ") + nameOf(a->lhs) + ", " + nameOf(a->rhs); break;
        case ArithOp::Mod: rhs = "remi " + nameOf(a->lhs) + ", " + nameOf(a->rhs); break;
        case ArithOp::Neg: rhs = (isFloat ? "negf " : "negi ") + nameOf(a->lhs); break;
      }
      line(nameOf(a->result) + " = " + rhs + " : " + kindSuffix(a->type));
      return;
    }
    if (auto *c = s.as<CallStmt>()) {
      std::string args;
      for (size_t i = 0; i < c->arrays.size(); ++i) {
        if (i) args += ", ";
        args += "%" + c->arrays[i];
      }
      for (size_t i = 0; i < c->scalars.size(); ++i) {
        if (!args.empty()) args += ", ";
        args += nameOf(c->scalars[i]);
      }
      line("call @" + c->callee + "(" + args + ")");
      return;
    }
    if (auto *c = s.as<CopyStmt>()) {
      line("copy %" + c->src + " -> %" + c->dst);
      return;
    }
  }

  std::string run() {
    std::string d;
    if (f.directive.dataflow) d = " {dataflow}";
    else if (f.directive.pipeline)
      d = " {pipeline ii=" + std::to_string(f.directive.targetII) + "}";
    std::string sig;
    for (auto &sp : f.scalars) {
      if (!sig.empty()) sig += ", ";
      sig += nameOf(sp.value) + ": " + kindSuffix(sp.kind);
    }
    for (auto &ap : f.arrays) {
      if (!sig.empty()) sig += ", ";
      sig += "%" + ap.name + ": " + memref(ap.type) +
             (ap.iface == IfaceKind::Axi ? " axi" : " bram");
    }
    out << "func @" << f.name << "(" << sig << ")" << d << " {\n";
    indent = 1;
    for (auto &l : f.locals)
      line("%" + l.name + " = alloc " + memref(l.type));
    for (auto &s : f.body) stmt(*s);
    out << "}\n";
    return out.str();
  }
};

}  // namespace

std::string printFunction(const Function &f) { return Printer(f).run(); }

std::string printProgram(const Program &p) {
  std::string s;
  for (size_t i = 0; i < p.functions.size(); ++i) {
    if (i) s += "\n";
    s += printFunction(p.functions[i]);
  }
  return s;
}

}  // namespace hlsopt
