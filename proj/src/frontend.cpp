#include "hlsopt/frontend.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>

namespace hlsopt {

namespace {

enum class Tok {
  End, Ident, IntLit, FloatLit,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Semi, Comma, Star, Plus, Minus, Slash, Percent,
  Assign, PlusAssign, MinusAssign, StarAssign,
  Lt, Le, Gt, Ge, EqEq, NotEq, AndAnd, PlusPlus,
};

struct Token {
  Tok kind;
  std::string text;
  int64_t intValue = 0;
  double floatValue = 0.0;
  int line = 1, col = 1;
};

struct Lexer {
  const std::string &src;
  const std::string &file;
  size_t pos = 0;
  int line = 1, col = 1;

  Lexer(const std::string &s, const std::string &f) : src(s), file(f) {}

  [[noreturn]] void fail(const std::string &msg) {
    throw SourceError(file, line, col, msg);
  }

  char peek(size_t off = 0) const {
    return pos + off < src.size() ? src[pos + off] : '\0';
  }

  void advance() {
    if (peek() == '\n') { ++line; col = 1; }
    else ++col;
    ++pos;
  }

  void skip() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(); continue; }
      if (c == '/' && peek(1) == '/') {
        while (peek() && peek() != '\n') advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        advance(); advance();
        while (peek() && !(peek() == '*' && peek(1) == '/')) advance();
        if (peek()) { advance(); advance(); }
        continue;
      }
      if (c == '#') {  // preprocessor / pragma lines are skipped on re-parse
        while (peek() && peek() != '\n') advance();
        continue;
      }
      break;
    }
  }

  Token next() {
    skip();
    Token t;
    t.line = line;
    t.col = col;
    char c = peek();
    if (!c) { t.kind = Tok::End; return t; }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
        s += peek();
        advance();
      }
      t.kind = Tok::Ident;
      t.text = std::move(s);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::string s;
      bool isFloat = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) { s += peek(); advance(); }
      if (peek() == '.') {
        isFloat = true;
        s += peek(); advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) { s += peek(); advance(); }
      }
      if (peek() == 'e' || peek() == 'E') {
        isFloat = true;
        s += peek(); advance();
        if (peek() == '+' || peek() == '-') { s += peek(); advance(); }
        while (std::isdigit(static_cast<unsigned char>(peek()))) { s += peek(); advance(); }
      }
      if (peek() == 'f' || peek() == 'F') { isFloat = true; advance(); }
      if (isFloat) {
        t.kind = Tok::FloatLit;
        t.floatValue = std::stod(s);
      } else {
        t.kind = Tok::IntLit;
        t.intValue = std::stoll(s);
      }
      return t;
    }
    auto two = [&](char a, char b) { return c == a && peek(1) == b; };
    if (two('+', '=')) { t.kind = Tok::PlusAssign; advance(); advance(); return t; }
    if (two('-', '=')) { t.kind = Tok::MinusAssign; advance(); advance(); return t; }
    if (two('*', '=')) { t.kind = Tok::StarAssign; advance(); advance(); return t; }
    if (two('=', '=')) { t.kind = Tok::EqEq; advance(); advance(); return t; }
    if (two('!', '=')) { t.kind = Tok::NotEq; advance(); advance(); return t; }
    if (two('<', '=')) { t.kind = Tok::Le; advance(); advance(); return t; }
    if (two('>', '=')) { t.kind = Tok::Ge; advance(); advance(); return t; }
    if (two('&', '&')) { t.kind = Tok::AndAnd; advance(); advance(); return t; }
    if (two('+', '+')) { t.kind = Tok::PlusPlus; advance(); advance(); return t; }
    switch (c) {
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case ';': t.kind = Tok::Semi; break;
      case ',': t.kind = Tok::Comma; break;
      case '*': t.kind = Tok::Star; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '/': t.kind = Tok::Slash; break;
      case '%': t.kind = Tok::Percent; break;
      case '<': t.kind = Tok::Lt; break;
      case '>': t.kind = Tok::Gt; break;
      case '=': t.kind = Tok::Assign; break;
      default: fail(std::string("unexpected character '") + c + "'");
    }
    advance();
    return t;
  }
};

// Small expression AST built by the parser before lowering to IR.
struct ExprNode {
  enum Kind { Int, Float, Ident, Deref, ArrayRef, Bin, Neg } kind;
  int64_t intValue = 0;
  double floatValue = 0.0;
  std::string name;
  char op = 0;  // + - * / %
  std::vector<std::unique_ptr<ExprNode>> children;  // Bin: 2, Neg: 1, ArrayRef: indices
  int line = 1, col = 1;
};
using ExprPtr = std::unique_ptr<ExprNode>;

struct Parser {
  Lexer lex;
  Token tok;
  const std::string &file;
  Program program;

  // per-function state
  Function *fn = nullptr;
  std::map<std::string, ValueId> scalarValues;  // params, ivs, temps
  std::set<std::string> arrayNames;
  bool sawReturn = false;

  Parser(const std::string &src, const std::string &f) : lex(src, f), file(f) {
    tok = lex.next();
  }

  [[noreturn]] void fail(const Token &at, const std::string &msg) {
    throw SourceError(file, at.line, at.col, msg);
  }
  [[noreturn]] void fail(const std::string &msg) { fail(tok, msg); }

  void bump() { tok = lex.next(); }

  bool isIdent(const char *s) const {
    return tok.kind == Tok::Ident && tok.text == s;
  }

  void expect(Tok k, const char *what) {
    if (tok.kind != k) fail(std::string("expected ") + what);
    bump();
  }

  std::string expectIdent(const char *what) {
    if (tok.kind != Tok::Ident) fail(std::string("expected ") + what);
    std::string s = tok.text;
    bump();
    return s;
  }

  std::optional<ElemKind> typeKeyword() {
    if (isIdent("float")) return ElemKind::F32;
    if (isIdent("int")) return ElemKind::I32;
    return std::nullopt;
  }

  Program run() {
    while (tok.kind != Tok::End) parseFunction();
    if (program.functions.empty()) fail("no function found in source");
    program.top = program.functions.back().name;
    return std::move(program);
  }

  void parseFunction() {
    bool isVoid = isIdent("void");
    std::optional<ElemKind> ret;
    if (!isVoid) {
      ret = typeKeyword();
      if (!ret) fail("expected function return type (void, float or int)");
    }
    bump();
    Token nameTok = tok;
    std::string name = expectIdent("function name");
    if (program.find(name)) fail(nameTok, "redefinition of function '" + name + "'");

    Function func;
    func.name = name;
    fn = &func;
    scalarValues.clear();
    arrayNames.clear();
    sawReturn = false;

    expect(Tok::LParen, "'('");
    if (tok.kind != Tok::RParen) {
      parseParam();
      while (tok.kind == Tok::Comma) {
        bump();
        parseParam();
      }
    }
    expect(Tok::RParen, "')'");

    // decide the function data kind from the first array/scalar
    if (!func.arrays.empty()) func.dataKind = func.arrays[0].type.elem;
    else if (!func.scalars.empty())
      func.dataKind = func.scalars[0].kind == ValueKind::I32 ? ElemKind::I32
                                                             : ElemKind::F32;

    std::string retArray;
    if (ret) {
      retArray = "ret";
      while (arrayNames.count(retArray)) retArray += "_";
      ArrayParam ap;
      ap.name = retArray;
      ap.type = MemRefType::get({1}, *ret);
      func.arrays.push_back(ap);
      arrayNames.insert(retArray);
    }

    expect(Tok::LBrace, "'{'");
    parseBody(func.body, retArray, ret);
    expect(Tok::RBrace, "'}'");
    if (ret && !sawReturn)
      fail(nameTok, "non-void function '" + name + "' has no return");
    program.functions.push_back(std::move(func));
    fn = nullptr;
  }

  void parseParam() {
    Token at = tok;
    auto kind = typeKeyword();
    if (!kind) fail("expected parameter type (float or int)");
    bump();
    if (tok.kind == Tok::Star) {
      bump();
      if (tok.kind == Tok::Star)
        fail(at, "pointer to pointer is not supported; input rejected");
      std::string name = expectIdent("parameter name");
      declArrayParam(at, name, {1}, *kind);
      if (tok.kind == Tok::LBracket)
        fail("pointer parameter cannot also have array dimensions");
      return;
    }
    std::string name = expectIdent("parameter name");
    if (tok.kind == Tok::LBracket) {
      std::vector<int64_t> shape;
      while (tok.kind == Tok::LBracket) {
        bump();
        if (tok.kind != Tok::IntLit)
          fail("array extents must be integer constants (fixed-size arrays only)");
        if (tok.intValue <= 0) fail("array extent must be positive");
        shape.push_back(tok.intValue);
        bump();
        expect(Tok::RBracket, "']'");
      }
      declArrayParam(at, name, std::move(shape), *kind);
      return;
    }
    // scalar parameter
    if (scalarValues.count(name) || arrayNames.count(name))
      fail(at, "duplicate parameter name '" + name + "'");
    ScalarParam sp;
    sp.name = name;
    sp.kind = *kind == ElemKind::F32 ? ValueKind::F32 : ValueKind::I32;
    sp.value = fn->newValue(sp.kind, name);
    fn->scalars.push_back(sp);
    scalarValues[name] = sp.value;
  }

  void declArrayParam(const Token &at, const std::string &name,
                      std::vector<int64_t> shape, ElemKind kind) {
    if (scalarValues.count(name) || arrayNames.count(name))
      fail(at, "duplicate parameter name '" + name + "'");
    ArrayParam ap;
    ap.name = name;
    ap.type = MemRefType::get(std::move(shape), kind);
    fn->arrays.push_back(ap);
    arrayNames.insert(name);
  }

  // ---- expressions ----

  ExprPtr node(ExprNode::Kind k, const Token &at) {
    auto n = std::make_unique<ExprNode>();
    n->kind = k;
    n->line = at.line;
    n->col = at.col;
    return n;
  }

  ExprPtr parsePrimary() {
    Token at = tok;
    if (tok.kind == Tok::IntLit) {
      auto n = node(ExprNode::Int, at);
      n->intValue = tok.intValue;
      bump();
      return n;
    }
    if (tok.kind == Tok::FloatLit) {
      auto n = node(ExprNode::Float, at);
      n->floatValue = tok.floatValue;
      bump();
      return n;
    }
    if (tok.kind == Tok::LParen) {
      bump();
      auto e = parseExpr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (tok.kind == Tok::Star) {
      bump();
      Token nameTok = tok;
      auto n = node(ExprNode::Deref, at);
      n->name = expectIdent("identifier after '*'");
      if (!arrayNames.count(n->name))
        fail(nameTok, "'" + n->name + "' is not a pointer parameter");
      return n;
    }
    if (tok.kind == Tok::Minus) {
      bump();
      auto n = node(ExprNode::Neg, at);
      n->children.push_back(parsePrimary());
      return n;
    }
    if (tok.kind == Tok::Ident) {
      if (isIdent("while"))
        fail("while loops are not supported; input rejected");
      std::string name = tok.text;
      bump();
      if (tok.kind == Tok::LBracket) {
        auto n = node(ExprNode::ArrayRef, at);
        n->name = name;
        while (tok.kind == Tok::LBracket) {
          bump();
          n->children.push_back(parseExpr());
          expect(Tok::RBracket, "']'");
        }
        return n;
      }
      auto n = node(ExprNode::Ident, at);
      n->name = name;
      return n;
    }
    fail("expected expression");
  }

  ExprPtr parseMul() {
    auto lhs = parsePrimary();
    while (tok.kind == Tok::Star || tok.kind == Tok::Slash ||
           tok.kind == Tok::Percent) {
      Token at = tok;
      char op = tok.kind == Tok::Star ? '*' : tok.kind == Tok::Slash ? '/' : '%';
      bump();
      auto n = node(ExprNode::Bin, at);
      n->op = op;
      n->children.push_back(std::move(lhs));
      n->children.push_back(parsePrimary());
      lhs = std::move(n);
    }
    return lhs;
  }

  ExprPtr parseExpr() {
    auto lhs = parseMul();
    while (tok.kind == Tok::Plus || tok.kind == Tok::Minus) {
      Token at = tok;
      char op = tok.kind == Tok::Plus ? '+' : '-';
      bump();
      auto n = node(ExprNode::Bin, at);
      n->op = op;
      n->children.push_back(std::move(lhs));
      n->children.push_back(parseMul());
      lhs = std::move(n);
    }
    return lhs;
  }

  // ---- lowering ----

  [[noreturn]] void failAt(const ExprNode &n, const std::string &msg) {
    throw SourceError(file, n.line, n.col, msg);
  }

  // Fold an integer-constant expression, if it is one.
  std::optional<int64_t> foldInt(const ExprNode &n) {
    switch (n.kind) {
      case ExprNode::Int: return n.intValue;
      case ExprNode::Neg: {
        auto v = foldInt(*n.children[0]);
        if (v) return -*v;
        return std::nullopt;
      }
      case ExprNode::Bin: {
        auto a = foldInt(*n.children[0]);
        auto b = foldInt(*n.children[1]);
        if (!a || !b) return std::nullopt;
        switch (n.op) {
          case '+': return *a + *b;
          case '-': return *a - *b;
          case '*': return *a * *b;
          case '/': if (*b == 0) return std::nullopt; return *a / *b;
          case '%': if (*b == 0) return std::nullopt; return *a % *b;
        }
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }

  // Lower an expression in index context (array subscripts, loop bounds and
  // guard comparisons) to an affine expression over value ids. Division and
  // modulus require a positive constant divisor.
  AffineExpr lowerIndex(const ExprNode &n, StmtList &out) {
    if (auto c = foldInt(n)) return AffineExpr::constant(*c);
    switch (n.kind) {
      case ExprNode::Float:
        failAt(n, "floating-point value in index expression");
      case ExprNode::Ident: {
        auto it = scalarValues.find(n.name);
        if (it == scalarValues.end())
          failAt(n, "unknown identifier '" + n.name + "' in index expression");
        if (fn->valueKinds[it->second] == ValueKind::F32)
          failAt(n, "'" + n.name + "' is floating-point and cannot index");
        return AffineExpr::dim(it->second);
      }
      case ExprNode::Neg:
        return AffineExpr::mul(lowerIndex(*n.children[0], out), -1);
      case ExprNode::Bin: {
        if (n.op == '+')
          return AffineExpr::add(lowerIndex(*n.children[0], out),
                                 lowerIndex(*n.children[1], out));
        if (n.op == '-')
          return AffineExpr::sub(lowerIndex(*n.children[0], out),
                                 lowerIndex(*n.children[1], out));
        if (n.op == '*') {
          auto ca = foldInt(*n.children[0]);
          auto cb = foldInt(*n.children[1]);
          if (cb) return AffineExpr::mul(lowerIndex(*n.children[0], out), *cb);
          if (ca) return AffineExpr::mul(lowerIndex(*n.children[1], out), *ca);
          // non-affine product: compute as an integer value
          return AffineExpr::dim(lowerValue(n, ValueKind::I32, out));
        }
        if (n.op == '/' || n.op == '%') {
          auto cb = foldInt(*n.children[1]);
          if (!cb || *cb <= 0)
            failAt(n, "division in index context requires a positive constant "
                      "divisor");
          auto a = lowerIndex(*n.children[0], out);
          return n.op == '/' ? AffineExpr::floorDiv(a, *cb)
                             : AffineExpr::mod(a, *cb);
        }
        failAt(n, "unsupported operator in index expression");
      }
      case ExprNode::Deref:
      case ExprNode::ArrayRef:
        // a value loaded from memory; usable as a general (non-affine) index
        return AffineExpr::dim(lowerValue(n, ValueKind::I32, out));
      default: failAt(n, "unsupported index expression");
    }
  }

  std::optional<ValueKind> inferKind(const ExprNode &n) {
    switch (n.kind) {
      case ExprNode::Int: return std::nullopt;  // adapts to context
      case ExprNode::Float: return ValueKind::F32;
      case ExprNode::Ident: {
        auto it = scalarValues.find(n.name);
        if (it == scalarValues.end()) {
          if (arrayNames.count(n.name))
            failAt(n, "array '" + n.name + "' used without subscript");
          failAt(n, "unknown identifier '" + n.name + "'");
        }
        ValueKind k = fn->valueKinds[it->second];
        if (k == ValueKind::Index)
          failAt(n, "loop variable '" + n.name + "' used as a data value");
        return k;
      }
      case ExprNode::Deref:
      case ExprNode::ArrayRef: {
        const auto *t = fn->arrayType(n.name);
        if (!t) failAt(n, "unknown array '" + n.name + "'");
        return valueKindOf(t->elem);
      }
      case ExprNode::Neg: return inferKind(*n.children[0]);
      case ExprNode::Bin: {
        auto a = inferKind(*n.children[0]);
        auto b = inferKind(*n.children[1]);
        if (a && b && *a != *b)
          failAt(n, "mixed int/float arithmetic is not supported");
        return a ? a : b;
      }
    }
    return std::nullopt;
  }

  ValueId emitConst(ValueKind kind, double fval, int64_t ival, StmtList &out) {
    ArithStmt a;
    a.op = ArithOp::Const;
    a.type = kind;
    if (kind == ValueKind::F32) a.f32Const = static_cast<float>(fval);
    else a.intConst = ival;
    a.result = fn->newValue(kind);
    out.push_back(makeStmt(a));
    return a.result;
  }

  ValueId lowerLoad(const ExprNode &n, StmtList &out) {
    const auto *t = fn->arrayType(n.name);
    if (!t) failAt(n, "unknown array '" + n.name + "'");
    LoadStmt l;
    l.array = n.name;
    if (n.kind == ExprNode::Deref) {
      l.indices.push_back(AffineExpr::constant(0));
    } else {
      for (auto &c : n.children) l.indices.push_back(lowerIndex(*c, out));
    }
    if (l.indices.size() != t->rank())
      failAt(n, "array '" + n.name + "' expects " + std::to_string(t->rank()) +
                    " subscripts");
    l.result = fn->newValue(valueKindOf(t->elem));
    out.push_back(makeStmt(l));
    return l.result;
  }

  ValueId lowerValue(const ExprNode &n, ValueKind kind, StmtList &out) {
    switch (n.kind) {
      case ExprNode::Int:
        if (kind == ValueKind::F32)
          return emitConst(kind, static_cast<double>(n.intValue), 0, out);
        return emitConst(kind, 0, n.intValue, out);
      case ExprNode::Float:
        if (kind != ValueKind::F32)
          failAt(n, "floating-point literal in integer context");
        return emitConst(kind, n.floatValue, 0, out);
      case ExprNode::Ident: {
        auto it = scalarValues.find(n.name);
        if (it == scalarValues.end())
          failAt(n, "unknown identifier '" + n.name + "'");
        ValueKind k = fn->valueKinds[it->second];
        if (k == ValueKind::Index)
          failAt(n, "loop variable '" + n.name + "' used as a data value");
        if (k != kind) failAt(n, "operand type mismatch");
        return it->second;
      }
      case ExprNode::Deref:
      case ExprNode::ArrayRef: {
        ValueId v = lowerLoad(n, out);
        if (fn->valueKinds[v] != kind) failAt(n, "operand type mismatch");
        return v;
      }
      case ExprNode::Neg: {
        ArithStmt a;
        a.op = ArithOp::Neg;
        a.type = kind;
        a.lhs = lowerValue(*n.children[0], kind, out);
        a.result = fn->newValue(kind);
        out.push_back(makeStmt(a));
        return a.result;
      }
      case ExprNode::Bin: {
        ArithStmt a;
        switch (n.op) {
          case '+': a.op = ArithOp::Add; break;
          case '-': a.op = ArithOp::Sub; break;
          case '*': a.op = ArithOp::Mul; break;
          case '/': a.op = ArithOp::Div; break;
          case '%':
            if (kind == ValueKind::F32) failAt(n, "'%' on floating-point values");
            a.op = ArithOp::Mod;
            break;
          default: failAt(n, "unsupported operator");
        }
        a.type = kind;
        a.lhs = lowerValue(*n.children[0], kind, out);
        a.rhs = lowerValue(*n.children[1], kind, out);
        a.result = fn->newValue(kind);
        out.push_back(makeStmt(a));
        return a.result;
      }
    }
    failAt(n, "unsupported expression");
  }

  ValueId lowerTyped(const ExprNode &n, StmtList &out) {
    auto k = inferKind(n);
    ValueKind kind = k.value_or(fn->dataKind == ElemKind::F32 ? ValueKind::F32
                                                              : ValueKind::I32);
    return lowerValue(n, kind, out);
  }

  // ---- statements ----

  void parseBody(StmtList &out, const std::string &retArray,
                 std::optional<ElemKind> retKind) {
    while (tok.kind != Tok::RBrace && tok.kind != Tok::End) {
      if (sawReturn) fail("statements after return are not supported");
      parseStmt(out, retArray, retKind);
    }
  }

  void parseStmt(StmtList &out, const std::string &retArray,
                 std::optional<ElemKind> retKind) {
    if (isIdent("for")) { parseFor(out, retArray, retKind); return; }
    if (isIdent("if")) { parseIf(out, retArray, retKind); return; }
    if (isIdent("while")) fail("while loops are not supported; input rejected");
    if (isIdent("return")) {
      Token at = tok;
      bump();
      if (tok.kind == Tok::Semi) {
        if (retKind) fail(at, "non-void function must return a value");
        bump();
        sawReturn = true;
        return;
      }
      if (!retKind) fail(at, "void function cannot return a value");
      auto e = parseExpr();
      expect(Tok::Semi, "';'");
      StoreStmt st;
      st.array = retArray;
      st.indices.push_back(AffineExpr::constant(0));
      st.value = lowerValue(*e, valueKindOf(*retKind), out);
      out.push_back(makeStmt(st));
      sawReturn = true;
      return;
    }
    if (auto kind = typeKeyword()) { parseDecl(out, *kind); return; }
    if (isIdent("void")) fail("nested function definitions are not supported");

    // assignment, deref assignment or call
    Token at = tok;
    if (tok.kind == Tok::Star) {
      bump();
      std::string name = expectIdent("identifier after '*'");
      parseAssignTail(out, at, name, /*deref=*/true, {});
      return;
    }
    std::string name = expectIdent("statement");
    if (tok.kind == Tok::LParen) { parseCall(out, at, name); return; }
    std::vector<ExprPtr> indices;
    while (tok.kind == Tok::LBracket) {
      bump();
      indices.push_back(parseExpr());
      expect(Tok::RBracket, "']'");
    }
    parseAssignTail(out, at, name, false, std::move(indices));
  }

  void parseDecl(StmtList &out, ElemKind kind) {
    bump();
    if (tok.kind == Tok::Star)
      fail("local pointer declarations are not supported");
    Token at = tok;
    std::string name = expectIdent("declaration name");
    if (scalarValues.count(name) || arrayNames.count(name))
      fail(at, "redeclaration of '" + name + "'");
    if (tok.kind == Tok::LBracket) {
      std::vector<int64_t> shape;
      while (tok.kind == Tok::LBracket) {
        bump();
        if (tok.kind != Tok::IntLit)
          fail("array extents must be integer constants");
        if (tok.intValue <= 0) fail("array extent must be positive");
        shape.push_back(tok.intValue);
        bump();
        expect(Tok::RBracket, "']'");
      }
      expect(Tok::Semi, "';'");
      LocalArray la;
      la.name = name;
      la.type = MemRefType::get(std::move(shape), kind);
      fn->locals.push_back(la);
      arrayNames.insert(name);
      return;
    }
    // single-assignment scalar temporary
    expect(Tok::Assign, "'=' (scalar locals must be initialized)");
    auto e = parseExpr();
    expect(Tok::Semi, "';'");
    ValueId v = lowerValue(*e, valueKindOf(kind), out);
    scalarValues[name] = v;
    if (fn->valueNames[v].empty()) fn->valueNames[v] = name;
  }

  void parseAssignTail(StmtList &out, const Token &at, const std::string &name,
                       bool deref, std::vector<ExprPtr> indices) {
    if (!arrayNames.count(name)) {
      if (scalarValues.count(name))
        fail(at, "scalar '" + name + "' cannot be reassigned (single assignment)");
      fail(at, "unknown array '" + name + "'");
    }
    const auto *t = fn->arrayType(name);
    Tok assignKind = tok.kind;
    if (assignKind != Tok::Assign && assignKind != Tok::PlusAssign &&
        assignKind != Tok::MinusAssign && assignKind != Tok::StarAssign)
      fail("expected assignment operator");
    bump();
    auto rhs = parseExpr();
    expect(Tok::Semi, "';'");

    std::vector<AffineExpr> idx;
    if (deref) {
      idx.push_back(AffineExpr::constant(0));
    } else {
      for (auto &e : indices) idx.push_back(lowerIndex(*e, out));
    }
    if (idx.size() != t->rank())
      fail(at, "array '" + name + "' expects " + std::to_string(t->rank()) +
                   " subscripts");

    ValueKind kind = valueKindOf(t->elem);
    ValueId value = lowerValue(*rhs, kind, out);
    if (assignKind != Tok::Assign) {
      LoadStmt l;
      l.array = name;
      l.indices = idx;
      l.result = fn->newValue(kind);
      out.push_back(makeStmt(l));
      ArithStmt a;
      a.op = assignKind == Tok::PlusAssign ? ArithOp::Add
             : assignKind == Tok::MinusAssign ? ArithOp::Sub
                                              : ArithOp::Mul;
      a.type = kind;
      a.lhs = l.result;
      a.rhs = value;
      a.result = fn->newValue(kind);
      out.push_back(makeStmt(a));
      value = a.result;
    }
    StoreStmt st;
    st.array = name;
    st.indices = std::move(idx);
    st.value = value;
    out.push_back(makeStmt(st));
  }

  void parseCall(StmtList &out, const Token &at, const std::string &name) {
    const Function *callee = program.find(name);
    if (!callee)
      fail(at, "call to unknown function '" + name + "' (define it first)");
    expect(Tok::LParen, "'('");
    CallStmt call;
    call.callee = name;
    size_t arrayIdx = 0, scalarIdx = 0;
    bool first = true;
    while (tok.kind != Tok::RParen) {
      if (!first) expect(Tok::Comma, "','");
      first = false;
      Token argTok = tok;
      auto e = parseExpr();
      bool wantArray = arrayIdx < callee->arrays.size() &&
                       (e->kind == ExprNode::Ident && arrayNames.count(e->name));
      if (wantArray) {
        call.arrays.push_back(e->name);
        ++arrayIdx;
      } else {
        if (scalarIdx >= callee->scalars.size())
          fail(argTok, "too many arguments in call to '" + name + "'");
        call.scalars.push_back(
            lowerValue(*e, callee->scalars[scalarIdx].kind, out));
        ++scalarIdx;
      }
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Semi, "';'");
    if (arrayIdx != callee->arrays.size() || scalarIdx != callee->scalars.size())
      fail(at, "wrong number of arguments in call to '" + name + "'");
    out.push_back(makeStmt(std::move(call)));
  }

  void parseFor(StmtList &out, const std::string &retArray,
                std::optional<ElemKind> retKind) {
    Token at = tok;
    bump();
    expect(Tok::LParen, "'('");
    if (!isIdent("int")) fail("loop variable must be declared 'int'");
    bump();
    Token ivTok = tok;
    std::string ivName = expectIdent("loop variable");
    if (scalarValues.count(ivName) || arrayNames.count(ivName))
      fail(ivTok, "loop variable '" + ivName + "' shadows an existing name");
    expect(Tok::Assign, "'='");
    auto lowerE = parseExpr();
    expect(Tok::Semi, "';'");
    Token condVar = tok;
    if (expectIdent("loop condition variable") != ivName)
      fail(condVar, "loop condition must test the loop variable");
    if (tok.kind != Tok::Lt)
      fail("loop condition must use '<'");
    bump();
    auto upperE = parseExpr();
    expect(Tok::Semi, "';'");
    Token stepVar = tok;
    if (expectIdent("loop step variable") != ivName)
      fail(stepVar, "loop step must update the loop variable");
    int64_t step = 1;
    if (tok.kind == Tok::PlusPlus) {
      bump();
    } else if (tok.kind == Tok::PlusAssign) {
      bump();
      if (tok.kind != Tok::IntLit || tok.intValue <= 0)
        fail("loop step must be a positive integer constant");
      step = tok.intValue;
      bump();
    } else {
      fail("loop step must be '++' or '+= <constant>'");
    }
    expect(Tok::RParen, "')'");

    LoopStmt loop;
    loop.lower = lowerIndex(*lowerE, out);
    loop.upper = lowerIndex(*upperE, out);
    loop.step = step;
    loop.iv = fn->newValue(ValueKind::Index, ivName);
    scalarValues[ivName] = loop.iv;

    if (tok.kind == Tok::LBrace) {
      bump();
      parseBody(loop.body, retArray, retKind);
      expect(Tok::RBrace, "'}'");
    } else {
      parseStmt(loop.body, retArray, retKind);
    }
    scalarValues.erase(ivName);
    out.push_back(makeStmt(std::move(loop)));
  }

  void parseIf(StmtList &out, const std::string &retArray,
               std::optional<ElemKind> retKind) {
    bump();
    expect(Tok::LParen, "'('");
    IfStmt guard;
    for (;;) {
      auto lhs = parseExpr();
      Tok cmp = tok.kind;
      if (cmp != Tok::Lt && cmp != Tok::Le && cmp != Tok::Gt && cmp != Tok::Ge &&
          cmp != Tok::EqEq) {
        if (cmp == Tok::NotEq)
          fail("'!=' conditions are not supported");
        fail("expected comparison in if condition");
      }
      bump();
      auto rhs = parseExpr();
      AffineExpr a = lowerIndex(*lhs, out);
      AffineExpr b = lowerIndex(*rhs, out);
      AffineConstraint c;
      switch (cmp) {
        case Tok::Lt: c.expr = AffineExpr::add(AffineExpr::sub(b, a), -1); break;
        case Tok::Le: c.expr = AffineExpr::sub(b, a); break;
        case Tok::Gt: c.expr = AffineExpr::add(AffineExpr::sub(a, b), -1); break;
        case Tok::Ge: c.expr = AffineExpr::sub(a, b); break;
        case Tok::EqEq:
          c.expr = AffineExpr::sub(a, b);
          c.equality = true;
          break;
        default: break;
      }
      guard.conditions.push_back(c);
      if (tok.kind != Tok::AndAnd) break;
      bump();
    }
    expect(Tok::RParen, "')'");
    if (tok.kind == Tok::LBrace) {
      bump();
      parseBody(guard.thenBody, retArray, retKind);
      expect(Tok::RBrace, "'}'");
    } else {
      parseStmt(guard.thenBody, retArray, retKind);
    }
    if (isIdent("else")) {
      bump();
      if (tok.kind == Tok::LBrace) {
        bump();
        parseBody(guard.elseBody, retArray, retKind);
        expect(Tok::RBrace, "'}'");
      } else {
        parseStmt(guard.elseBody, retArray, retKind);
      }
    }
    out.push_back(makeStmt(std::move(guard)));
  }
};

}  // namespace

Program parse_c(const std::string &source, const std::string &filename) {
  Parser p(source, filename);
  return p.run();
}

namespace {

bool exprAffineIn(const AffineExpr &e, const std::vector<uint8_t> &affineIv) {
  std::vector<uint32_t> dims;
  e.collectDims(dims);
  for (auto d : dims)
    if (d >= affineIv.size() || !affineIv[d]) return false;
  return true;
}

int raiseBody(Function &f, StmtList &body, std::vector<uint8_t> &affineIv) {
  int raised = 0;
  for (auto &s : body) {
    if (auto *l = s->as<LoopStmt>()) {
      bool ok = l->step > 0 && exprAffineIn(l->lower, affineIv) &&
                exprAffineIn(l->upper, affineIv);
      if (ok && !l->affine) { l->affine = true; ++raised; }
      if (!ok) l->affine = false;
      if (l->affine) affineIv[l->iv] = 1;
      raised += raiseBody(f, l->body, affineIv);
      affineIv[l->iv] = 0;
      continue;
    }
    if (auto *g = s->as<IfStmt>()) {
      bool ok = true;
      for (auto &c : g->conditions) ok = ok && exprAffineIn(c.expr, affineIv);
      if (ok && !g->affine) { g->affine = true; ++raised; }
      if (!ok) g->affine = false;
      raised += raiseBody(f, g->thenBody, affineIv);
      raised += raiseBody(f, g->elseBody, affineIv);
      continue;
    }
    if (auto *l = s->as<LoadStmt>()) {
      bool ok = true;
      for (auto &e : l->indices) ok = ok && exprAffineIn(e, affineIv);
      if (ok && !l->affine) { l->affine = true; ++raised; }
      if (!ok) l->affine = false;
      continue;
    }
    if (auto *st = s->as<StoreStmt>()) {
      bool ok = true;
      for (auto &e : st->indices) ok = ok && exprAffineIn(e, affineIv);
      if (ok && !st->affine) { st->affine = true; ++raised; }
      if (!ok) st->affine = false;
      continue;
    }
  }
  return raised;
}

}  // namespace

int raise_to_affine(Function &f) {
  std::vector<uint8_t> affineIv(f.valueKinds.size(), 0);
  return raiseBody(f, f.body, affineIv);
}

int raise_to_affine(Program &p) {
  int n = 0;
  for (auto &f : p.functions) n += raise_to_affine(f);
  return n;
}

}  // namespace hlsopt
