#include "hlsopt/affine.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>

namespace hlsopt {

int64_t floor_div(int64_t a, int64_t b) {
  assert(b > 0);
  int64_t q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

int64_t floor_mod(int64_t a, int64_t b) {
  assert(b > 0);
  int64_t m = a % b;
  return m < 0 ? m + b : m;
}

int64_t ceil_div(int64_t a, int64_t b) {
  assert(b > 0);
  return floor_div(a + b - 1, b);
}

AffineExpr AffineExpr::make(ExprKind k, int64_t v, AffineExpr a, AffineExpr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->value = v;
  n->a = a.node_;
  n->b = b.node_;
  return AffineExpr(std::move(n));
}

AffineExpr AffineExpr::constant(int64_t value) {
  return make(ExprKind::Constant, value);
}

AffineExpr AffineExpr::dim(uint32_t index) {
  return make(ExprKind::Dim, static_cast<int64_t>(index));
}

AffineExpr AffineExpr::add(AffineExpr a, AffineExpr b) {
  assert(a.valid() && b.valid());
  if (a.isConstant() && b.isConstant())
    return constant(a.constantValue() + b.constantValue());
  if (a.isConstant() && a.constantValue() == 0) return b;
  if (b.isConstant() && b.constantValue() == 0) return a;
  return make(ExprKind::Add, 0, a, b);
}

AffineExpr AffineExpr::add(AffineExpr a, int64_t c) {
  return add(std::move(a), constant(c));
}

AffineExpr AffineExpr::sub(AffineExpr a, AffineExpr b) {
  return add(std::move(a), mul(std::move(b), -1));
}

AffineExpr AffineExpr::mul(AffineExpr a, int64_t factor) {
  assert(a.valid());
  if (factor == 0) return constant(0);
  if (factor == 1) return a;
  if (a.isConstant()) return constant(a.constantValue() * factor);
  if (a.kind() == ExprKind::MulConst)
    return make(ExprKind::MulConst, a.rhsConstant() * factor, a.lhs());
  return make(ExprKind::MulConst, factor, a);
}

AffineExpr AffineExpr::floorDiv(AffineExpr a, int64_t divisor) {
  assert(a.valid());
  if (divisor <= 0) throw std::invalid_argument("floordiv divisor must be > 0");
  if (divisor == 1) return a;
  if (a.isConstant()) return constant(floor_div(a.constantValue(), divisor));
  return make(ExprKind::FloorDiv, divisor, a);
}

AffineExpr AffineExpr::mod(AffineExpr a, int64_t divisor) {
  assert(a.valid());
  if (divisor <= 0) throw std::invalid_argument("mod divisor must be > 0");
  if (divisor == 1) return constant(0);
  if (a.isConstant()) return constant(floor_mod(a.constantValue(), divisor));
  return make(ExprKind::Mod, divisor, a);
}

ExprKind AffineExpr::kind() const { return node_->kind; }

int64_t AffineExpr::constantValue() const {
  assert(kind() == ExprKind::Constant);
  return node_->value;
}

uint32_t AffineExpr::dimIndex() const {
  assert(kind() == ExprKind::Dim);
  return static_cast<uint32_t>(node_->value);
}

int64_t AffineExpr::rhsConstant() const {
  assert(kind() == ExprKind::MulConst || kind() == ExprKind::FloorDiv ||
         kind() == ExprKind::Mod);
  return node_->value;
}

AffineExpr AffineExpr::lhs() const { return AffineExpr(node_->a); }
AffineExpr AffineExpr::rhs() const { return AffineExpr(node_->b); }

int64_t AffineExpr::evaluate(std::span<const int64_t> dims) const {
  switch (kind()) {
    case ExprKind::Constant: return node_->value;
    case ExprKind::Dim: {
      auto i = dimIndex();
      if (i >= dims.size()) throw std::out_of_range("affine dim out of range");
      return dims[i];
    }
    case ExprKind::Add: return lhs().evaluate(dims) + rhs().evaluate(dims);
    case ExprKind::MulConst: return lhs().evaluate(dims) * node_->value;
    case ExprKind::FloorDiv: return floor_div(lhs().evaluate(dims), node_->value);
    case ExprKind::Mod: return floor_mod(lhs().evaluate(dims), node_->value);
  }
  return 0;
}

AffineExpr AffineExpr::replaceDims(std::span<const AffineExpr> repl) const {
  switch (kind()) {
    case ExprKind::Constant: return *this;
    case ExprKind::Dim: {
      auto i = dimIndex();
      if (i >= repl.size() || !repl[i].valid())
        throw std::out_of_range("no replacement for affine dim");
      return repl[i];
    }
    case ExprKind::Add:
      return add(lhs().replaceDims(repl), rhs().replaceDims(repl));
    case ExprKind::MulConst: return mul(lhs().replaceDims(repl), node_->value);
    case ExprKind::FloorDiv:
      return floorDiv(lhs().replaceDims(repl), node_->value);
    case ExprKind::Mod: return mod(lhs().replaceDims(repl), node_->value);
  }
  return *this;
}

AffineExpr AffineExpr::replaceDim(uint32_t index, const AffineExpr &repl) const {
  switch (kind()) {
    case ExprKind::Constant: return *this;
    case ExprKind::Dim: return dimIndex() == index ? repl : *this;
    case ExprKind::Add:
      return add(lhs().replaceDim(index, repl), rhs().replaceDim(index, repl));
    case ExprKind::MulConst:
      return mul(lhs().replaceDim(index, repl), node_->value);
    case ExprKind::FloorDiv:
      return floorDiv(lhs().replaceDim(index, repl), node_->value);
    case ExprKind::Mod: return mod(lhs().replaceDim(index, repl), node_->value);
  }
  return *this;
}

void AffineExpr::collectDims(std::vector<uint32_t> &out) const {
  switch (kind()) {
    case ExprKind::Constant: return;
    case ExprKind::Dim: out.push_back(dimIndex()); return;
    case ExprKind::Add:
      lhs().collectDims(out);
      rhs().collectDims(out);
      return;
    case ExprKind::MulConst:
    case ExprKind::FloorDiv:
    case ExprKind::Mod: lhs().collectDims(out); return;
  }
}

uint32_t AffineExpr::maxDimPlusOne() const {
  std::vector<uint32_t> dims;
  collectDims(dims);
  uint32_t m = 0;
  for (auto d : dims) m = std::max(m, d + 1);
  return m;
}

bool AffineExpr::usesDim(uint32_t index) const {
  std::vector<uint32_t> dims;
  collectDims(dims);
  return std::find(dims.begin(), dims.end(), index) != dims.end();
}

bool AffineExpr::operator==(const AffineExpr &other) const {
  if (node_ == other.node_) return true;
  if (!node_ || !other.node_) return false;
  if (kind() != other.kind() || node_->value != other.node_->value)
    return false;
  switch (kind()) {
    case ExprKind::Constant:
    case ExprKind::Dim: return true;
    case ExprKind::Add: return lhs() == other.lhs() && rhs() == other.rhs();
    case ExprKind::MulConst:
    case ExprKind::FloorDiv:
    case ExprKind::Mod: return lhs() == other.lhs();
  }
  return false;
}

std::string AffineExpr::str() const { return str({}); }

std::string AffineExpr::str(const std::vector<std::string> &dimNames) const {
  switch (kind()) {
    case ExprKind::Constant: return std::to_string(node_->value);
    case ExprKind::Dim: {
      auto i = dimIndex();
      if (i < dimNames.size() && !dimNames[i].empty()) return dimNames[i];
      return "d" + std::to_string(i);
    }
    case ExprKind::Add: {
      // print "a - b" when rhs is a negated product
      auto r = rhs();
      if (r.kind() == ExprKind::MulConst && r.rhsConstant() < 0) {
        auto inner = mul(r.lhs(), -r.rhsConstant());
        return "(" + lhs().str(dimNames) + " - " + inner.str(dimNames) + ")";
      }
      if (r.kind() == ExprKind::Constant && r.constantValue() < 0)
        return "(" + lhs().str(dimNames) + " - " +
               std::to_string(-r.constantValue()) + ")";
      return "(" + lhs().str(dimNames) + " + " + rhs().str(dimNames) + ")";
    }
    case ExprKind::MulConst:
      return "(" + lhs().str(dimNames) + " * " +
             std::to_string(node_->value) + ")";
    case ExprKind::FloorDiv:
      return "(" + lhs().str(dimNames) + " floordiv " +
             std::to_string(node_->value) + ")";
    case ExprKind::Mod:
      return "(" + lhs().str(dimNames) + " mod " +
             std::to_string(node_->value) + ")";
  }
  return "?";
}

std::pair<int64_t, int64_t> AffineExpr::range(
    std::span<const std::pair<int64_t, int64_t>> dimRanges) const {
  switch (kind()) {
    case ExprKind::Constant: return {node_->value, node_->value};
    case ExprKind::Dim: {
      auto i = dimIndex();
      if (i >= dimRanges.size())
        throw std::out_of_range("no range for affine dim");
      return dimRanges[i];
    }
    case ExprKind::Add: {
      auto a = lhs().range(dimRanges);
      auto b = rhs().range(dimRanges);
      return {a.first + b.first, a.second + b.second};
    }
    case ExprKind::MulConst: {
      auto a = lhs().range(dimRanges);
      int64_t c = node_->value;
      if (c >= 0) return {a.first * c, a.second * c};
      return {a.second * c, a.first * c};
    }
    case ExprKind::FloorDiv: {
      auto a = lhs().range(dimRanges);
      return {floor_div(a.first, node_->value),
              floor_div(a.second, node_->value)};
    }
    case ExprKind::Mod: {
      auto a = lhs().range(dimRanges);
      int64_t c = node_->value;
      // within one period the bounds are exact, otherwise [0, c-1]
      if (floor_div(a.first, c) == floor_div(a.second, c))
        return {floor_mod(a.first, c), floor_mod(a.second, c)};
      return {0, c - 1};
    }
  }
  return {0, 0};
}

// ---- LinearForm ----

bool LinearForm::Term::operator==(const Term &o) const {
  if (kind != o.kind) return false;
  if (kind == ExprKind::Dim) return dim == o.dim;
  return divisor == o.divisor && sub == o.sub;
}

bool LinearForm::Term::operator<(const Term &o) const {
  if (kind != o.kind) return kind < o.kind;
  if (kind == ExprKind::Dim) return dim < o.dim;
  if (divisor != o.divisor) return divisor < o.divisor;
  return sub.str() < o.sub.str();
}

namespace {

void accumulate(LinearForm &f, const AffineExpr &e, int64_t scale) {
  if (scale == 0) return;
  switch (e.kind()) {
    case ExprKind::Constant:
      f.constant += scale * e.constantValue();
      return;
    case ExprKind::Dim: {
      LinearForm::Term t;
      t.kind = ExprKind::Dim;
      t.dim = e.dimIndex();
      f.terms.emplace_back(t, scale);
      return;
    }
    case ExprKind::Add:
      accumulate(f, e.lhs(), scale);
      accumulate(f, e.rhs(), scale);
      return;
    case ExprKind::MulConst:
      accumulate(f, e.lhs(), scale * e.rhsConstant());
      return;
    case ExprKind::FloorDiv:
    case ExprKind::Mod: {
      LinearForm::Term t;
      t.kind = e.kind();
      t.divisor = e.rhsConstant();
      t.sub = e.lhs().canonical();
      f.terms.emplace_back(t, scale);
      return;
    }
  }
}

}  // namespace

LinearForm LinearForm::of(const AffineExpr &e) {
  LinearForm f;
  if (e.valid()) accumulate(f, e, 1);
  std::sort(f.terms.begin(), f.terms.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  // merge equal terms
  std::vector<std::pair<Term, int64_t>> merged;
  for (auto &tc : f.terms) {
    if (!merged.empty() && merged.back().first == tc.first)
      merged.back().second += tc.second;
    else
      merged.push_back(tc);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const auto &tc) { return tc.second == 0; }),
               merged.end());
  f.terms = std::move(merged);
  return f;
}

AffineExpr LinearForm::toExpr() const {
  AffineExpr e = AffineExpr::constant(constant);
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    AffineExpr base;
    switch (it->first.kind) {
      case ExprKind::Dim: base = AffineExpr::dim(it->first.dim); break;
      case ExprKind::FloorDiv:
        base = AffineExpr::floorDiv(it->first.sub, it->first.divisor);
        break;
      case ExprKind::Mod:
        base = AffineExpr::mod(it->first.sub, it->first.divisor);
        break;
      default: break;
    }
    e = AffineExpr::add(AffineExpr::mul(base, it->second), e);
  }
  return e;
}

bool LinearForm::sameShape(const LinearForm &o) const {
  return terms == o.terms;
}

std::optional<int64_t> LinearForm::constantDifference(const AffineExpr &a,
                                                      const AffineExpr &b) {
  auto fa = of(a), fb = of(b);
  if (!fa.sameShape(fb)) return std::nullopt;
  return fa.constant - fb.constant;
}

bool LinearForm::isLinear() const {
  for (auto &tc : terms)
    if (tc.first.kind != ExprKind::Dim) return false;
  return true;
}

AffineExpr AffineExpr::canonical() const {
  if (!valid()) return *this;
  return LinearForm::of(*this).toExpr();
}

// ---- AffineMap ----

AffineMap AffineMap::identity(uint32_t n) {
  AffineMap m;
  m.numInputs = n;
  for (uint32_t i = 0; i < n; ++i) m.results.push_back(AffineExpr::dim(i));
  return m;
}

bool AffineMap::isIdentity() const {
  if (results.size() != numInputs) return false;
  for (uint32_t i = 0; i < numInputs; ++i) {
    if (results[i].kind() != ExprKind::Dim || results[i].dimIndex() != i)
      return false;
  }
  return true;
}

std::vector<int64_t> AffineMap::evaluate(std::span<const int64_t> inputs) const {
  if (inputs.size() != numInputs)
    throw std::invalid_argument("affine map input arity mismatch");
  std::vector<int64_t> out;
  out.reserve(results.size());
  for (auto &r : results) out.push_back(r.evaluate(inputs));
  return out;
}

std::string AffineMap::str() const {
  std::string s = "(";
  for (uint32_t i = 0; i < numInputs; ++i) {
    if (i) s += ", ";
    s += "d" + std::to_string(i);
  }
  s += ") -> (";
  for (size_t i = 0; i < results.size(); ++i) {
    if (i) s += ", ";
    s += results[i].str();
  }
  return s + ")";
}

bool AffineMap::operator==(const AffineMap &o) const {
  return numInputs == o.numInputs && results == o.results;
}

AffineMap compose_affine(const AffineMap &outer, const AffineMap &inner) {
  if (outer.numInputs != inner.results.size())
    throw std::invalid_argument(
        "compose_affine: outer inputs (" + std::to_string(outer.numInputs) +
        ") != inner results (" + std::to_string(inner.results.size()) + ")");
  AffineMap out;
  out.numInputs = inner.numInputs;
  for (auto &r : outer.results)
    out.results.push_back(r.replaceDims(inner.results).canonical());
  return out;
}

AffineMap make_partition_layout(std::span<const int64_t> shape,
                                std::span<const DimPartition> parts) {
  if (shape.size() != parts.size())
    throw std::invalid_argument("partition spec rank mismatch");
  uint32_t n = static_cast<uint32_t>(shape.size());
  AffineMap m;
  m.numInputs = n;
  m.results.resize(2 * n);
  for (uint32_t d = 0; d < n; ++d) {
    auto x = AffineExpr::dim(d);
    switch (parts[d].kind) {
      case PartitionKind::None:
        m.results[d] = AffineExpr::constant(0);
        m.results[n + d] = x;
        break;
      case PartitionKind::Cyclic:
        m.results[d] = AffineExpr::mod(x, parts[d].factor);
        m.results[n + d] = AffineExpr::floorDiv(x, parts[d].factor);
        break;
      case PartitionKind::Block: {
        int64_t block = ceil_div(shape[d], parts[d].factor);
        m.results[d] = AffineExpr::floorDiv(x, block);
        m.results[n + d] = AffineExpr::mod(x, block);
        break;
      }
    }
  }
  return m;
}

std::optional<std::vector<DimPartition>> decode_partition_layout(
    const AffineMap &layout, std::span<const int64_t> shape) {
  uint32_t n = static_cast<uint32_t>(shape.size());
  if (layout.numInputs != n || layout.results.size() != 2 * n)
    return std::nullopt;
  std::vector<DimPartition> parts(n);
  for (uint32_t d = 0; d < n; ++d) {
    const auto &p = layout.results[d];
    const auto &q = layout.results[n + d];
    auto isDim = [d](const AffineExpr &e) {
      return e.kind() == ExprKind::Dim && e.dimIndex() == d;
    };
    if (p.isConstant() && p.constantValue() == 0 && isDim(q)) {
      parts[d] = {PartitionKind::None, 1};
      continue;
    }
    if (p.kind() == ExprKind::Mod && isDim(p.lhs()) &&
        q.kind() == ExprKind::FloorDiv && isDim(q.lhs()) &&
        p.rhsConstant() == q.rhsConstant()) {
      parts[d] = {PartitionKind::Cyclic, p.rhsConstant()};
      continue;
    }
    if (p.kind() == ExprKind::FloorDiv && isDim(p.lhs()) &&
        q.kind() == ExprKind::Mod && isDim(q.lhs()) &&
        p.rhsConstant() == q.rhsConstant()) {
      int64_t block = p.rhsConstant();
      parts[d] = {PartitionKind::Block, ceil_div(shape[d], block)};
      continue;
    }
    return std::nullopt;
  }
  return parts;
}

}  // namespace hlsopt
