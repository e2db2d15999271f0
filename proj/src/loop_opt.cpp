#include "hlsopt/loop_opt.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace hlsopt {

namespace {

Band *bandAt(std::vector<Band> &bands, int index) {
  if (index < 0 || index >= static_cast<int>(bands.size())) return nullptr;
  return &bands[index];
}

bool bandAffine(const Band &band) {
  for (auto *l : band.loops)
    if (!l->affine) return false;
  return true;
}

std::string bandPath(const Function &f, int bandIndex) {
  return f.name + ":band" + std::to_string(bandIndex);
}

bool isStateModifying(const Statement &s) {
  if (s.is<StoreStmt>() || s.is<CallStmt>() || s.is<CopyStmt>() ||
      s.is<LoopStmt>())
    return true;
  if (auto *g = s.as<IfStmt>()) {
    for (auto &c : g->thenBody)
      if (isStateModifying(*c)) return true;
    for (auto &c : g->elseBody)
      if (isStateModifying(*c)) return true;
    return false;
  }
  return false;
}

void collectDefs(const Statement &s, std::set<ValueId> &defs) {
  if (auto *l = s.as<LoadStmt>()) defs.insert(l->result);
  if (auto *a = s.as<ArithStmt>()) defs.insert(a->result);
  if (auto *g = s.as<IfStmt>()) {
    for (auto &c : g->thenBody) collectDefs(*c, defs);
    for (auto &c : g->elseBody) collectDefs(*c, defs);
  }
  if (auto *l = s.as<LoopStmt>()) {
    defs.insert(l->iv);
    for (auto &c : l->body) collectDefs(*c, defs);
  }
}

void collectUses(const Statement &s, std::vector<ValueId> &uses) {
  auto fromExpr = [&](const AffineExpr &e) {
    if (!e.valid()) return;
    std::vector<uint32_t> dims;
    e.collectDims(dims);
    uses.insert(uses.end(), dims.begin(), dims.end());
  };
  if (auto *l = s.as<LoopStmt>()) {
    fromExpr(l->lower);
    fromExpr(l->upper);
    for (auto &c : l->body) collectUses(*c, uses);
    return;
  }
  if (auto *g = s.as<IfStmt>()) {
    for (auto &c : g->conditions) fromExpr(c.expr);
    for (auto &c : g->thenBody) collectUses(*c, uses);
    for (auto &c : g->elseBody) collectUses(*c, uses);
    return;
  }
  if (auto *l = s.as<LoadStmt>()) {
    for (auto &e : l->indices) fromExpr(e);
    return;
  }
  if (auto *st = s.as<StoreStmt>()) {
    for (auto &e : st->indices) fromExpr(e);
    uses.push_back(st->value);
    return;
  }
  if (auto *a = s.as<ArithStmt>()) {
    if (a->op != ArithOp::Const) {
      uses.push_back(a->lhs);
      if (a->op != ArithOp::Neg) uses.push_back(a->rhs);
    }
    return;
  }
  if (auto *c = s.as<CallStmt>()) {
    for (auto v : c->scalars) uses.push_back(v);
    return;
  }
}

// iv value of the last iteration: lower + floor((upper-1-lower)/step)*step
AffineExpr lastIterExpr(const LoopStmt &l) {
  auto span = AffineExpr::sub(AffineExpr::add(l.upper, -1), l.lower);
  return AffineExpr::add(
             l.lower,
             AffineExpr::mul(AffineExpr::floorDiv(span, l.step), l.step))
      .canonical();
}

// Wraps consecutive state-modifying statements under the given guard
// condition, leaving pure statements outside; preserves statement order.
// Affine guards among the statements get the condition conjoined instead of
// being nested.
StmtList guardStateModifying(StmtList stmts, const AffineConstraint &cond) {
  StmtList out;
  IfStmt *openGuard = nullptr;
  for (auto &sp : stmts) {
    if (isStateModifying(*sp)) {
      if (auto *g = sp->as<IfStmt>(); g && g->affine && g->elseBody.empty()) {
        g->conditions.push_back(cond);
        out.push_back(std::move(sp));
        openGuard = nullptr;
        continue;
      }
      if (!openGuard) {
        IfStmt guard;
        guard.affine = true;
        guard.conditions.push_back(cond);
        out.push_back(makeStmt(std::move(guard)));
        openGuard = out.back()->as<IfStmt>();
      }
      openGuard->thenBody.push_back(std::move(sp));
    } else {
      out.push_back(std::move(sp));
      openGuard = nullptr;
    }
  }
  return out;
}

}  // namespace

// ---- perfectize ----

PassResult perfectize(Function &f, int bandIndex) {
  auto bands = collectBands(f);
  Band *band = bandAt(bands, bandIndex);
  if (!band) return PassResult::skipped(f.name, "band-index", "no such band");
  if (!bandAffine(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-affine",
                               "band is not fully affine");
  if (band->depth() == 1 || isPerfect(*band)) return PassResult::unchanged();

  // Legality: in-between statements may not define values consumed elsewhere
  // (the inner subtree or the opposite block) and may not contain calls.
  for (size_t k = 0; k + 1 < band->depth(); ++k) {
    LoopStmt *outer = band->loops[k];
    LoopStmt *inner = band->loops[k + 1];
    std::set<ValueId> preDefs, postDefs;
    std::vector<ValueId> innerUses, preUses, postUses;
    bool beforeInner = true;
    for (auto &s : outer->body) {
      if (s->as<LoopStmt>() == inner) {
        beforeInner = false;
        collectUses(*s, innerUses);
        continue;
      }
      if (s->is<CallStmt>() || s->is<CopyStmt>() || s->is<LoopStmt>())
        return PassResult::skipped(bandPath(f, bandIndex), "perfectize-call",
                                   "in-between statement with opaque side "
                                   "effects cannot be guarded");
      collectDefs(*s, beforeInner ? preDefs : postDefs);
      collectUses(*s, beforeInner ? preUses : postUses);
    }
    auto usedIn = [](const std::set<ValueId> &defs,
                     const std::vector<ValueId> &uses) {
      for (auto v : uses)
        if (defs.count(v)) return true;
      return false;
    };
    if (usedIn(preDefs, innerUses) || usedIn(postDefs, innerUses) ||
        usedIn(preDefs, postUses))
      return PassResult::skipped(
          bandPath(f, bandIndex), "perfectize-escape",
          "in-between statements define values used elsewhere");
  }

  // Statements sink transitively to the innermost body and vanish on
  // zero-trip iterations, so every inner band loop must iterate at least
  // once for all enclosing values.
  {
    std::map<ValueId, std::pair<int64_t, int64_t>> ranges;
    for (size_t k = 0; k < band->depth(); ++k) {
      LoopStmt *l = band->loops[k];
      uint32_t maxDim =
          std::max(l->lower.maxDimPlusOne(), l->upper.maxDimPlusOne());
      std::vector<std::pair<int64_t, int64_t>> dimRanges(maxDim, {0, 0});
      bool rangesKnown = true;
      std::vector<uint32_t> dims;
      l->lower.collectDims(dims);
      l->upper.collectDims(dims);
      for (auto d : dims) {
        auto it = ranges.find(d);
        if (it == ranges.end()) { rangesKnown = false; break; }
        dimRanges[d] = it->second;
      }
      if (!rangesKnown)
        return PassResult::skipped(bandPath(f, bandIndex), "perfectize-trip",
                                   "cannot bound an inner loop's domain");
      auto span =
          AffineExpr::sub(l->upper, l->lower).canonical().range(dimRanges);
      if (k > 0 && span.first < 1)
        return PassResult::skipped(
            bandPath(f, bandIndex), "perfectize-trip",
            "an inner loop may run zero iterations; sinking would drop "
            "statements");
      auto lo = l->lower.range(dimRanges);
      auto up = l->upper.range(dimRanges);
      ranges[l->iv] = {lo.first, up.second - 1};
    }
  }

  // Sink level by level, outermost first.
  for (size_t k = 0; k + 1 < band->depth(); ++k) {
    LoopStmt *outer = band->loops[k];
    LoopStmt *inner = band->loops[k + 1];
    StmtList pre, post;
    StmtPtr innerStmt;
    bool beforeInner = true;
    for (auto &s : outer->body) {
      if (s->as<LoopStmt>() == inner) {
        beforeInner = false;
        innerStmt = std::move(s);
        continue;
      }
      (beforeInner ? pre : post).push_back(std::move(s));
    }
    outer->body.clear();
    if (!pre.empty()) {
      AffineConstraint first{
          AffineExpr::sub(AffineExpr::dim(inner->iv), inner->lower).canonical(),
          true};
      StmtList sunk = guardStateModifying(std::move(pre), first);
      for (auto it = sunk.rbegin(); it != sunk.rend(); ++it)
        inner->body.insert(inner->body.begin(), std::move(*it));
    }
    if (!post.empty()) {
      AffineConstraint last{
          AffineExpr::sub(AffineExpr::dim(inner->iv), lastIterExpr(*inner))
              .canonical(),
          true};
      StmtList sunk = guardStateModifying(std::move(post), last);
      for (auto &sp : sunk) inner->body.push_back(std::move(sp));
    }
    outer->body.push_back(std::move(innerStmt));
  }
  PassResult r;
  r.changed = true;
  return r;
}

// ---- order_opt ----

bool permutationLegal(const DependenceResult &deps,
                      const std::vector<int> &newPosOf) {
  for (auto &d : deps.dependences) {
    std::vector<size_t> carriers;
    for (size_t k = 0; k < d.distance.size() && k < newPosOf.size(); ++k)
      if (!d.distance[k].known || d.distance[k].value != 0)
        carriers.push_back(k);
    if (carriers.empty()) continue;
    size_t first = carriers[0];
    for (auto k : carriers)
      if (newPosOf[k] < newPosOf[first]) first = k;
    if (d.distance[first].known && d.distance[first].value > 0) continue;
    // Otherwise the relative order of all carrying entries must be kept.
    bool ordered = true;
    for (size_t a = 0; a + 1 < carriers.size() && ordered; ++a)
      if (newPosOf[carriers[a]] >= newPosOf[carriers[a + 1]]) ordered = false;
    if (!ordered) return false;
  }
  return true;
}

namespace {

struct LoopHeader {
  ValueId iv;
  AffineExpr lower, upper;
  int64_t step;
  bool affine;
  std::optional<LoopDirective> directive;
};

LoopHeader headerOf(const LoopStmt &l) {
  return {l.iv, l.lower, l.upper, l.step, l.affine, l.directive};
}

void setHeader(LoopStmt &l, const LoopHeader &h) {
  l.iv = h.iv;
  l.lower = h.lower;
  l.upper = h.upper;
  l.step = h.step;
  l.affine = h.affine;
  l.directive = h.directive;
}

// Bounds of every loop must only reference induction variables positioned
// further out after permutation.
bool structurallyLegal(const Band &band, const std::vector<int> &newPosOf) {
  std::map<ValueId, size_t> pos;
  for (size_t k = 0; k < band.loops.size(); ++k) pos[band.loops[k]->iv] = k;
  for (size_t k = 0; k < band.loops.size(); ++k) {
    std::vector<uint32_t> dims;
    band.loops[k]->lower.collectDims(dims);
    band.loops[k]->upper.collectDims(dims);
    for (auto d : dims) {
      auto it = pos.find(d);
      if (it != pos.end() && newPosOf[it->second] >= newPosOf[k]) return false;
    }
  }
  return true;
}

}  // namespace

PassResult order_opt(Function &f, int bandIndex,
                     const std::vector<int> *permMap) {
  auto bands = collectBands(f);
  Band *band = bandAt(bands, bandIndex);
  if (!band) return PassResult::skipped(f.name, "band-index", "no such band");
  size_t m = band->depth();
  if (m == 1) return PassResult::unchanged();
  if (!bandAffine(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-affine",
                               "band is not fully affine");
  if (!isPerfect(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-perfect",
                               "band is not perfect");

  DependenceResult deps;
  try {
    deps = analyze_dependences(f, *band);
  } catch (const AnalysisError &e) {
    return PassResult::skipped(bandPath(f, bandIndex), "order-analysis",
                               e.what());
  }

  std::vector<int> newPosOf(m);
  if (permMap) {
    if (permMap->size() != m)
      return PassResult::skipped(bandPath(f, bandIndex), "order-perm-map",
                                 "perm-map length differs from band depth");
    std::vector<int> seen(m, 0);
    for (auto p : *permMap) {
      if (p < 0 || p >= static_cast<int>(m) || seen[p]++)
        return PassResult::skipped(bandPath(f, bandIndex), "order-perm-map",
                                   "perm-map is not a permutation");
    }
    newPosOf = *permMap;
    if (!structurallyLegal(*band, newPosOf))
      return PassResult::skipped(
          bandPath(f, bandIndex), "order-legality",
          "permutation moves a loop above a bound it depends on");
    if (!permutationLegal(deps, newPosOf))
      return PassResult::skipped(bandPath(f, bandIndex), "order-legality",
                                 "permutation violates a dependence");
  } else {
    // score: dependence-carrying loops outward, larger carried distance
    // first, ties by original position
    struct Key {
      bool carries = false;
      int64_t dist = 0;
      int orig = 0;
      bool operator>(const Key &o) const {
        if (carries != o.carries) return carries;
        if (dist != o.dist) return dist > o.dist;
        return orig < o.orig;
      }
    };
    std::vector<Key> keys(m);
    for (size_t k = 0; k < m; ++k) keys[k].orig = static_cast<int>(k);
    for (auto &d : deps.dependences) {
      if (auto c = d.carryingLoop()) {
        keys[*c].carries = true;
        if (d.distance[*c].known)
          keys[*c].dist = std::max(keys[*c].dist, d.distance[*c].value);
      }
    }
    std::vector<int> arrangement(m);
    std::iota(arrangement.begin(), arrangement.end(), 0);
    std::vector<int> best;
    auto better = [&](const std::vector<int> &a, const std::vector<int> &b) {
      for (size_t p = 0; p < m; ++p) {
        if (keys[a[p]] > keys[b[p]]) return true;
        if (keys[b[p]] > keys[a[p]]) return false;
      }
      return false;
    };
    std::vector<int> cur = arrangement;
    std::sort(cur.begin(), cur.end());
    do {
      std::vector<int> posOf(m);
      for (size_t p = 0; p < m; ++p) posOf[cur[p]] = static_cast<int>(p);
      if (!structurallyLegal(*band, posOf)) continue;
      if (!permutationLegal(deps, posOf)) continue;
      if (best.empty() || better(cur, best)) best = cur;
    } while (std::next_permutation(cur.begin(), cur.end()));
    if (best.empty())
      return PassResult::skipped(bandPath(f, bandIndex), "order-legality",
                                 "no legal loop order found");
    for (size_t p = 0; p < m; ++p) newPosOf[best[p]] = static_cast<int>(p);
  }

  bool identity = true;
  for (size_t k = 0; k < m; ++k)
    if (newPosOf[k] != static_cast<int>(k)) identity = false;
  if (identity) return PassResult::unchanged();

  std::vector<LoopHeader> headers;
  headers.reserve(m);
  for (auto *l : band->loops) headers.push_back(headerOf(*l));
  for (size_t k = 0; k < m; ++k)
    setHeader(*band->loops[newPosOf[k]], headers[k]);
  PassResult r;
  r.changed = true;
  return r;
}

// ---- remove_variable_bound ----

PassResult remove_variable_bound(Function &f, int bandIndex) {
  auto bands = collectBands(f);
  Band *band = bandAt(bands, bandIndex);
  if (!band) return PassResult::skipped(f.name, "band-index", "no such band");
  if (!bandAffine(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-affine",
                               "band is not fully affine");

  PassResult result;
  for (size_t k = 0; k < band->depth(); ++k) {
    LoopStmt *l = band->loops[k];
    bool varLower = !l->lower.isConstant();
    bool varUpper = !l->upper.isConstant();
    if (!varLower && !varUpper) continue;

    // ranges of enclosing band induction variables (inclusive)
    std::map<ValueId, std::pair<int64_t, int64_t>> ranges;
    bool enclosingConstant = true;
    for (size_t j = 0; j < k; ++j) {
      LoopStmt *o = band->loops[j];
      if (!o->lower.isConstant() || !o->upper.isConstant()) {
        enclosingConstant = false;
        break;
      }
      int64_t lo = o->lower.constantValue(), up = o->upper.constantValue();
      if (up <= lo) { ranges[o->iv] = {lo, lo}; continue; }
      int64_t last = lo + floor_div(up - 1 - lo, o->step) * o->step;
      ranges[o->iv] = {lo, last};
    }
    if (!enclosingConstant) {
      result.diags.push_back({bandPath(f, bandIndex), "rvb-enclosing",
                              "enclosing loop still has variable bounds"});
      continue;
    }
    std::vector<uint32_t> dims;
    l->lower.collectDims(dims);
    l->upper.collectDims(dims);
    bool onlyIvs = true;
    uint32_t maxDim = 0;
    for (auto d : dims) {
      if (!ranges.count(d)) onlyIvs = false;
      maxDim = std::max(maxDim, d + 1);
    }
    if (!onlyIvs) {
      result.diags.push_back(
          {bandPath(f, bandIndex), "rvb-non-induction",
           "bound depends on values other than enclosing induction variables"});
      continue;
    }
    std::vector<std::pair<int64_t, int64_t>> dimRanges(maxDim, {0, 0});
    for (auto &[v, r] : ranges)
      if (v < maxDim) dimRanges[v] = r;

    AffineExpr origLower = l->lower, origUpper = l->upper;
    std::vector<AffineConstraint> constraints;
    if (varLower) {
      int64_t lo = l->lower.range(dimRanges).first;
      l->lower = AffineExpr::constant(lo);
      constraints.push_back(
          {AffineExpr::sub(AffineExpr::dim(l->iv), origLower).canonical(),
           false});
      if (l->step > 1)
        constraints.push_back(
            {AffineExpr::mod(
                 AffineExpr::sub(AffineExpr::dim(l->iv), origLower), l->step)
                 .canonical(),
             true});
    }
    if (varUpper) {
      int64_t up = l->upper.range(dimRanges).second;
      l->upper = AffineExpr::constant(up);
      constraints.push_back(
          {AffineExpr::sub(AffineExpr::sub(origUpper, AffineExpr::constant(1)),
                           AffineExpr::dim(l->iv))
               .canonical(),
           false});
    }

    // guard placement: innermost body when the remaining chain is perfect
    LoopStmt *target = l;
    bool perfectBelow = true;
    for (size_t j = k; j + 1 < band->depth(); ++j) {
      if (band->loops[j]->body.size() != 1 ||
          !band->loops[j]->body[0]->is<LoopStmt>())
        perfectBelow = false;
    }
    if (perfectBelow) target = band->loops.back();

    if (target->body.size() == 1) {
      if (auto *g = target->body[0]->as<IfStmt>();
          g && g->affine && g->elseBody.empty()) {
        for (auto &c : constraints) g->conditions.push_back(c);
        result.changed = true;
        continue;
      }
    }
    IfStmt guard;
    guard.affine = true;
    guard.conditions = constraints;
    guard.thenBody = std::move(target->body);
    target->body.clear();
    target->body.push_back(makeStmt(std::move(guard)));
    result.changed = true;
  }
  return result;
}

// ---- tile ----

PassResult tile(Function &f, int bandIndex, const std::vector<int64_t> &sizes) {
  auto bands = collectBands(f);
  Band *band = bandAt(bands, bandIndex);
  if (!band) return PassResult::skipped(f.name, "band-index", "no such band");
  size_t m = band->depth();
  if (sizes.size() != m)
    return PassResult::skipped(bandPath(f, bandIndex), "tile-sizes",
                               "tile-sizes length differs from band depth");
  for (auto s : sizes)
    if (s < 1)
      return PassResult::skipped(bandPath(f, bandIndex), "tile-sizes",
                                 "tile sizes must be positive");
  if (!bandAffine(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-affine",
                               "band is not fully affine");
  if (!isPerfect(*band))
    return PassResult::skipped(bandPath(f, bandIndex), "band-perfect",
                               "band is not perfect");
  bool allOne = true;
  for (auto s : sizes)
    if (s != 1) allOne = false;
  if (allOne) return PassResult::unchanged();
  for (auto *l : band->loops)
    if (!l->lower.isConstant() || !l->upper.isConstant())
      return PassResult::skipped(bandPath(f, bandIndex), "tile-rectangular",
                                 "band has variable bounds; remove them first");

  DependenceResult deps;
  try {
    deps = analyze_dependences(f, *band);
  } catch (const AnalysisError &e) {
    return PassResult::skipped(bandPath(f, bandIndex), "tile-analysis", e.what());
  }
  // legal iff the band is fully permutable: all distances known non-negative
  for (auto &d : deps.dependences)
    for (auto &c : d.distance)
      if (!c.known || c.value < 0)
        return PassResult::skipped(bandPath(f, bandIndex), "tile-legality",
                                   "dependence forbids tiling this band");

  std::vector<LoopHeader> outerHeaders, innerHeaders;
  std::map<ValueId, AffineExpr> subst;
  std::vector<AffineConstraint> boundary;
  for (size_t k = 0; k < m; ++k) {
    LoopStmt *l = band->loops[k];
    if (sizes[k] == 1) {
      outerHeaders.push_back(headerOf(*l));
      continue;
    }
    int64_t lo = l->lower.constantValue(), up = l->upper.constantValue();
    int64_t trip = up <= lo ? 0 : ceil_div(up - lo, l->step);
    std::string name = l->iv < f.valueNames.size() ? f.valueNames[l->iv] : "v";
    ValueId ivT = f.newValue(ValueKind::Index, name);
    ValueId ivI = f.newValue(ValueKind::Index, name + name);
    LoopHeader tileH{ivT, l->lower, l->upper, l->step * sizes[k], true, {}};
    LoopHeader intraH{ivI, AffineExpr::constant(0),
                      AffineExpr::constant(l->step * sizes[k]), l->step, true,
                      {}};
    outerHeaders.push_back(tileH);
    innerHeaders.push_back(intraH);
    subst[l->iv] =
        AffineExpr::add(AffineExpr::dim(ivT), AffineExpr::dim(ivI));
    if (trip % sizes[k] != 0)
      boundary.push_back(
          {AffineExpr::sub(AffineExpr::constant(up - 1),
                           AffineExpr::add(AffineExpr::dim(ivT),
                                           AffineExpr::dim(ivI)))
               .canonical(),
           false});
  }

  // rewrite the innermost body in place
  StmtList body = std::move(band->inner()->body);
  auto mapFn = [&](ValueId v) {
    auto it = subst.find(v);
    return it != subst.end() ? it->second : AffineExpr();
  };
  walkStmts(body, [&](Statement &s, const std::vector<int> &) {
    if (auto *l = s.as<LoopStmt>()) {
      l->lower = rewriteExpr(l->lower, mapFn);
      l->upper = rewriteExpr(l->upper, mapFn);
    } else if (auto *g = s.as<IfStmt>()) {
      for (auto &c : g->conditions) c.expr = rewriteExpr(c.expr, mapFn);
    } else if (auto *l = s.as<LoadStmt>()) {
      for (auto &e : l->indices) e = rewriteExpr(e, mapFn);
    } else if (auto *st = s.as<StoreStmt>()) {
      for (auto &e : st->indices) e = rewriteExpr(e, mapFn);
    }
    return true;
  });
  if (!boundary.empty()) {
    IfStmt guard;
    guard.affine = true;
    guard.conditions = std::move(boundary);
    guard.thenBody = std::move(body);
    body.clear();
    body.push_back(makeStmt(std::move(guard)));
  }

  // rebuild the nest inside out
  std::vector<LoopHeader> chain = outerHeaders;
  chain.insert(chain.end(), innerHeaders.begin(), innerHeaders.end());
  StmtPtr nest;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    LoopStmt loop;
    setHeader(loop, *it);
    loop.body = std::move(body);
    body.clear();
    nest = makeStmt(std::move(loop));
    body.push_back(std::move(nest));
  }

  // replace the band root in the function body
  for (auto &s : f.body) {
    if (s->as<LoopStmt>() == band->outer()) {
      s = std::move(body.front());
      PassResult r;
      r.changed = true;
      return r;
    }
  }
  return PassResult::skipped(bandPath(f, bandIndex), "tile-root",
                             "band root is not a top-level statement");
}

// ---- unroll ----

PassResult unroll(Function &f, StmtList &parent, size_t index, int64_t factor) {
  if (index >= parent.size() || !parent[index]->is<LoopStmt>())
    return PassResult::skipped(f.name, "unroll-target", "not a loop statement");
  if (factor < 1)
    return PassResult::skipped(f.name, "unroll-factor",
                               "unroll factor must be >= 1");
  if (factor == 1) return PassResult::unchanged();
  LoopStmt *l = parent[index]->as<LoopStmt>();
  auto trip = constantTripCount(*l);
  if (!trip)
    return PassResult::skipped(f.name, "unroll-variable-trip",
                               "loop trip count is not a constant");
  PassResult r;
  r.changed = true;
  int64_t lo = l->lower.constantValue();
  int64_t step = l->step;

  StmtList replacement;
  if (*trip == 0) {
    parent.erase(parent.begin() + index);
    return r;
  }
  if (factor >= *trip) {
    for (int64_t t = 0; t < *trip; ++t) {
      std::map<ValueId, AffineExpr> subst;
      subst[l->iv] = AffineExpr::constant(lo + t * step);
      StmtList clones = cloneRemap(f, f, l->body, subst);
      for (auto &c : clones) replacement.push_back(std::move(c));
    }
  } else {
    int64_t mainIters = *trip / factor;
    std::string name = l->iv < f.valueNames.size() ? f.valueNames[l->iv] : "v";
    LoopStmt main;
    main.iv = f.newValue(ValueKind::Index, name);
    main.lower = AffineExpr::constant(lo);
    main.upper = AffineExpr::constant(lo + mainIters * factor * step);
    main.step = step * factor;
    main.affine = l->affine;
    main.directive = l->directive;
    for (int64_t t = 0; t < factor; ++t) {
      std::map<ValueId, AffineExpr> subst;
      subst[l->iv] =
          AffineExpr::add(AffineExpr::dim(main.iv), t * step).canonical();
      StmtList clones = cloneRemap(f, f, l->body, subst);
      for (auto &c : clones) main.body.push_back(std::move(c));
    }
    replacement.push_back(makeStmt(std::move(main)));
    if (*trip % factor != 0) {
      LoopStmt rem;
      rem.iv = f.newValue(ValueKind::Index, name);
      rem.lower = AffineExpr::constant(lo + mainIters * factor * step);
      rem.upper = l->upper;
      rem.step = step;
      rem.affine = l->affine;
      std::map<ValueId, AffineExpr> subst;
      subst[l->iv] = AffineExpr::dim(rem.iv);
      rem.body = cloneRemap(f, f, l->body, subst);
      replacement.push_back(makeStmt(std::move(rem)));
    }
  }
  parent.erase(parent.begin() + index);
  parent.insert(parent.begin() + index,
                std::make_move_iterator(replacement.begin()),
                std::make_move_iterator(replacement.end()));
  return r;
}

PassResult unroll_innermost(Function &f, int bandIndex, int64_t factor) {
  auto bands = collectBands(f);
  Band *band = bandAt(bands, bandIndex);
  if (!band) return PassResult::skipped(f.name, "band-index", "no such band");
  StmtList *parent = &f.body;
  if (band->depth() > 1) parent = &band->loops[band->depth() - 2]->body;
  for (size_t i = 0; i < parent->size(); ++i)
    if ((*parent)[i]->as<LoopStmt>() == band->inner())
      return unroll(f, *parent, i, factor);
  return PassResult::skipped(f.name, "unroll-target", "innermost loop not found");
}

namespace {

bool checkNestedConstantTrips(const StmtList &body,
                              std::set<ValueId> &allowed) {
  for (auto &sp : body) {
    if (auto *l = sp->as<LoopStmt>()) {
      std::vector<uint32_t> dims;
      l->lower.collectDims(dims);
      l->upper.collectDims(dims);
      for (auto d : dims)
        if (!allowed.count(d)) return false;
      allowed.insert(l->iv);
      if (!checkNestedConstantTrips(l->body, allowed)) return false;
      allowed.erase(l->iv);
    } else if (auto *g = sp->as<IfStmt>()) {
      if (!checkNestedConstantTrips(g->thenBody, allowed)) return false;
      if (!checkNestedConstantTrips(g->elseBody, allowed)) return false;
    }
  }
  return true;
}

// first loop position in a body, descending into guards
std::pair<StmtList *, size_t> findLoop(StmtList &body) {
  for (size_t i = 0; i < body.size(); ++i) {
    if (body[i]->is<LoopStmt>()) return {&body, i};
    if (auto *g = body[i]->as<IfStmt>()) {
      auto r = findLoop(g->thenBody);
      if (r.first) return r;
      r = findLoop(g->elseBody);
      if (r.first) return r;
    }
  }
  return {nullptr, 0};
}

}  // namespace

PassResult fully_unroll_nested(Function &f, StmtList &body) {
  std::set<ValueId> allowed;
  bool ok = true;
  for (auto &sp : body) {
    if (auto *l = sp->as<LoopStmt>()) {
      std::vector<uint32_t> dims;
      l->lower.collectDims(dims);
      l->upper.collectDims(dims);
      if (!dims.empty()) ok = false;
      allowed.insert(l->iv);
      if (!checkNestedConstantTrips(l->body, allowed)) ok = false;
      allowed.erase(l->iv);
    } else if (auto *g = sp->as<IfStmt>()) {
      if (!checkNestedConstantTrips(g->thenBody, allowed)) ok = false;
      if (!checkNestedConstantTrips(g->elseBody, allowed)) ok = false;
    }
  }
  if (!ok)
    return PassResult::skipped(f.name, "unroll-variable-trip",
                               "a nested loop has a non-constant trip count");
  PassResult r;
  for (;;) {
    auto [list, idx] = findLoop(body);
    if (!list) break;
    auto *l = (*list)[idx]->as<LoopStmt>();
    auto trip = constantTripCount(*l);
    if (!trip)
      return PassResult::skipped(f.name, "unroll-variable-trip",
                                 "a nested loop has a non-constant trip count");
    auto u = unroll(f, *list, idx, std::max<int64_t>(*trip, 1));
    if (!u.ok()) return u;
    r.changed = true;
  }
  return r;
}

}  // namespace hlsopt
