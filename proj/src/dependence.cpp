#include "hlsopt/dependence.hpp"

#include <map>
#include <unordered_map>

namespace hlsopt {

std::string depKindName(DepKind k) {
  switch (k) {
    case DepKind::Flow: return "flow";
    case DepKind::Anti: return "anti";
    case DepKind::Output: return "output";
  }
  return "?";
}

namespace {

struct Collector {
  const Function &f;
  const Band &band;
  std::vector<BandAccess> accesses;
  std::vector<const Statement *> accessStmts;

  void collect(const StmtList &body, int depth, std::vector<int> &path) {
    for (int i = 0; i < static_cast<int>(body.size()); ++i) {
      path.push_back(i);
      const Statement &s = *body[i];
      if (auto *l = s.as<LoopStmt>()) {
        if (!l->affine)
          throw AnalysisError("band contains a non-affine loop");
        bool isBandLoop = depth + 1 < static_cast<int>(band.loops.size()) &&
                          band.loops[depth + 1] == l;
        collect(l->body, isBandLoop ? depth + 1 : depth, path);
      } else if (auto *g = s.as<IfStmt>()) {
        if (!g->affine)
          throw AnalysisError("band contains a non-affine guard");
        collect(g->thenBody, depth, path);
        collect(g->elseBody, depth, path);
      } else if (auto *l = s.as<LoadStmt>()) {
        if (!l->affine) throw AnalysisError("band contains a non-affine access");
        accesses.push_back({l->array, false, depth + 1, path});
        accessStmts.push_back(&s);
      } else if (auto *st = s.as<StoreStmt>()) {
        if (!st->affine) throw AnalysisError("band contains a non-affine access");
        accesses.push_back({st->array, true, depth + 1, path});
        accessStmts.push_back(&s);
      } else if (s.is<CallStmt>()) {
        throw AnalysisError("band contains a call; analysis unsupported");
      } else if (s.is<CopyStmt>()) {
        throw AnalysisError("band contains a copy; analysis unsupported");
      }
      path.pop_back();
    }
  }
};

struct PairSummary {
  bool seen = false;
  std::vector<DepDistance> distance;

  void add(std::span<const int64_t> delta) {
    if (!seen) {
      seen = true;
      distance.resize(delta.size());
      for (size_t i = 0; i < delta.size(); ++i)
        distance[i] = {true, delta[i], delta[i], delta[i]};
      return;
    }
    for (size_t i = 0; i < delta.size(); ++i) {
      auto &d = distance[i];
      if (d.known && d.value != delta[i]) d.known = false;
      d.minValue = std::min(d.minValue, delta[i]);
      d.maxValue = std::max(d.maxValue, delta[i]);
    }
  }
};

struct Tracer {
  const Function &f;
  const Band &band;
  const std::vector<const Statement *> &accessStmts;
  uint64_t maxEvents;

  std::vector<int64_t> ienv;
  std::vector<int64_t> iter;  // current band iteration vector
  uint64_t events = 0;

  struct Event {
    int access = -1;
    std::vector<int64_t> iter;  // band prefix at the access's depth
  };
  struct AddrState {
    Event lastStore;
    std::vector<Event> loadsSince;
  };
  // keyed by (array name, flat address)
  std::map<std::pair<std::string, int64_t>, AddrState> state;
  std::map<std::tuple<int, int, DepKind>, PairSummary> pairs;

  std::unordered_map<const Statement *, int> accessIndex;

  Tracer(const Function &fn, const Band &b,
         const std::vector<const Statement *> &stmts, uint64_t cap)
      : f(fn), band(b), accessStmts(stmts), maxEvents(cap) {
    ienv.assign(f.valueKinds.size(), 0);
    for (size_t i = 0; i < stmts.size(); ++i)
      accessIndex[stmts[i]] = static_cast<int>(i);
  }

  int accessIndexOf(const Statement *s) { return accessIndex.at(s); }

  void record(const Statement &s, const std::string &array,
              const std::vector<AffineExpr> &indices, bool isStore) {
    if (++events > maxEvents)
      throw AnalysisError("band iteration domain too large to analyze");
    const auto *t = f.arrayType(array);
    if (!t) throw AnalysisError("unknown array '" + array + "' in band");
    int64_t flat = 0;
    for (size_t d = 0; d < indices.size(); ++d) {
      int64_t v = indices[d].evaluate(ienv);
      flat = flat * t->shape[d] + v;
    }
    int idx = accessIndexOf(&s);
    Event ev{idx, iter};
    auto &st = state[{array, flat}];
    if (isStore) {
      for (auto &ld : st.loadsSince) addPair(ld, ev, DepKind::Anti);
      if (st.lastStore.access >= 0) addPair(st.lastStore, ev, DepKind::Output);
      st.lastStore = ev;
      st.loadsSince.clear();
    } else {
      if (st.lastStore.access >= 0) addPair(st.lastStore, ev, DepKind::Flow);
      st.loadsSince.push_back(ev);
    }
  }

  void addPair(const Event &a, const Event &b, DepKind kind) {
    size_t n = std::min(a.iter.size(), b.iter.size());
    std::vector<int64_t> delta(n);
    for (size_t i = 0; i < n; ++i) delta[i] = b.iter[i] - a.iter[i];
    pairs[{a.access, b.access, kind}].add(delta);
  }

  void run(const StmtList &body, int depth) {
    for (auto &sp : body) {
      const Statement &s = *sp;
      if (auto *l = s.as<LoopStmt>()) {
        bool isBandLoop = depth + 1 < static_cast<int>(band.loops.size()) &&
                          band.loops[depth + 1] == l;
        int64_t lo = l->lower.evaluate(ienv);
        int64_t up = l->upper.evaluate(ienv);
        for (int64_t v = lo; v < up; v += l->step) {
          ienv[l->iv] = v;
          if (isBandLoop) {
            iter.push_back(v);
            run(l->body, depth + 1);
            iter.pop_back();
          } else {
            run(l->body, depth);
          }
        }
      } else if (auto *g = s.as<IfStmt>()) {
        bool taken = true;
        for (auto &c : g->conditions) {
          int64_t v = c.expr.evaluate(ienv);
          if (c.equality ? (v != 0) : (v < 0)) { taken = false; break; }
        }
        run(taken ? g->thenBody : g->elseBody, depth);
      } else if (auto *l = s.as<LoadStmt>()) {
        record(s, l->array, l->indices, false);
      } else if (auto *st = s.as<StoreStmt>()) {
        record(s, st->array, st->indices, true);
      }
      // arith statements carry no address information
    }
  }
};

}  // namespace

DependenceResult analyze_dependences(const Function &f, const Band &band,
                                     uint64_t maxTraceEvents) {
  if (band.loops.empty()) throw AnalysisError("empty band");
  Collector col{f, band};
  std::vector<int> path;
  if (!band.outer()->affine)
    throw AnalysisError("band root is not an affine loop");
  // the root loop's bounds must be constant for enumeration
  if (!band.outer()->lower.isConstant() || !band.outer()->upper.isConstant())
    throw AnalysisError("band root has non-constant bounds");
  col.collect(band.outer()->body, 0, path);

  DependenceResult res;
  res.accesses = col.accesses;

  Tracer tr(f, band, col.accessStmts, maxTraceEvents);
  int64_t lo = band.outer()->lower.constantValue();
  int64_t up = band.outer()->upper.constantValue();
  for (int64_t v = lo; v < up; v += band.outer()->step) {
    tr.ienv[band.outer()->iv] = v;
    tr.iter.assign(1, v);
    tr.run(band.outer()->body, 0);
  }

  for (auto &[key, summary] : tr.pairs) {
    DependenceVector d;
    d.src = std::get<0>(key);
    d.dst = std::get<1>(key);
    d.kind = std::get<2>(key);
    d.distance = summary.distance;
    res.dependences.push_back(std::move(d));
  }
  return res;
}

}  // namespace hlsopt
