#include "hlsopt/graph_opt.hpp"

#include <algorithm>
#include <set>

namespace hlsopt {

namespace {

struct RWSets {
  std::set<std::string> reads, writes;
};

void collectRW(const Statement &s, RWSets &rw) {
  if (auto *l = s.as<LoadStmt>()) { rw.reads.insert(l->array); return; }
  if (auto *st = s.as<StoreStmt>()) { rw.writes.insert(st->array); return; }
  if (auto *c = s.as<CopyStmt>()) {
    rw.reads.insert(c->src);
    rw.writes.insert(c->dst);
    return;
  }
  if (auto *l = s.as<LoopStmt>()) {
    for (auto &b : l->body) collectRW(*b, rw);
    return;
  }
  if (auto *g = s.as<IfStmt>()) {
    for (auto &b : g->thenBody) collectRW(*b, rw);
    for (auto &b : g->elseBody) collectRW(*b, rw);
    return;
  }
  if (s.is<CallStmt>())
    throw GraphError("dataflow extraction on an already split function");
}

}  // namespace

DataflowGraph extract_dataflow(const Program &, const Function &f) {
  DataflowGraph g;
  std::vector<RWSets> rw;

  // group top-level statements: each loop and each copy is its own node,
  // runs of other statements group together
  DataflowNode *open = nullptr;
  for (int i = 0; i < static_cast<int>(f.body.size()); ++i) {
    const Statement &s = *f.body[i];
    if (s.is<LoopStmt>() || s.is<CopyStmt>()) {
      DataflowNode n;
      n.kind = s.is<CopyStmt>() ? DataflowNode::Copy : DataflowNode::Proc;
      n.id = static_cast<int>(g.nodes.size());
      n.stmts.push_back(i);
      if (auto *c = s.as<CopyStmt>()) {
        n.copySrc = c->src;
        n.copyDst = c->dst;
      }
      g.nodes.push_back(n);
      open = nullptr;
    } else {
      if (!open) {
        DataflowNode n;
        n.id = static_cast<int>(g.nodes.size());
        g.nodes.push_back(n);
        open = &g.nodes.back();
      }
      open->stmts.push_back(i);
    }
  }
  rw.resize(g.nodes.size());
  for (size_t n = 0; n < g.nodes.size(); ++n)
    for (int i : g.nodes[n].stmts) collectRW(*f.body[i], rw[n]);

  // single producer rule and feedback detection
  std::map<std::string, std::vector<int>> writers;
  for (size_t n = 0; n < g.nodes.size(); ++n)
    for (auto &a : rw[n].writes) writers[a].push_back(static_cast<int>(n));
  for (auto &[buf, ws] : writers) {
    if (ws.size() > 1)
      throw GraphError("buffer '" + buf + "' has " + std::to_string(ws.size()) +
                       " producer nodes");
    for (size_t n = 0; n < g.nodes.size(); ++n) {
      if (static_cast<int>(n) < ws[0] && rw[n].reads.count(buf) &&
          !rw[n].writes.count(buf))
        throw GraphError("feedback: node " + std::to_string(n) +
                         " reads buffer '" + buf +
                         "' written by later node " + std::to_string(ws[0]));
    }
  }

  for (size_t v = 0; v < g.nodes.size(); ++v) {
    for (auto &a : rw[v].reads) {
      int producer = -1;
      for (size_t u = 0; u < v; ++u)
        if (rw[u].writes.count(a)) producer = static_cast<int>(u);
      if (producer >= 0)
        g.edges.push_back({producer, static_cast<int>(v), a});
    }
  }

  // longest-path levels
  for (auto &n : g.nodes) n.level = 0;
  bool changed = true;
  int iter = 0;
  while (changed) {
    changed = false;
    if (++iter > static_cast<int>(g.nodes.size()) + 1)
      throw GraphError("dataflow graph has a cycle");
    for (auto &e : g.edges) {
      if (g.nodes[e.consumer].level < g.nodes[e.producer].level + 1) {
        g.nodes[e.consumer].level = g.nodes[e.producer].level + 1;
        changed = true;
      }
    }
  }
  return g;
}

namespace {

struct LevelClasses {
  std::vector<int> parent;  // union-find over levels

  explicit LevelClasses(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {  // keep the smaller level as representative
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }
  void uniteRange(int lo, int hi) {
    for (int l = lo; l < hi; ++l) unite(l, l + 1);
  }
};

}  // namespace

DataflowGraph legalize_dataflow(const DataflowGraph &input, bool insertCopy) {
  DataflowGraph g = input;
  if (g.nodes.empty()) throw GraphError("empty dataflow graph");

  if (!insertCopy) {
    int maxLevel = 0;
    for (auto &n : g.nodes) maxLevel = std::max(maxLevel, n.level);
    LevelClasses cls(maxLevel + 1);
    // merge levels until every buffer spans adjacent stages and all
    // consumers of a buffer agree on one stage
    for (bool again = true; again;) {
      again = false;
      auto stageOfLevel = [&](int l) { return cls.find(l); };
      for (auto &e : g.edges) {
        int su = stageOfLevel(g.nodes[e.producer].level);
        int sv = stageOfLevel(g.nodes[e.consumer].level);
        if (sv > su + 1) {
          // the next level after su becomes the consumer's stage
          cls.uniteRange(su + 1, sv);
          again = true;
        }
      }
      // unify consumers, ignoring intra-stage reads
      std::map<std::string, std::vector<int>> consumerStages;
      for (auto &e : g.edges) {
        int su = stageOfLevel(g.nodes[e.producer].level);
        int sv = stageOfLevel(g.nodes[e.consumer].level);
        if (sv != su) consumerStages[e.buffer].push_back(sv);
      }
      for (auto &[buf, stages] : consumerStages) {
        auto [lo, hi] = std::minmax_element(stages.begin(), stages.end());
        if (*lo != *hi) {
          cls.uniteRange(*lo, *hi);
          again = true;
        }
      }
    }
    // renumber stages densely in level order
    std::map<int, int> dense;
    for (int l = 0; l <= maxLevel; ++l) {
      int c = cls.find(l);
      if (!dense.count(c)) {
        int next = static_cast<int>(dense.size());
        dense[c] = next;
      }
    }
    for (auto &n : g.nodes) n.stage = dense[cls.find(n.level)];
    g.stageCount = static_cast<int>(dense.size());
    g.legalized = true;
    return g;
  }

  // aggressive: insert a copy chain per (buffer, skipped level)
  std::map<std::string, std::map<int, std::string>> chain;  // buffer -> level -> name
  std::map<std::string, int> producerLevel;
  std::map<std::string, std::string> producerSrcOf;  // last chain element
  std::vector<DataflowEdge> newEdges;
  for (auto &e : g.edges) producerLevel[e.buffer] = g.nodes[e.producer].level;

  auto edgesSorted = g.edges;
  std::stable_sort(edgesSorted.begin(), edgesSorted.end(),
                   [&](const DataflowEdge &a, const DataflowEdge &b) {
                     if (a.buffer != b.buffer) return a.buffer < b.buffer;
                     return g.nodes[a.consumer].level <
                            g.nodes[b.consumer].level;
                   });
  for (auto &e : edgesSorted) {
    int pl = g.nodes[e.producer].level;
    int cl = g.nodes[e.consumer].level;
    if (cl <= pl + 1) {
      newEdges.push_back(e);
      continue;
    }
    // ensure copies at levels pl+1 .. cl-1
    std::string src = e.buffer;
    int srcNode = e.producer;
    auto &levels = chain[e.buffer];
    for (int l = pl + 1; l < cl; ++l) {
      auto it = levels.find(l);
      if (it == levels.end()) {
        std::string name = e.buffer + "_cp" + std::to_string(l - pl);
        DataflowNode copy;
        copy.kind = DataflowNode::Copy;
        copy.id = static_cast<int>(g.nodes.size());
        copy.level = l;
        copy.copySrc = src;
        copy.copyDst = name;
        g.nodes.push_back(copy);
        g.copyBuffers[name] = e.buffer;
        newEdges.push_back({srcNode, copy.id, src});
        levels[l] = name;
        src = name;
        srcNode = copy.id;
      } else {
        src = it->second;
        // find the copy node producing it
        for (auto &n : g.nodes)
          if (n.kind == DataflowNode::Copy && n.copyDst == src)
            srcNode = n.id;
      }
    }
    g.readRenames[{e.consumer, e.buffer}] = src;
    newEdges.push_back({srcNode, e.consumer, src});
  }
  g.edges = std::move(newEdges);
  int maxLevel = 0;
  for (auto &n : g.nodes) {
    n.stage = n.level;
    maxLevel = std::max(maxLevel, n.level);
  }
  g.stageCount = maxLevel + 1;
  g.legalized = true;
  return g;
}

namespace {

void renameReads(Statement &s, const std::map<std::string, std::string> &ren) {
  if (auto *l = s.as<LoadStmt>()) {
    auto it = ren.find(l->array);
    if (it != ren.end()) l->array = it->second;
    return;
  }
  if (auto *c = s.as<CopyStmt>()) {
    auto it = ren.find(c->src);
    if (it != ren.end()) c->src = it->second;
    return;
  }
  if (auto *l = s.as<LoopStmt>()) {
    for (auto &b : l->body) renameReads(*b, ren);
    return;
  }
  if (auto *g = s.as<IfStmt>()) {
    for (auto &b : g->thenBody) renameReads(*b, ren);
    for (auto &b : g->elseBody) renameReads(*b, ren);
    return;
  }
}

void collectArraysAndScalars(const Statement &s, std::vector<std::string> &arrays,
                             std::vector<ValueId> &scalars) {
  auto addArray = [&](const std::string &a) {
    if (std::find(arrays.begin(), arrays.end(), a) == arrays.end())
      arrays.push_back(a);
  };
  auto addScalarUses = [&](const Statement &st) {
    std::vector<ValueId> uses;
    // reuse the expression walker from loop_opt via a local lambda
    auto fromExpr = [&](const AffineExpr &e) {
      if (!e.valid()) return;
      std::vector<uint32_t> dims;
      e.collectDims(dims);
      uses.insert(uses.end(), dims.begin(), dims.end());
    };
    if (auto *l = st.as<LoopStmt>()) { fromExpr(l->lower); fromExpr(l->upper); }
    if (auto *g = st.as<IfStmt>())
      for (auto &c : g->conditions) fromExpr(c.expr);
    if (auto *l = st.as<LoadStmt>())
      for (auto &e : l->indices) fromExpr(e);
    if (auto *sx = st.as<StoreStmt>()) {
      for (auto &e : sx->indices) fromExpr(e);
      uses.push_back(sx->value);
    }
    if (auto *a = st.as<ArithStmt>()) {
      if (a->op != ArithOp::Const) {
        uses.push_back(a->lhs);
        if (a->op != ArithOp::Neg) uses.push_back(a->rhs);
      }
    }
    for (auto u : uses) scalars.push_back(u);
  };
  addScalarUses(s);
  if (auto *l = s.as<LoadStmt>()) addArray(l->array);
  if (auto *st = s.as<StoreStmt>()) addArray(st->array);
  if (auto *c = s.as<CopyStmt>()) { addArray(c->src); addArray(c->dst); }
  if (auto *l = s.as<LoopStmt>())
    for (auto &b : l->body) collectArraysAndScalars(*b, arrays, scalars);
  if (auto *g = s.as<IfStmt>()) {
    for (auto &b : g->thenBody) collectArraysAndScalars(*b, arrays, scalars);
    for (auto &b : g->elseBody) collectArraysAndScalars(*b, arrays, scalars);
  }
}

}  // namespace

Program split_function(const Program &p, const std::string &func,
                       const DataflowGraph &g, int minGran) {
  if (!g.legalized) throw GraphError("split_function needs a legalized graph");
  if (minGran < 1) throw GraphError("min-gran must be >= 1");
  const Function *fp = p.find(func);
  if (!fp) throw GraphError("no function named '" + func + "'");
  const Function &f = *fp;

  // group stages into chunks of minGran
  std::vector<std::vector<int>> groups;  // group -> stages
  for (int s = 0; s < g.stageCount; s += minGran) {
    std::vector<int> grp;
    for (int t = s; t < std::min(g.stageCount, s + minGran); ++t)
      grp.push_back(t);
    groups.push_back(grp);
  }

  // nodes per group, node order by stage then id
  std::vector<std::vector<int>> groupNodes(groups.size());
  for (auto &n : g.nodes) {
    int grp = n.stage / minGran;
    groupNodes[grp].push_back(n.id);
  }
  for (auto &gn : groupNodes)
    std::sort(gn.begin(), gn.end(), [&](int a, int b) {
      if (g.nodes[a].stage != g.nodes[b].stage)
        return g.nodes[a].stage < g.nodes[b].stage;
      return a < b;
    });

  auto copyTypeOf = [&](const std::string &name) -> MemRefType {
    std::string root = name;
    auto it = g.copyBuffers.find(root);
    if (it != g.copyBuffers.end()) root = it->second;
    const MemRefType *t = f.arrayType(root);
    if (!t) throw GraphError("unknown buffer '" + root + "'");
    return *t;
  };

  Program out;
  out.top = f.name;
  Function top;
  top.name = f.name;
  top.scalars = f.scalars;
  top.arrays = f.arrays;
  top.directive = f.directive;
  top.directive.dataflow = true;
  top.dataKind = f.dataKind;
  top.valueKinds = f.valueKinds;
  top.valueNames = f.valueNames;

  // which group produces / consumes each buffer
  std::map<std::string, int> producerGroup;
  std::map<std::string, std::set<int>> consumerGroups;
  for (size_t grp = 0; grp < groups.size(); ++grp) {
    for (int nid : groupNodes[grp]) {
      const DataflowNode &n = g.nodes[nid];
      RWSets rw;
      if (n.kind == DataflowNode::Copy) {
        std::string src = n.copySrc;
        rw.reads.insert(src);
        rw.writes.insert(n.copyDst);
      } else {
        for (int i : n.stmts) collectRW(*f.body[i], rw);
        // apply read renames
        RWSets renamed;
        for (auto &r : rw.reads) {
          auto it = g.readRenames.find({nid, r});
          renamed.reads.insert(it != g.readRenames.end() ? it->second : r);
        }
        renamed.writes = rw.writes;
        rw = renamed;
      }
      for (auto &w : rw.writes) producerGroup[w] = static_cast<int>(grp);
      for (auto &r : rw.reads)
        consumerGroups[r].insert(static_cast<int>(grp));
    }
  }

  // copy buffers and locals that cross group boundaries live in the top
  std::set<std::string> topLocals;
  auto crossesGroups = [&](const std::string &buf) {
    auto pit = producerGroup.find(buf);
    for (int c : consumerGroups.count(buf) ? consumerGroups[buf] : std::set<int>{})
      if (pit != producerGroup.end() && c != pit->second) return true;
    return false;
  };
  for (auto &l : f.locals)
    if (crossesGroups(l.name)) topLocals.insert(l.name);
  for (auto &[name, root] : g.copyBuffers)
    if (crossesGroups(name)) topLocals.insert(name);
  for (auto &name : topLocals) {
    LocalArray la;
    la.name = name;
    la.type = copyTypeOf(name);
    top.locals.push_back(la);
  }

  std::vector<Function> subs;
  for (size_t grp = 0; grp < groups.size(); ++grp) {
    Function sub;
    sub.name = f.name + "_s" + std::to_string(grp);
    sub.dataKind = f.dataKind;

    // gather this group's statements (renamed reads) in order
    StmtList groupStmts;
    for (int nid : groupNodes[grp]) {
      const DataflowNode &n = g.nodes[nid];
      if (n.kind == DataflowNode::Copy && n.stmts.empty()) {
        CopyStmt c;
        c.src = n.copySrc;
        c.dst = n.copyDst;
        groupStmts.push_back(makeStmt(c));
        continue;
      }
      std::map<std::string, std::string> renames;  // original -> replacement
      for (auto &[key, repl] : g.readRenames)
        if (key.first == nid) renames[key.second] = repl;
      for (int i : n.stmts) {
        StmtPtr s = cloneStmt(*f.body[i]);
        renameReads(*s, renames);
        groupStmts.push_back(std::move(s));
      }
    }

    // touched arrays in first-use order, scalar uses
    std::vector<std::string> arrays;
    std::vector<ValueId> scalarUses;
    for (auto &s : groupStmts) collectArraysAndScalars(*s, arrays, scalarUses);

    // classify arrays: top args and crossing buffers become parameters,
    // group-private buffers become locals
    CallStmt call;
    call.callee = sub.name;
    std::map<ValueId, AffineExpr> subst;
    for (auto &a : arrays) {
      bool isTopArg = f.arrayType(a) && !f.isLocal(a);
      bool crossing = topLocals.count(a) > 0;
      if (isTopArg || crossing) {
        ArrayParam ap;
        ap.name = a;
        ap.type = copyTypeOf(a);
        sub.arrays.push_back(ap);
        call.arrays.push_back(a);
      } else {
        LocalArray la;
        la.name = a;
        la.type = copyTypeOf(a);
        sub.locals.push_back(la);
      }
    }
    // scalar parameters: top-function scalar params used by the group
    std::set<ValueId> used(scalarUses.begin(), scalarUses.end());
    for (auto &sp : f.scalars) {
      if (!used.count(sp.value)) continue;
      ScalarParam nsp;
      nsp.name = sp.name;
      nsp.kind = sp.kind;
      nsp.value = sub.newValue(sp.kind, sp.name);
      sub.scalars.push_back(nsp);
      call.scalars.push_back(sp.value);
      subst[sp.value] = AffineExpr::dim(nsp.value);
    }
    sub.body = cloneRemap(sub, f, groupStmts, subst);
    subs.push_back(std::move(sub));
    top.body.push_back(makeStmt(std::move(call)));
  }

  for (auto &fn : p.functions)
    if (fn.name != f.name) out.functions.push_back(fn.clone());
  for (auto &s : subs) out.functions.push_back(std::move(s));
  out.functions.push_back(std::move(top));
  return out;
}

PassResult apply_dataflow(Program &p, bool insertCopy, int minGran) {
  try {
    Function &top = p.topFunction();
    auto g = extract_dataflow(p, top);
    auto staged = legalize_dataflow(g, insertCopy);
    p = split_function(p, top.name, staged, minGran);
    PassResult r;
    r.changed = true;
    return r;
  } catch (const GraphError &e) {
    return PassResult::skipped(p.top, "dataflow", e.what());
  }
}

std::string dataflowDot(const DataflowGraph &g) {
  std::string s = "digraph dataflow {\n";
  for (auto &n : g.nodes) {
    s += "  n" + std::to_string(n.id) + " [label=\"";
    s += n.kind == DataflowNode::Copy ? "Copy" : "Proc";
    s += std::to_string(n.id);
    if (n.stage >= 0) s += "\\nstage " + std::to_string(n.stage);
    s += "\"";
    if (n.kind == DataflowNode::Copy) s += ", shape=box";
    s += "];\n";
  }
  for (auto &e : g.edges)
    s += "  n" + std::to_string(e.producer) + " -> n" +
         std::to_string(e.consumer) + " [label=\"" + e.buffer + "\"];\n";
  s += "}\n";
  return s;
}

}  // namespace hlsopt
