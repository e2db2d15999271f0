#ifndef HLSOPT_GRAPH_OPT_HPP
#define HLSOPT_GRAPH_OPT_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsopt/ir.hpp"
#include "hlsopt/verify.hpp"

namespace hlsopt {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataflowNode {
  enum Kind { Proc, Copy } kind = Proc;
  int id = 0;
  std::vector<int> stmts;   // top-level statement indices (Proc)
  std::string copySrc, copyDst;  // Copy
  int level = 0;            // longest-path level in the DAG
  int stage = -1;           // assigned by legalization
};

struct DataflowEdge {
  int producer = 0, consumer = 0;
  std::string buffer;
};

struct DataflowGraph {
  std::vector<DataflowNode> nodes;
  std::vector<DataflowEdge> edges;
  int stageCount = 0;
  bool legalized = false;
  // After copy insertion consumers read the chain's last copy instead of the
  // original buffer: (consumer node, original buffer) -> replacement.
  std::map<std::pair<int, std::string>, std::string> readRenames;
  // Copy buffers to materialize: name -> source array whose type it shares.
  std::map<std::string, std::string> copyBuffers;

  int stageOf(int node) const { return nodes[node].stage; }
};

// One node per top-level loop band / statement run of the function body; an
// edge per buffer written by one node and read by a later one (from its most
// recent writer). Feedback (a later node writing a buffer an earlier node
// reads) and multiple writers of one buffer are rejected.
DataflowGraph extract_dataflow(const Program &p, const Function &f);

// Assigns dataflow stages. Conservative mode merges nodes into stages until
// every cross-stage buffer spans exactly adjacent stages and all consumers of
// a buffer share one stage. Aggressive mode (insertCopy) inserts copy nodes
// on short paths until all paths have equal length, one stage per level.
DataflowGraph legalize_dataflow(const DataflowGraph &g, bool insertCopy);

// Outlines groups of at least minGran adjacent stages into sub-functions
// called from the top function, which gets the dataflow directive. Buffers
// crossing group boundaries become arguments of the sub-functions.
Program split_function(const Program &p, const std::string &func,
                       const DataflowGraph &g, int minGran);

// extract + legalize + split on the top function, in place.
PassResult apply_dataflow(Program &p, bool insertCopy, int minGran);

std::string dataflowDot(const DataflowGraph &g);

}  // namespace hlsopt

#endif
