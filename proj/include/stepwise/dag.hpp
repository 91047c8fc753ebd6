#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stepwise/error.hpp"
#include "stepwise/state.hpp"

namespace stepwise {

using NodeId = std::size_t;

enum class NodeStatus { Open, Error, ProofFinished };
enum class EdgeKind { Tree, Back };

inline std::string_view to_string(NodeStatus s) {
  switch (s) {
  case NodeStatus::Open: return "open";
  case NodeStatus::Error: return "error";
  case NodeStatus::ProofFinished: return "finished";
  }
  return "open";
}

inline std::string_view to_string(EdgeKind k) { return k == EdgeKind::Tree ? "tree" : "back"; }

struct SearchNode {
  NodeId id = 0;
  std::optional<ProofState> state; // empty for terminals
  NodeStatus status = NodeStatus::Open;
  std::optional<ErrorKind> error;
  std::string message;
  double score = 0.0;
  int depth = 0;
  std::optional<std::size_t> expansion_order;
  // expansion_order of the expansion that created this node; empty for the root
  std::optional<std::size_t> created_by;
  // dropped from the frontier by the early-abort rule
  bool discarded = false;
};

struct SearchEdge {
  NodeId from = 0;
  NodeId to = 0;
  ProofStep step;
  double beam_prob = 0.0;
  EdgeKind kind = EdgeKind::Tree;
};

struct ChildInsert {
  NodeId node = 0;
  EdgeKind kind = EdgeKind::Tree;
  bool created = true;
};

// score(child) = logprob + score(parent)
inline double compute_score(double parent_score, double logprob) { return logprob + parent_score; }

// The per-theorem search structure. Nodes are identified by insertion index.
// Non-terminal nodes are unique per canonical key; an edge into an existing
// node is a Back edge unless it would close a cycle, in which case the step
// becomes a cycle-pruned error terminal.
class SearchDag {
public:
  explicit SearchDag(ProofState root) {
    SearchNode n;
    n.id = 0;
    n.depth = 0;
    n.score = 0.0;
    key_index_.emplace(root.key(), 0);
    n.state = std::move(root);
    push_node(std::move(n));
  }

  NodeId root() const { return 0; }
  const SearchNode& node(NodeId id) const {
    check(id);
    return nodes_[id];
  }
  const std::vector<SearchNode>& nodes() const { return nodes_; }
  const std::vector<SearchEdge>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t expansions() const { return next_expansion_order_; }

  std::optional<NodeId> find(const StateKey& key) const {
    auto it = key_index_.find(key);
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<std::size_t>& out_edges(NodeId id) const {
    check(id);
    return out_[id];
  }

  // Index of the unique Tree edge entering id, if any.
  std::optional<std::size_t> tree_parent_edge(NodeId id) const {
    check(id);
    return tree_in_[id];
  }

  std::size_t mark_expanded(NodeId id) {
    check(id);
    auto& n = nodes_[id];
    if (n.status != NodeStatus::Open) throw DagError("cannot expand a terminal node");
    if (n.expansion_order) throw DagError("node already expanded");
    n.expansion_order = next_expansion_order_++;
    return *n.expansion_order;
  }

  void mark_discarded(NodeId id) {
    check(id);
    nodes_[id].discarded = true;
  }

  ChildInsert add_child(NodeId parent, const ProofStep& step, double logprob,
                        const StepResult& result,
                        std::optional<double> score_override = std::nullopt) {
    check(parent);
    if (nodes_[parent].status != NodeStatus::Open)
      throw DagError("parent node " + std::to_string(parent) + " is not open");
    if (logprob > 0.0) throw DagError("logprob must be <= 0");
    const SearchNode& p = nodes_[parent];
    SearchNode child;
    child.score = score_override ? *score_override : compute_score(p.score, logprob);
    child.depth = p.depth + 1;
    child.created_by = p.expansion_order;

    if (const auto* ns = std::get_if<NewState>(&result)) {
      if (auto existing = find(ns->state.key())) {
        if (*existing == parent || reaches(*existing, parent)) {
          child.status = NodeStatus::Error;
          child.error = ErrorKind::CyclePruned;
          child.message = "step returns to an ancestor state";
          return {add_terminal(parent, step, logprob, std::move(child)), EdgeKind::Tree, true};
        }
        add_edge(parent, *existing, step, logprob, EdgeKind::Back);
        return {*existing, EdgeKind::Back, false};
      }
      child.status = NodeStatus::Open;
      key_index_.emplace(ns->state.key(), nodes_.size());
      child.state = ns->state;
      return {add_terminal(parent, step, logprob, std::move(child)), EdgeKind::Tree, true};
    }
    if (is_finished(result)) {
      child.status = NodeStatus::ProofFinished;
    } else {
      const auto f = failure_of(result);
      child.status = NodeStatus::Error;
      child.error = f->kind;
      child.message = f->message;
    }
    return {add_terminal(parent, step, logprob, std::move(child)), EdgeKind::Tree, true};
  }

  // True when a directed path from -> ... -> to exists.
  bool reaches(NodeId from, NodeId to) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
      const NodeId cur = stack.back();
      stack.pop_back();
      if (cur == to) return true;
      if (seen[cur]) continue;
      seen[cur] = 1;
      for (std::size_t e : out_[cur]) stack.push_back(edges_[e].to);
    }
    return false;
  }

  // Rebuilds a DAG from serialized parts (see viz.hpp). Validates structure.
  static SearchDag from_parts(std::vector<SearchNode> nodes, std::vector<SearchEdge> edges) {
    if (nodes.empty() || !nodes[0].state) throw DagError("dag has no root state");
    SearchDag dag(*nodes[0].state);
    dag.nodes_.clear();
    dag.out_.clear();
    dag.tree_in_.clear();
    dag.key_index_.clear();
    dag.next_expansion_order_ = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].id != i) throw DagError("node ids must be dense and ordered");
      if (nodes[i].state && nodes[i].status == NodeStatus::Open)
        dag.key_index_.emplace(nodes[i].state->key(), i);
      if (nodes[i].expansion_order)
        dag.next_expansion_order_ = std::max(dag.next_expansion_order_, *nodes[i].expansion_order + 1);
      dag.push_node(std::move(nodes[i]));
    }
    for (auto& e : edges) {
      dag.check(e.from);
      dag.check(e.to);
      dag.add_edge(e.from, e.to, e.step, e.beam_prob, e.kind);
    }
    return dag;
  }

private:
  void check(NodeId id) const {
    if (id >= nodes_.size()) throw DagError("unknown node id " + std::to_string(id));
  }

  void push_node(SearchNode n) {
    nodes_.push_back(std::move(n));
    out_.emplace_back();
    tree_in_.emplace_back();
  }

  NodeId add_terminal(NodeId parent, const ProofStep& step, double logprob, SearchNode child) {
    const NodeId id = nodes_.size();
    child.id = id;
    push_node(std::move(child));
    add_edge(parent, id, step, logprob, EdgeKind::Tree);
    return id;
  }

  void add_edge(NodeId from, NodeId to, const ProofStep& step, double logprob, EdgeKind kind) {
    if (kind == EdgeKind::Tree) {
      if (tree_in_[to]) throw DagError("node has two tree parents");
      tree_in_[to] = edges_.size();
    }
    out_[from].push_back(edges_.size());
    edges_.push_back(SearchEdge{from, to, step, logprob, kind});
  }

  std::vector<SearchNode> nodes_;
  std::vector<SearchEdge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::optional<std::size_t>> tree_in_;
  std::unordered_map<StateKey, NodeId, StateKeyHash> key_index_;
  std::size_t next_expansion_order_ = 0;
};

// Kahn's algorithm over the full edge set.
inline bool is_acyclic(const SearchDag& dag) {
  std::vector<std::size_t> indeg(dag.size(), 0);
  for (const auto& e : dag.edges()) ++indeg[e.to];
  std::vector<NodeId> ready;
  for (NodeId i = 0; i < dag.size(); ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const NodeId cur = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t e : dag.out_edges(cur))
      if (--indeg[dag.edges()[e].to] == 0) ready.push_back(dag.edges()[e].to);
  }
  return visited == dag.size();
}

// Step labels along the Tree-edge path root -> finish.
inline std::vector<ProofStep> extract_proof(const SearchDag& dag, NodeId finish) {
  if (dag.node(finish).status != NodeStatus::ProofFinished)
    throw DagError("node " + std::to_string(finish) + " is not ProofFinished");
  std::vector<ProofStep> steps;
  NodeId cur = finish;
  while (cur != dag.root()) {
    const auto e = dag.tree_parent_edge(cur);
    if (!e) throw DagError("no tree path from root to node " + std::to_string(finish));
    steps.push_back(dag.edges()[*e].step);
    cur = dag.edges()[*e].from;
    if (steps.size() > dag.size()) throw DagError("tree path does not terminate");
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

} // namespace stepwise
