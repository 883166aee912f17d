#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "drecon/error.hpp"

namespace drecon {

// Event tag carried by an internal node. Leaves always hold None.
enum class Event : std::uint8_t { None, Spec, Dup, Creat };

inline std::string_view to_string(Event e) {
  switch (e) {
    case Event::Spec: return "Spec";
    case Event::Dup: return "Dup";
    case Event::Creat: return "Creat";
    case Event::None: break;
  }
  return "";
}

inline std::optional<Event> event_from_string(std::string_view text) {
  if (text == "Spec") return Event::Spec;
  if (text == "Dup") return Event::Dup;
  if (text == "Creat") return Event::Creat;
  return std::nullopt;
}

// Node handle, valid only for the tree that issued it. Nodes are numbered in
// preorder (left child first), so the root is 0 and the subtree of x is the
// contiguous id range [x, subtree_end(x)).
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

class UnknownLeaf : public Error {
 public:
  explicit UnknownLeaf(std::string_view name)
      : Error("unknown leaf '" + std::string(name) + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Rooted binary tree with uniquely named leaves and optional event labels on
// internal nodes. Immutable once built; edits produce new trees. Safe to read
// from several threads.
class PhyloTree {
 public:
  class Builder;

  // Empty tree. Only useful as a placeholder; every operation except
  // empty()/size() requires a built tree.
  PhyloTree() = default;

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }

  NodeId root() const { return 0; }
  NodeId parent(NodeId x) const { return nodes_[x].parent; }
  NodeId left(NodeId x) const { return nodes_[x].left; }
  NodeId right(NodeId x) const { return nodes_[x].right; }
  std::array<NodeId, 2> children(NodeId x) const { return {nodes_[x].left, nodes_[x].right}; }
  NodeId sibling(NodeId x) const {
    const NodeId p = parent(x);
    return left(p) == x ? right(p) : left(p);
  }
  bool is_leaf(NodeId x) const { return nodes_[x].left == kNoNode; }
  bool is_root(NodeId x) const { return x == 0; }

  const std::string& name(NodeId x) const { return nodes_[x].name; }
  Event label(NodeId x) const { return nodes_[x].label; }
  std::uint32_t depth(NodeId x) const { return nodes_[x].depth; }

  NodeId subtree_end(NodeId x) const { return x + nodes_[x].subtree_size; }
  std::size_t subtree_size(NodeId x) const { return nodes_[x].subtree_size; }

  // True when a is b or an ancestor of b.
  bool is_ancestor(NodeId a, NodeId b) const { return a <= b && b < subtree_end(a); }

  // Leaves in left-to-right order.
  std::span<const NodeId> leaves() const { return leaves_; }

  std::optional<NodeId> find_leaf(std::string_view name) const {
    auto it = leaf_index_.find(std::string(name));
    if (it == leaf_index_.end()) return std::nullopt;
    return it->second;
  }

  NodeId leaf(std::string_view name) const {
    if (auto x = find_leaf(name)) return *x;
    throw UnknownLeaf(name);
  }

  // O(1) after the sparse table built at construction: for preorder ids
  // a < b the lca is the parent of the shallowest node in (a, b].
  NodeId lca(NodeId a, NodeId b) const {
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    const std::size_t lo = a + 1;
    const std::size_t len = b - a;
    const int level = std::bit_width(len) - 1;
    const NodeId m1 = sparse_[level * nodes_.size() + lo];
    const NodeId m2 = sparse_[level * nodes_.size() + (b + 1 - (std::size_t{1} << level))];
    const NodeId shallow = nodes_[m1].depth <= nodes_[m2].depth ? m1 : m2;
    return nodes_[shallow].parent;
  }

  NodeId lca(std::span<const NodeId> xs) const {
    if (xs.empty()) throw std::invalid_argument("lca of an empty node set");
    NodeId acc = xs.front();
    for (NodeId x : xs.subspan(1)) acc = lca(acc, x);
    return acc;
  }

  std::vector<std::string> leaf_names() const {
    std::vector<std::string> out;
    out.reserve(leaves_.size());
    for (NodeId x : leaves_) out.push_back(nodes_[x].name);
    return out;
  }

  // Sorted leaf names below x.
  std::vector<std::string> cluster(NodeId x) const {
    std::vector<std::string> out;
    for (NodeId y = x; y < subtree_end(x); ++y)
      if (is_leaf(y)) out.push_back(nodes_[y].name);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t count_label(Event e) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [e](const Node& n) { return n.label == e; }));
  }

 private:
  struct Node {
    NodeId parent = kNoNode;
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    std::uint32_t subtree_size = 1;
    std::uint32_t depth = 0;
    Event label = Event::None;
    std::string name;
  };

  void index() {
    leaves_.clear();
    leaf_index_.clear();
    leaf_index_.reserve(nodes_.size());
    for (NodeId x = 0; x < nodes_.size(); ++x) {
      if (is_leaf(x)) {
        leaves_.push_back(x);
        leaf_index_.emplace(nodes_[x].name, x);
      }
    }
    const std::size_t n = nodes_.size();
    const int levels = std::bit_width(n);
    sparse_.assign(static_cast<std::size_t>(levels) * n, 0);
    for (NodeId x = 0; x < n; ++x) sparse_[x] = x;
    for (int k = 1; k < levels; ++k) {
      const std::size_t half = std::size_t{1} << (k - 1);
      for (std::size_t i = 0; i + (std::size_t{1} << k) <= n; ++i) {
        const NodeId a = sparse_[(k - 1) * n + i];
        const NodeId b = sparse_[(k - 1) * n + i + half];
        sparse_[k * n + i] = nodes_[a].depth <= nodes_[b].depth ? a : b;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<NodeId> leaves_;
  std::unordered_map<std::string, NodeId> leaf_index_;
  std::vector<NodeId> sparse_;
};

// Accumulates leaves and joins bottom-up, then freezes them into a
// PhyloTree renumbered in preorder.
class PhyloTree::Builder {
 public:
  NodeId add_leaf(std::string name) {
    if (name.empty()) throw ConsistencyError("empty leaf name");
    protos_.push_back(Proto{.name = std::move(name)});
    return static_cast<NodeId>(protos_.size() - 1);
  }

  NodeId join(NodeId left, NodeId right, Event label = Event::None) {
    if (left >= protos_.size() || right >= protos_.size() || left == right)
      throw std::logic_error("join: invalid child handles");
    if (protos_[left].parent != kNoNode || protos_[right].parent != kNoNode)
      throw std::logic_error("join: child already attached");
    const auto id = static_cast<NodeId>(protos_.size());
    protos_.push_back(Proto{.left = left, .right = right, .label = label, .name = {}});
    protos_[left].parent = id;
    protos_[right].parent = id;
    return id;
  }

  std::size_t size() const { return protos_.size(); }

  PhyloTree build(NodeId root) const {
    if (root >= protos_.size() || protos_[root].parent != kNoNode)
      throw std::logic_error("build: root must be an unattached node");
    PhyloTree t;
    std::vector<std::pair<NodeId, NodeId>> stack{{root, kNoNode}};
    while (!stack.empty()) {
      auto [proto, parent] = stack.back();
      stack.pop_back();
      const auto id = static_cast<NodeId>(t.nodes_.size());
      const Proto& p = protos_[proto];
      Node node;
      node.parent = parent;
      node.label = p.left == kNoNode ? Event::None : p.label;
      node.name = p.left == kNoNode ? p.name : std::string();
      if (parent != kNoNode) {
        node.depth = t.nodes_[parent].depth + 1;
        if (t.nodes_[parent].left == kNoNode)
          t.nodes_[parent].left = id;
        else
          t.nodes_[parent].right = id;
      }
      t.nodes_.push_back(std::move(node));
      if (p.left != kNoNode) {
        stack.emplace_back(p.right, id);
        stack.emplace_back(p.left, id);
      }
    }
    for (NodeId x = static_cast<NodeId>(t.nodes_.size()); x-- > 1;)
      t.nodes_[t.nodes_[x].parent].subtree_size += t.nodes_[x].subtree_size;
    t.index();
    if (t.leaf_index_.size() != t.leaves_.size()) {
      std::vector<std::string> names = t.leaf_names();
      std::sort(names.begin(), names.end());
      auto dup = std::adjacent_find(names.begin(), names.end());
      throw ConsistencyError("duplicate leaf name '" + *dup + "'");
    }
    return t;
  }

 private:
  struct Proto {
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    NodeId parent = kNoNode;
    Event label = Event::None;
    std::string name;
  };
  std::vector<Proto> protos_;
};

// ---------------------------------------------------------------------------
// Structural helpers. All return new trees.

// Copies t[x] into b and returns the handle of its root.
inline NodeId copy_subtree(PhyloTree::Builder& b, const PhyloTree& t, NodeId x) {
  const NodeId end = t.subtree_end(x);
  std::vector<NodeId> handle(end - x);
  for (NodeId y = end; y-- > x;) {
    handle[y - x] = t.is_leaf(y) ? b.add_leaf(t.name(y))
                                 : b.join(handle[t.left(y) - x], handle[t.right(y) - x], t.label(y));
  }
  return handle[0];
}

inline PhyloTree subtree(const PhyloTree& t, NodeId x) {
  PhyloTree::Builder b;
  return b.build(copy_subtree(b, t, x));
}

inline PhyloTree leaf_tree(std::string name) {
  PhyloTree::Builder b;
  return b.build(b.add_leaf(std::move(name)));
}

inline PhyloTree join_trees(const PhyloTree& left, const PhyloTree& right, Event label = Event::None) {
  PhyloTree::Builder b;
  const NodeId l = copy_subtree(b, left, left.root());
  const NodeId r = copy_subtree(b, right, right.root());
  return b.build(b.join(l, r, label));
}

// host with a new unlabeled node inserted on the edge above `target`, whose
// children are scion (first) and host[target].
inline PhyloTree graft_as_sibling(const PhyloTree& host, NodeId target, const PhyloTree& scion) {
  PhyloTree::Builder b;
  std::vector<NodeId> handle(host.size());
  for (NodeId y = static_cast<NodeId>(host.size()); y-- > 0;) {
    handle[y] = host.is_leaf(y) ? b.add_leaf(host.name(y))
                                : b.join(handle[host.left(y)], handle[host.right(y)], host.label(y));
    if (y == target) handle[y] = b.join(copy_subtree(b, scion, scion.root()), handle[y]);
  }
  return b.build(handle[0]);
}

// Copy of t where each listed subtree t[x] is swapped for the given tree.
// The listed nodes must be pairwise incomparable.
inline PhyloTree replace_subtrees(const PhyloTree& t,
                                  std::span<const std::pair<NodeId, const PhyloTree*>> replacements) {
  std::vector<const PhyloTree*> at(t.size(), nullptr);
  for (const auto& [x, tree] : replacements) at[x] = tree;
  PhyloTree::Builder b;
  std::vector<NodeId> handle(t.size(), kNoNode);
  // Walk in preorder so a replaced node's descendants can be skipped.
  std::vector<NodeId> order;
  for (NodeId y = 0; y < t.size();) {
    order.push_back(y);
    y = at[y] ? t.subtree_end(y) : y + 1;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId y = *it;
    if (at[y])
      handle[y] = copy_subtree(b, *at[y], at[y]->root());
    else if (t.is_leaf(y))
      handle[y] = b.add_leaf(t.name(y));
    else
      handle[y] = b.join(handle[t.left(y)], handle[t.right(y)], t.label(y));
  }
  return b.build(handle[0]);
}

// Same shape, leaves renamed through fn(old name), labels kept.
template <class Fn>
PhyloTree rename_leaves(const PhyloTree& t, Fn&& fn) {
  PhyloTree::Builder b;
  std::vector<NodeId> handle(t.size());
  for (NodeId y = static_cast<NodeId>(t.size()); y-- > 0;) {
    handle[y] = t.is_leaf(y) ? b.add_leaf(std::string(fn(t.name(y))))
                             : b.join(handle[t.left(y)], handle[t.right(y)], t.label(y));
  }
  return b.build(handle[0]);
}

// Same shape with per-node labels replaced (labels[x] for node x of t).
inline PhyloTree with_labels(const PhyloTree& t, std::span<const Event> labels) {
  PhyloTree::Builder b;
  std::vector<NodeId> handle(t.size());
  for (NodeId y = static_cast<NodeId>(t.size()); y-- > 0;) {
    handle[y] = t.is_leaf(y) ? b.add_leaf(t.name(y))
                             : b.join(handle[t.left(y)], handle[t.right(y)], labels[y]);
  }
  return b.build(handle[0]);
}

inline PhyloTree strip_labels(const PhyloTree& t) {
  return with_labels(t, std::vector<Event>(t.size(), Event::None));
}

// Keeps only the Creat labels.
inline PhyloTree creation_labels_only(const PhyloTree& t) {
  std::vector<Event> labels(t.size(), Event::None);
  for (NodeId x = 0; x < t.size(); ++x)
    if (t.label(x) == Event::Creat) labels[x] = Event::Creat;
  return with_labels(t, labels);
}

// t restricted to the leaves flagged in keep (indexed by NodeId; non-leaf
// entries ignored). Unary nodes are suppressed; surviving nodes keep their
// labels. The root of the result corresponds to the lca of the kept leaves.
inline PhyloTree restrict_to(const PhyloTree& t, const std::vector<bool>& keep) {
  PhyloTree::Builder b;
  std::vector<NodeId> handle(t.size(), kNoNode);
  for (NodeId y = static_cast<NodeId>(t.size()); y-- > 0;) {
    if (t.is_leaf(y)) {
      if (keep[y]) handle[y] = b.add_leaf(t.name(y));
      continue;
    }
    const NodeId l = handle[t.left(y)];
    const NodeId r = handle[t.right(y)];
    if (l != kNoNode && r != kNoNode)
      handle[y] = b.join(l, r, t.label(y));
    else
      handle[y] = l != kNoNode ? l : r;
  }
  if (handle[0] == kNoNode) throw std::invalid_argument("restriction to an empty leaf set");
  return b.build(handle[0]);
}

template <class Names>
std::vector<bool> leaf_mask(const PhyloTree& t, const Names& names) {
  std::vector<bool> keep(t.size(), false);
  for (const auto& n : names) keep[t.leaf(n)] = true;
  return keep;
}

template <class Names>
PhyloTree restrict_to_names(const PhyloTree& t, const Names& names) {
  return restrict_to(t, leaf_mask(t, names));
}

template <class Names>
NodeId lca_of_names(const PhyloTree& t, const Names& names) {
  std::vector<NodeId> xs;
  for (const auto& n : names) xs.push_back(t.leaf(n));
  return t.lca(xs);
}

enum class LabelPolicy { Include, Ignore };

// Order-independent encoding: equal strings iff the trees are isomorphic as
// leaf-labeled rooted trees (with equal event labels under Include).
inline std::string canonical_form(const PhyloTree& t, LabelPolicy labels = LabelPolicy::Include) {
  if (t.empty()) return {};
  std::vector<std::string> enc(t.size());
  for (NodeId y = static_cast<NodeId>(t.size()); y-- > 0;) {
    if (t.is_leaf(y)) {
      enc[y] = t.name(y);
      continue;
    }
    std::string& a = enc[t.left(y)];
    std::string& c = enc[t.right(y)];
    const bool swap = c < a;
    std::string& first = swap ? c : a;
    std::string& second = swap ? a : c;
    std::string s;
    s.reserve(first.size() + second.size() + 8);
    s += '(';
    s += first;
    s += ',';
    s += second;
    s += ')';
    if (labels == LabelPolicy::Include) s += to_string(t.label(y));
    enc[y] = std::move(s);
    std::string().swap(a);
    std::string().swap(c);
  }
  return std::move(enc[0]);
}

// Set of clusters (sorted leaf-name lists) of the nodes carrying label e.
inline std::vector<std::vector<std::string>> labeled_clusters(const PhyloTree& t, Event e) {
  std::vector<std::vector<std::string>> out;
  for (NodeId x = 0; x < t.size(); ++x)
    if (!t.is_leaf(x) && t.label(x) == e) out.push_back(t.cluster(x));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace drecon
