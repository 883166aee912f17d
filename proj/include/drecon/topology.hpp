#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/tree.hpp"

namespace drecon {

inline constexpr std::size_t kDefaultTopologyCap = 8;

// (2n-3)!! rooted binary topologies on n >= 2 labeled leaves; 1 for n = 1.
inline std::uint64_t rooted_topology_count(std::size_t n) {
  std::uint64_t count = 1;
  if (n < 3) return count;
  for (std::uint64_t k = 3; k <= 2 * n - 3; k += 2) count *= k;
  return count;
}

namespace detail {

// Mutable scratch tree used while inserting leaves one at a time. Leaf i is
// node i; internal nodes follow.
struct ScratchTree {
  std::vector<std::uint32_t> parent, left, right;
  std::uint32_t root = 0;

  static constexpr std::uint32_t kNone = UINT32_MAX;

  PhyloTree freeze(const std::vector<std::string>& names) const {
    PhyloTree::Builder b;
    std::vector<NodeId> handle(parent.size(), kNoNode);
    // Postorder via explicit stack.
    std::vector<std::pair<std::uint32_t, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [x, expanded] = stack.back();
      stack.pop_back();
      if (left[x] == kNone) {
        handle[x] = b.add_leaf(names[x]);
      } else if (expanded) {
        handle[x] = b.join(handle[left[x]], handle[right[x]]);
      } else {
        stack.emplace_back(x, true);
        stack.emplace_back(right[x], false);
        stack.emplace_back(left[x], false);
      }
    }
    return b.build(handle[root]);
  }
};

template <class Visit>
void insert_leaves(ScratchTree& t, std::size_t next, const std::vector<std::string>& names, Visit& visit) {
  if (next == names.size()) {
    visit(t.freeze(names));
    return;
  }
  // Candidate edges: above every node currently in the tree.
  std::vector<std::uint32_t> targets;
  for (std::uint32_t x = 0; x < t.parent.size(); ++x)
    if (x < next || x >= names.size()) targets.push_back(x);
  for (std::uint32_t target : targets) {
    const auto joint = static_cast<std::uint32_t>(t.parent.size());
    const std::uint32_t above = t.parent[target];
    t.parent.push_back(above);
    t.left.push_back(target);
    t.right.push_back(static_cast<std::uint32_t>(next));
    t.parent[target] = joint;
    t.parent[next] = joint;
    const std::uint32_t old_root = t.root;
    if (above == ScratchTree::kNone) {
      t.root = joint;
    } else if (t.left[above] == target) {
      t.left[above] = joint;
    } else {
      t.right[above] = joint;
    }

    insert_leaves(t, next + 1, names, visit);

    if (above == ScratchTree::kNone) {
      t.root = old_root;
    } else if (t.left[above] == joint) {
      t.left[above] = target;
    } else {
      t.right[above] = target;
    }
    t.parent[target] = above;
    t.parent[next] = ScratchTree::kNone;
    t.parent.pop_back();
    t.left.pop_back();
    t.right.pop_back();
  }
}

}  // namespace detail

// Calls visit(const PhyloTree&) once per rooted binary topology on the given
// leaf names, by inserting leaves one at a time on every edge.
template <class Visit>
void for_each_topology(const std::vector<std::string>& names, Visit&& visit,
                       std::size_t cap = kDefaultTopologyCap) {
  if (names.empty()) throw std::invalid_argument("topology enumeration needs at least one leaf");
  if (names.size() > cap) throw CapExceeded("topology enumeration", names.size(), cap);
  detail::ScratchTree t;
  const std::size_t n = names.size();
  t.parent.assign(n, detail::ScratchTree::kNone);
  t.left.assign(n, detail::ScratchTree::kNone);
  t.right.assign(n, detail::ScratchTree::kNone);
  t.root = 0;
  detail::insert_leaves(t, 1, names, visit);
}

inline std::vector<PhyloTree> enumerate_topologies(const std::vector<std::string>& names,
                                                   std::size_t cap = kDefaultTopologyCap) {
  std::vector<PhyloTree> out;
  out.reserve(static_cast<std::size_t>(names.size() <= cap ? rooted_topology_count(names.size()) : 0));
  for_each_topology(names, [&](const PhyloTree& t) { out.push_back(t); }, cap);
  return out;
}

}  // namespace drecon
