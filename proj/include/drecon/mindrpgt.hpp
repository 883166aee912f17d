#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/mapping.hpp"
#include "drecon/reconcile.hpp"
#include "drecon/tree.hpp"

namespace drecon {

using SubtreeFamily = std::vector<PhyloTree>;

// Sorted indices into a SubtreeFamily.
using Span = std::vector<std::size_t>;

inline std::map<std::string, Span> compute_spans(const SubtreeFamily& family) {
  std::map<std::string, Span> spans;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (NodeId x : family[i].leaves()) spans[family[i].name(x)].push_back(i);
  return spans;
}

struct SpanClass {
  std::vector<std::string> leaves;  // sorted
  Span span;
  PhyloTree tree;
  bool built = false;
  bool complete = false;  // last built by a creation join, so a clade of P
};

struct SpanPartition {
  std::vector<SpanClass> classes;
};

inline std::string span_to_string(const Span& span) {
  std::string out = "{";
  for (std::size_t k = 0; k < span.size(); ++k) {
    if (k) out += ',';
    out += 'P' + std::to_string(span[k] + 1);
  }
  return out + '}';
}

namespace detail {

inline bool contains(const std::vector<std::string>& sorted, const std::string& name) {
  return std::binary_search(sorted.begin(), sorted.end(), name);
}

// t restricted to the leaves inside (or outside) the sorted name set; empty
// when nothing survives.
inline PhyloTree restrict_by_set(const PhyloTree& t, const std::vector<std::string>& names, bool inside) {
  std::vector<bool> keep(t.size(), false);
  bool any = false;
  for (NodeId x : t.leaves()) {
    keep[x] = contains(names, t.name(x)) == inside;
    any = any || keep[x];
  }
  if (!any) return {};
  return restrict_to(t, keep);
}

inline std::string unlabeled_form(const PhyloTree& t) { return canonical_form(t, LabelPolicy::Ignore); }

// Sorted canonical forms of P_i restricted to L(P_i) - S, over P_i in span.
inline std::vector<std::string> complement_forms(const SubtreeFamily& family, const Span& span,
                                                 const std::vector<std::string>& leaves) {
  std::vector<std::string> out;
  for (std::size_t i : span) out.push_back(unlabeled_form(restrict_by_set(family[i], leaves, false)));
  std::sort(out.begin(), out.end());
  return out;
}

inline bool spans_disjoint(const Span& a, const Span& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return false;
    *i < *j ? ++i : ++j;
  }
  return true;
}

inline Span span_difference(const Span& a, const Span& b) {
  Span out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline std::vector<std::string> merged(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

// Classes of leaves with equal span, ordered by span size then
// lexicographically. Each class tree is the common restriction of the trees
// in its span.
inline SpanPartition span_partition(const SubtreeFamily& family) {
  std::map<Span, std::vector<std::string>> by_span;
  for (auto& [leaf, span] : compute_spans(family)) by_span[span].push_back(leaf);
  std::vector<std::pair<Span, std::vector<std::string>>> ordered(by_span.begin(), by_span.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.first.size() < b.first.size(); });
  SpanPartition part;
  for (auto& [span, leaves] : ordered) {
    SpanClass c;
    c.leaves = std::move(leaves);
    c.span = span;
    std::string form;
    for (std::size_t i : span) {
      PhyloTree r = strip_labels(detail::restrict_by_set(family[i], c.leaves, true));
      std::string f = detail::unlabeled_form(r);
      if (c.tree.empty()) {
        c.tree = std::move(r);
        form = std::move(f);
      } else if (f != form) {
        throw ConsistencyError("subtrees P" + std::to_string(span.front() + 1) + " and P" + std::to_string(i + 1) +
                               " disagree on the leaves {" + c.leaves.front() + ", ...}");
      }
    }
    part.classes.push_back(std::move(c));
  }
  return part;
}

inline bool check_case_a(const SpanClass& u, const SpanClass& v, const SubtreeFamily& family) {
  if (!detail::spans_disjoint(u.span, v.span)) return false;
  return detail::complement_forms(family, u.span, u.leaves) == detail::complement_forms(family, v.span, v.leaves);
}

inline bool check_case_a(std::size_t u, std::size_t v, const SpanPartition& part, const SubtreeFamily& family) {
  return check_case_a(part.classes.at(u), part.classes.at(v), family);
}

struct Assembly {
  PhyloTree tree;
  std::size_t creation_joins = 0;
  std::size_t grafts = 0;
};

namespace detail {

// Node positions of host at which grafting scion as a sibling agrees with
// every input tree on the shared leaves, and keeps each input tree's leaves
// free of the creation joins built so far.
inline std::vector<NodeId> compatible_grafts(const SpanClass& scion, const SpanClass& host,
                                             const SubtreeFamily& family) {
  const std::vector<std::string> leaves = merged(scion.leaves, host.leaves);
  struct Target {
    std::vector<std::string> shared;
    std::string form;
  };
  std::vector<Target> targets;
  for (const auto& tree : family) {
    Target t;
    for (NodeId x : tree.leaves())
      if (contains(leaves, tree.name(x))) t.shared.push_back(tree.name(x));
    if (t.shared.size() < 2) continue;
    std::sort(t.shared.begin(), t.shared.end());
    t.form = unlabeled_form(restrict_by_set(tree, t.shared, true));
    targets.push_back(std::move(t));
  }
  std::vector<NodeId> out;
  for (NodeId pos = 0; pos < host.tree.size(); ++pos) {
    const PhyloTree candidate = graft_as_sibling(host.tree, pos, scion.tree);
    const bool ok = std::all_of(targets.begin(), targets.end(), [&](const Target& t) {
      const PhyloTree r = restrict_by_set(candidate, t.shared, true);
      return r.count_label(Event::Creat) == 0 && unlabeled_form(r) == t.form;
    });
    if (ok) out.push_back(pos);
  }
  return out;
}

}  // namespace detail

// Rebuilds a protein tree from all of its inclusion-maximal creation-free
// subtrees, labeling the creation joins Creat.
inline Assembly assemble_protein_tree_traced(const SubtreeFamily& input) {
  if (input.empty()) throw ConsistencyError("empty subtree family");
  SubtreeFamily family;
  for (const auto& t : input) {
    if (t.empty()) throw ConsistencyError("empty subtree in family");
    family.push_back(strip_labels(t));
  }
  std::vector<SpanClass> q = span_partition(family).classes;
  Assembly out;
  while (q.size() > 1) {
    std::optional<std::pair<std::size_t, std::size_t>> pick;
    for (std::size_t u = 0; u < q.size() && !pick; ++u)
      for (std::size_t v = u + 1; v < q.size() && !pick; ++v)
        if (check_case_a(q[u], q[v], family)) pick.emplace(u, v);

    if (pick) {
      auto [u, v] = *pick;
      const Span removed = q[v].span;
      q[u].tree = join_trees(q[u].tree, q[v].tree, Event::Creat);
      q[u].complete = true;
      for (auto& c : q) c.span = detail::span_difference(c.span, removed);
      ++out.creation_joins;
    } else {
      // Any built class may be grafted onto any class of equal span. Joined
      // classes are clades of P and go first; unbuilt hosts hold the
      // creation-free context and go first. Pairs whose position is not
      // pinned down by the input are skipped.
      auto order = [&](auto first) {
        std::vector<std::size_t> ids(q.size());
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        std::stable_partition(ids.begin(), ids.end(), [&](std::size_t x) { return first(q[x]); });
        return ids;
      };
      const auto scions = order([](const SpanClass& c) { return c.complete; });
      const auto hosts = order([](const SpanClass& c) { return !c.built; });
      std::optional<NodeId> position;
      bool ambiguous = false;
      for (std::size_t a : scions) {
        if (!q[a].built) continue;
        for (std::size_t b : hosts) {
          if (a == b || q[a].span != q[b].span) continue;
          const auto positions = detail::compatible_grafts(q[a], q[b], family);
          if (positions.size() > 1) ambiguous = true;
          if (positions.size() != 1) continue;
          pick.emplace(a, b);
          position = positions.front();
          break;
        }
        if (pick) break;
      }
      if (!pick && ambiguous) throw ConsistencyError("no graft position is uniquely determined");
      if (!pick) throw ConsistencyError("subtrees are not the creation-free subtrees of a single tree");
      auto [a, b] = *pick;
      q[a].tree = graft_as_sibling(q[b].tree, *position, q[a].tree);
      q[a].complete = false;
      ++out.grafts;
    }
    // The merged class keeps the first class's slot and span.
    auto [keep, drop] = *pick;
    q[keep].leaves = detail::merged(q[keep].leaves, q[drop].leaves);
    q[keep].built = true;
    q.erase(q.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  out.tree = std::move(q.front().tree);
  return out;
}

inline PhyloTree assemble_protein_tree(const SubtreeFamily& family) { return assemble_protein_tree_traced(family).tree; }

inline constexpr std::size_t kDefaultCreationCap = 12;

// All inclusion-maximal leaf sets of P with no Creat pairwise lca, each as the
// restriction of P.
inline SubtreeFamily extract_max_creation_free_subtrees(const PhyloTree& proteins,
                                                        std::size_t cap = kDefaultCreationCap) {
  const std::size_t creations = proteins.count_label(Event::Creat);
  if (creations > cap) throw CapExceeded("creation count", creations, cap);
  using Family = std::vector<std::vector<NodeId>>;
  std::vector<Family> fam(proteins.size());
  for (NodeId x = static_cast<NodeId>(proteins.size()); x-- > 0;) {
    if (proteins.is_leaf(x)) {
      fam[x] = {{x}};
      continue;
    }
    Family& l = fam[proteins.left(x)];
    Family& r = fam[proteins.right(x)];
    Family f;
    if (proteins.label(x) == Event::Creat) {
      f = std::move(l);
      f.insert(f.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    } else {
      for (const auto& a : l)
        for (const auto& b : r) {
          auto& u = f.emplace_back();
          std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
        }
    }
    Family().swap(l);
    Family().swap(r);
    fam[x] = std::move(f);
  }
  Family sets = std::move(fam[proteins.root()]);
  Family kept;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < sets.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool sub = std::includes(sets[j].begin(), sets[j].end(), sets[i].begin(), sets[i].end());
      dominated = sub && (sets[i].size() < sets[j].size() || j < i);
    }
    if (!dominated) kept.push_back(sets[i]);
  }
  SubtreeFamily out;
  for (const auto& leaves : kept) {
    std::vector<bool> keep(proteins.size(), false);
    for (NodeId x : leaves) keep[x] = true;
    out.push_back(restrict_to(proteins, keep));
  }
  return out;
}

// Same, after checking that every apparent creation under g is labeled Creat.
inline SubtreeFamily extract_max_creation_free_subtrees(const PhyloTree& proteins, const LeafMapping& g,
                                                        std::size_t cap = kDefaultCreationCap) {
  for (NodeId x : apparent_creations(proteins, g))
    if (proteins.label(x) != Event::Creat)
      throw ConsistencyError("apparent creation node over {" + proteins.cluster(x).front() + ", ...} is not labeled Creat");
  return extract_max_creation_free_subtrees(proteins, cap);
}

struct Lemma1Report {
  bool has_creation = false;
  bool passed = false;
  std::optional<std::pair<std::size_t, std::size_t>> witness;  // class indices
};

// Looks for a class pair of the partition satisfying the four conditions
// expected of two sibling subtrees under a lowest Creat node of P.
inline Lemma1Report check_lemma1(const PhyloTree& proteins, const SubtreeFamily& family, const SpanPartition& part) {
  Lemma1Report rep;
  rep.has_creation = proteins.count_label(Event::Creat) > 0;
  if (!rep.has_creation) {
    rep.passed = true;
    return rep;
  }
  auto complete = [&](const std::vector<std::string>& leaves) -> std::optional<NodeId> {
    const NodeId top = lca_of_names(proteins, leaves);
    if (proteins.subtree_size(top) != 2 * leaves.size() - 1) return std::nullopt;
    return top;
  };
  const auto& cs = part.classes;
  for (std::size_t u = 0; u < cs.size() && !rep.witness; ++u) {
    if (!complete(cs[u].leaves)) continue;
    for (std::size_t v = u + 1; v < cs.size() && !rep.witness; ++v) {
      if (!complete(cs[v].leaves)) continue;
      const auto top = complete(detail::merged(cs[u].leaves, cs[v].leaves));
      if (!top || proteins.label(*top) != Event::Creat) continue;
      bool agree = true;
      for (const SpanClass* c : {&cs[u], &cs[v]}) {
        const std::string expected = detail::unlabeled_form(detail::restrict_by_set(proteins, c->leaves, true));
        for (std::size_t i : c->span)
          agree = agree && detail::unlabeled_form(detail::restrict_by_set(family[i], c->leaves, true)) == expected;
      }
      if (!agree || !detail::spans_disjoint(cs[u].span, cs[v].span)) continue;
      if (detail::complement_forms(family, cs[u].span, cs[u].leaves) !=
          detail::complement_forms(family, cs[v].span, cs[v].leaves))
        continue;
      rep.witness.emplace(u, v);
    }
  }
  rep.passed = rep.witness.has_value();
  return rep;
}

// class<TAB>span<TAB>leaves, one row per class.
inline void write_span_partition_tsv(std::ostream& out, const SpanPartition& part) {
  out << "class\tspan\tleaves\n";
  for (std::size_t k = 0; k < part.classes.size(); ++k) {
    const auto& c = part.classes[k];
    out << 'S' << k + 1 << '\t' << span_to_string(c.span) << '\t';
    for (std::size_t j = 0; j < c.leaves.size(); ++j) out << (j ? "," : "") << c.leaves[j];
    out << '\n';
  }
}

}  // namespace drecon
