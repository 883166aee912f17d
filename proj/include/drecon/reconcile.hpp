#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/mapping.hpp"
#include "drecon/tree.hpp"

namespace drecon {

// Image in the target tree of every node of the source tree.
using ExtendedMapping = std::vector<NodeId>;

// Leaves map as given; an internal node maps to the lca of its leaves' images.
inline ExtendedMapping extend_mapping(const PhyloTree& src, const PhyloTree& dst, std::span<const NodeId> leaf_images) {
  if (leaf_images.size() != src.size()) throw std::invalid_argument("extend_mapping: image vector size mismatch");
  ExtendedMapping image(leaf_images.begin(), leaf_images.end());
  for (NodeId x = static_cast<NodeId>(src.size()); x-- > 0;) {
    if (src.is_leaf(x)) {
      if (image[x] >= dst.size()) throw MappingError("leaf '" + src.name(x) + "' has no image");
    } else {
      image[x] = dst.lca(image[src.left(x)], image[src.right(x)]);
    }
  }
  return image;
}

inline ExtendedMapping extend_mapping(const PhyloTree& src, const PhyloTree& dst, const LeafMapping& m) {
  return extend_mapping(src, dst, resolve_leaf_images(src, dst, m));
}

enum class ReconciliationKind { GeneSpecies, ProteinGene };

struct LossEvent {
  NodeId lost;  // node of the target tree whose lineage disappears
  bool extra;   // the additional loss under a Dup/Creat parent
  bool operator==(const LossEvent&) const = default;
};

// events is D (gene-species) or C (protein-gene); mutation = events + losses.
struct CostSummary {
  int events = 0;
  int losses = 0;
  int mutation = 0;
  bool operator==(const CostSummary&) const = default;
};

struct Reconciliation {
  ReconciliationKind kind = ReconciliationKind::GeneSpecies;
  ExtendedMapping image;
  std::vector<Event> labels;                 // per source node; None on leaves
  std::vector<std::vector<LossEvent>> losses;  // losses[y]: edge (parent(y), y), in time order
  CostSummary cost;
};

namespace detail {

// Target-tree nodes strictly between top and bottom, listed top-down.
inline void append_path_interior(const PhyloTree& dst, NodeId top, NodeId bottom, std::vector<LossEvent>& out) {
  const std::size_t mark = out.size();
  for (NodeId z = bottom == top ? top : dst.parent(bottom); z != top; z = dst.parent(z))
    out.push_back(LossEvent{z, false});
  std::reverse(out.begin() + static_cast<std::ptrdiff_t>(mark), out.end());
}

inline int path_interior_count(const PhyloTree& dst, NodeId top, NodeId bottom) {
  return top == bottom ? 0 : static_cast<int>(dst.depth(bottom) - dst.depth(top)) - 1;
}

inline CostSummary summarize(const Reconciliation& r, Event event_label) {
  CostSummary c;
  for (Event e : r.labels) c.events += e == event_label ? 1 : 0;
  for (const auto& edge : r.losses) c.losses += static_cast<int>(edge.size());
  c.mutation = c.events + c.losses;
  return c;
}

}  // namespace detail

// LCA-reconciliation of a gene tree with a species tree: Spec when the node's
// image differs from both children's images, Dup otherwise. Each edge (x, y)
// loses one lineage per species node strictly between s(x) and s(y), preceded
// by an extra loss of s(x) when x is Dup and s(x) != s(y).
inline Reconciliation reconcile_gene_species(const PhyloTree& genes, const PhyloTree& species,
                                             std::span<const NodeId> leaf_images) {
  Reconciliation r;
  r.kind = ReconciliationKind::GeneSpecies;
  r.image = extend_mapping(genes, species, leaf_images);
  r.labels.assign(genes.size(), Event::None);
  r.losses.assign(genes.size(), {});
  for (NodeId x = 0; x < genes.size(); ++x) {
    if (genes.is_leaf(x)) continue;
    const NodeId sx = r.image[x];
    const bool spec = sx != r.image[genes.left(x)] && sx != r.image[genes.right(x)];
    r.labels[x] = spec ? Event::Spec : Event::Dup;
    for (NodeId y : genes.children(x)) {
      const NodeId sy = r.image[y];
      if (!spec && sx != sy) r.losses[y].push_back(LossEvent{sx, true});
      detail::append_path_interior(species, sx, sy, r.losses[y]);
    }
  }
  r.cost = detail::summarize(r, Event::Dup);
  return r;
}

inline Reconciliation reconcile_gene_species(const PhyloTree& genes, const PhyloTree& species, const LeafMapping& s) {
  return reconcile_gene_species(genes, species, resolve_leaf_images(genes, species, s));
}

// LCA-reconciliation of a protein tree with a gene tree. A node whose image
// differs from both children's images inherits the label of its image in the
// gene tree (Spec or Dup); otherwise it is a creation. Losses as for genes,
// with the extra loss under Creat parents.
inline Reconciliation reconcile_protein_gene(const PhyloTree& proteins, const PhyloTree& genes,
                                             std::span<const NodeId> leaf_images, const Reconciliation& gene_recon) {
  if (gene_recon.kind != ReconciliationKind::GeneSpecies || gene_recon.labels.size() != genes.size())
    throw std::invalid_argument("reconcile_protein_gene: gene labels must come from reconciling this gene tree");
  Reconciliation r;
  r.kind = ReconciliationKind::ProteinGene;
  r.image = extend_mapping(proteins, genes, leaf_images);
  r.labels.assign(proteins.size(), Event::None);
  r.losses.assign(proteins.size(), {});
  for (NodeId x = 0; x < proteins.size(); ++x) {
    if (proteins.is_leaf(x)) continue;
    const NodeId gx = r.image[x];
    const bool distinct = gx != r.image[proteins.left(x)] && gx != r.image[proteins.right(x)];
    r.labels[x] = distinct ? gene_recon.labels[gx] : Event::Creat;
    for (NodeId y : proteins.children(x)) {
      const NodeId gy = r.image[y];
      if (r.labels[x] == Event::Creat && gx != gy) r.losses[y].push_back(LossEvent{gx, true});
      detail::append_path_interior(genes, gx, gy, r.losses[y]);
    }
  }
  r.cost = detail::summarize(r, Event::Creat);
  return r;
}

inline Reconciliation reconcile_protein_gene(const PhyloTree& proteins, const PhyloTree& genes, const LeafMapping& g,
                                             const Reconciliation& gene_recon) {
  return reconcile_protein_gene(proteins, genes, resolve_leaf_images(proteins, genes, g), gene_recon);
}

// Count-only evaluation of the costs, without materializing loss lists. The
// Spec/Dup distinction on protein nodes does not affect C, L or M, so both
// layers share the same counting rule: an event wherever a node's image equals
// a child's image, plus the path and extra losses.
namespace detail {
inline CostSummary count_costs(const PhyloTree& src, const PhyloTree& dst, std::span<const NodeId> leaf_images) {
  const ExtendedMapping image = extend_mapping(src, dst, leaf_images);
  CostSummary c;
  for (NodeId x = 0; x < src.size(); ++x) {
    if (src.is_leaf(x)) continue;
    const NodeId ix = image[x];
    const NodeId il = image[src.left(x)];
    const NodeId ir = image[src.right(x)];
    const bool event = ix == il || ix == ir;
    c.events += event;
    c.losses += path_interior_count(dst, ix, il) + path_interior_count(dst, ix, ir);
    if (event) c.losses += (ix != il) + (ix != ir);
  }
  c.mutation = c.events + c.losses;
  return c;
}
}  // namespace detail

inline CostSummary gene_species_cost(const PhyloTree& genes, const PhyloTree& species,
                                     std::span<const NodeId> leaf_images) {
  return detail::count_costs(genes, species, leaf_images);
}

inline CostSummary protein_gene_cost(const PhyloTree& proteins, const PhyloTree& genes,
                                     std::span<const NodeId> leaf_images) {
  return detail::count_costs(proteins, genes, leaf_images);
}

// ---------------------------------------------------------------------------
// Double costs XY(P, G, S) = X(P, G) + Y(G, S).

enum class ProteinCost : std::uint8_t { Creation, Loss, Mutation };
enum class GeneCost : std::uint8_t { Duplication, Loss, Mutation };

struct CostSpec {
  ProteinCost x = ProteinCost::Mutation;
  GeneCost y = GeneCost::Mutation;

  bool operator==(const CostSpec&) const = default;

  std::string code() const {
    constexpr char xs[] = {'C', 'L', 'M'};
    constexpr char ys[] = {'D', 'L', 'M'};
    return {xs[static_cast<int>(x)], ys[static_cast<int>(y)]};
  }

  // Accepts the nine codes CD, CL, CM, LD, LL, LM, MD, ML, MM.
  static CostSpec parse(std::string_view code) {
    if (code.size() == 2) {
      CostSpec s;
      bool ok = true;
      switch (code[0]) {
        case 'C': s.x = ProteinCost::Creation; break;
        case 'L': s.x = ProteinCost::Loss; break;
        case 'M': s.x = ProteinCost::Mutation; break;
        default: ok = false;
      }
      switch (code[1]) {
        case 'D': s.y = GeneCost::Duplication; break;
        case 'L': s.y = GeneCost::Loss; break;
        case 'M': s.y = GeneCost::Mutation; break;
        default: ok = false;
      }
      if (ok) return s;
    }
    throw std::invalid_argument("unknown cost spec '" + std::string(code) + "' (expected one of CD CL CM LD LL LM MD ML MM)");
  }

  static std::array<CostSpec, 9> all() {
    std::array<CostSpec, 9> out;
    int i = 0;
    for (auto x : {ProteinCost::Creation, ProteinCost::Loss, ProteinCost::Mutation})
      for (auto y : {GeneCost::Duplication, GeneCost::Loss, GeneCost::Mutation}) out[i++] = CostSpec{x, y};
    return out;
  }
};

inline int select_cost(const CostSummary& c, ProteinCost x) {
  switch (x) {
    case ProteinCost::Creation: return c.events;
    case ProteinCost::Loss: return c.losses;
    case ProteinCost::Mutation: return c.mutation;
  }
  return 0;
}

inline int select_cost(const CostSummary& c, GeneCost y) {
  switch (y) {
    case GeneCost::Duplication: return c.events;
    case GeneCost::Loss: return c.losses;
    case GeneCost::Mutation: return c.mutation;
  }
  return 0;
}

inline int combine(const CostSpec& spec, const CostSummary& protein_gene, const CostSummary& gene_species) {
  return select_cost(protein_gene, spec.x) + select_cost(gene_species, spec.y);
}

struct DoubleReconciliation {
  Reconciliation gene_species;
  Reconciliation protein_gene;
  int total(const CostSpec& spec) const { return combine(spec, protein_gene.cost, gene_species.cost); }
};

inline DoubleReconciliation double_reconcile(const PhyloTree& proteins, const PhyloTree& genes,
                                             const PhyloTree& species, const LeafMapping& g, const LeafMapping& s) {
  DoubleReconciliation d;
  d.gene_species = reconcile_gene_species(genes, species, s);
  d.protein_gene = reconcile_protein_gene(proteins, genes, g, d.gene_species);
  return d;
}

inline int double_cost(const PhyloTree& proteins, const PhyloTree& genes, const PhyloTree& species,
                       const LeafMapping& g, const LeafMapping& s, const CostSpec& spec) {
  return double_reconcile(proteins, genes, species, g, s).total(spec);
}

// ---------------------------------------------------------------------------
// Homology.

enum class Homology { Ortholog, Paralog, OrthoOrtholog, ParaOrtholog };

inline std::string_view to_string(Homology h) {
  switch (h) {
    case Homology::Ortholog: return "ortholog";
    case Homology::Paralog: return "paralog";
    case Homology::OrthoOrtholog: return "ortho-ortholog";
    case Homology::ParaOrtholog: return "para-ortholog";
  }
  return "";
}

struct HomologyRelation {
  std::string first;
  std::string second;
  Homology relation;
};

// One relation per unordered leaf pair, decided by the label of their lca.
// Genes: Spec -> ortholog, Dup -> paralog. Proteins: Spec -> ortho-ortholog,
// Dup -> para-ortholog, Creat -> paralog.
inline std::vector<HomologyRelation> classify_pairs(const PhyloTree& t, const Reconciliation& recon) {
  if (recon.labels.size() != t.size()) throw std::invalid_argument("classify_pairs: reconciliation of another tree");
  std::vector<HomologyRelation> out;
  const auto leaves = t.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      const Event e = recon.labels[t.lca(leaves[i], leaves[j])];
      Homology h;
      if (recon.kind == ReconciliationKind::GeneSpecies)
        h = e == Event::Spec ? Homology::Ortholog : Homology::Paralog;
      else
        h = e == Event::Spec ? Homology::OrthoOrtholog : e == Event::Dup ? Homology::ParaOrtholog : Homology::Paralog;
      out.push_back(HomologyRelation{t.name(leaves[i]), t.name(leaves[j]), h});
    }
  }
  return out;
}

// Internal nodes whose two child subtrees contain proteins of a common gene.
inline std::vector<NodeId> apparent_creations(const PhyloTree& proteins, const LeafMapping& g) {
  std::vector<std::vector<std::string_view>> genes(proteins.size());
  std::vector<NodeId> out;
  for (NodeId x = static_cast<NodeId>(proteins.size()); x-- > 0;) {
    if (proteins.is_leaf(x)) {
      genes[x] = {g.at(proteins.name(x))};
      continue;
    }
    auto& a = genes[proteins.left(x)];
    auto& b = genes[proteins.right(x)];
    std::vector<std::string_view> merged;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
    if (merged.size() < a.size() + b.size()) out.push_back(x);
    genes[x] = std::move(merged);
    std::vector<std::string_view>().swap(a);
    std::vector<std::string_view>().swap(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Reads (P, G, g) as a gene-species instance (G' = P, S' = G, s' = g), under
// which C, L, M of the protein-gene reconciliation equal D, L, M.
struct RelabeledInstance {
  PhyloTree gene_tree;
  PhyloTree species_tree;
  LeafMapping mapping;
};

inline RelabeledInstance relabel_for_gene_species(const PhyloTree& proteins, const PhyloTree& genes,
                                                  const LeafMapping& g) {
  return RelabeledInstance{strip_labels(proteins), strip_labels(genes), g};
}

inline PhyloTree labeled_tree(const PhyloTree& t, const Reconciliation& recon) {
  return with_labels(t, recon.labels);
}

}  // namespace drecon
