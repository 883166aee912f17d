#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/mapping.hpp"
#include "drecon/reconcile.hpp"
#include "drecon/topology.hpp"
#include "drecon/tree.hpp"

namespace drecon {

// Replacement of the subtree rooted at `target` of g(P) by a tree on the same
// leaves, with its improvement delta = Y(G[x], S) - XY(P[u], G', S).
struct LocalMove {
  NodeId target = kNoNode;
  PhyloTree replacement;
  int subtree_cost = 0;      // Y(G[x], S)
  int replacement_cost = 0;  // XY(P[u], G', S)
  int delta = 0;
};

struct CorrectionReport {
  CostSpec spec;
  int baseline = 0;     // XY(P, g(P), S)
  int output_cost = 0;  // XY(P, G_opt, S)
  CostSummary baseline_gene_species;
  std::vector<LocalMove> applied;
  std::size_t incongruent = 0;  // nodes examined
  std::size_t candidates = 0;   // Mix trees evaluated
  bool modified = false;
  double milliseconds = 0;

  int total_delta() const {
    int sum = 0;
    for (const auto& m : applied) sum += m.delta;
    return sum;
  }
};

struct Correction {
  PhyloTree gene_tree;
  CorrectionReport report;
};

// g(P): P with every protein leaf renamed to its gene. Requires one protein
// per gene.
inline PhyloTree induced_gene_tree(const PhyloTree& proteins, const LeafMapping& g) {
  require_injective(proteins, g);
  return strip_labels(rename_leaves(proteins, [&](const std::string& p) -> const std::string& { return g.at(p); }));
}

// Duplication nodes whose image differs from the image of one of their
// children.
inline std::vector<NodeId> incongruent_duplications(const PhyloTree& genes, const Reconciliation& r) {
  std::vector<NodeId> out;
  for (NodeId x = 0; x < genes.size(); ++x) {
    if (genes.is_leaf(x) || r.labels[x] != Event::Dup) continue;
    if (r.image[x] != r.image[genes.left(x)] || r.image[x] != r.image[genes.right(x)]) out.push_back(x);
  }
  return out;
}

inline std::vector<NodeId> incongruent_duplications(const PhyloTree& genes, const PhyloTree& species,
                                                    const LeafMapping& s) {
  return incongruent_duplications(genes, reconcile_gene_species(genes, species, s));
}

struct MixCandidate {
  PhyloTree tree;        // on the leaves of G[x]
  NodeId grafted;        // child of x whose subtree moved
  NodeId attached_above; // node of G above which it was grafted
};

// Trees obtained from G[x] by grafting a child subtree whose image differs
// from s(x) onto an edge strictly inside its sibling's subtree on which that
// image is lost.
inline std::vector<MixCandidate> mix_candidates_detailed(const PhyloTree& genes, NodeId x, const Reconciliation& r) {
  std::vector<MixCandidate> out;
  if (genes.is_leaf(x)) return out;
  for (NodeId moved : genes.children(x)) {
    if (r.image[moved] == r.image[x]) continue;
    const NodeId host = genes.sibling(moved);
    const NodeId lost_species = r.image[moved];
    PhyloTree host_tree;
    PhyloTree scion;
    for (NodeId c = host + 1; c < genes.subtree_end(host); ++c) {
      const auto& losses = r.losses[c];
      const bool lost_here = std::any_of(losses.begin(), losses.end(),
                                         [&](const LossEvent& e) { return e.lost == lost_species; });
      if (!lost_here) continue;
      if (host_tree.empty()) {
        host_tree = subtree(genes, host);
        scion = subtree(genes, moved);
      }
      out.push_back(MixCandidate{graft_as_sibling(host_tree, c - host, scion), moved, c});
    }
  }
  return out;
}

inline std::vector<PhyloTree> mix_candidates(const PhyloTree& genes, NodeId x, const Reconciliation& r) {
  std::vector<PhyloTree> out;
  for (auto& c : mix_candidates_detailed(genes, x, r)) out.push_back(std::move(c.tree));
  return out;
}

// Pairwise-incomparable subset of moves maximizing the summed delta, by the
// tree recurrence best(v) = max(delta(v), sum of best over children).
inline std::vector<LocalMove> select_antichain(std::vector<LocalMove> moves, const PhyloTree& genes) {
  std::vector<int> delta(genes.size(), 0);
  std::vector<std::size_t> slot(genes.size(), SIZE_MAX);
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (moves[i].delta <= 0) throw std::invalid_argument("select_antichain: moves must have positive delta");
    slot[moves[i].target] = i;
    delta[moves[i].target] = moves[i].delta;
  }
  std::vector<long long> best(genes.size(), 0);
  std::vector<bool> take(genes.size(), false);
  for (NodeId v = static_cast<NodeId>(genes.size()); v-- > 0;) {
    long long below = 0;
    if (!genes.is_leaf(v)) below = best[genes.left(v)] + best[genes.right(v)];
    if (slot[v] != SIZE_MAX && delta[v] > below) {
      best[v] = delta[v];
      take[v] = true;
    } else {
      best[v] = below;
    }
  }
  std::vector<LocalMove> chosen;
  for (NodeId v = 0; v < genes.size();) {
    if (take[v]) {
      chosen.push_back(std::move(moves[slot[v]]));
      v = genes.subtree_end(v);
    } else {
      ++v;
    }
  }
  return chosen;
}

// Algorithm state for one (P, S, g, s) instance under the one-protein-per-gene
// restriction. References must outlive the object.
class GeneTreeCorrector {
 public:
  GeneTreeCorrector(const PhyloTree& proteins, const PhyloTree& species, const LeafMapping& g, const LeafMapping& s,
                    CostSpec spec)
      : proteins_(proteins), species_(species), spec_(spec), genes_(induced_gene_tree(proteins, g)) {
    for (NodeId x : genes_.leaves()) {
      const std::string& sp = s.at(genes_.name(x));
      auto y = species_.find_leaf(sp);
      if (!y) throw MappingError("mapping target '" + sp + "' of leaf '" + genes_.name(x) + "' is not a leaf of the target tree");
      species_of_gene_.emplace(genes_.name(x), *y);
    }
    for (NodeId p : proteins_.leaves()) gene_of_protein_.emplace(proteins_.name(p), g.at(proteins_.name(p)));
    recon_ = reconcile_gene_species(genes_, species_, species_images(genes_));
    const ExtendedMapping pg = extend_mapping(proteins_, genes_, gene_images(proteins_, genes_));
    protein_node_.assign(genes_.size(), kNoNode);
    for (NodeId u = 0; u < proteins_.size(); ++u) {
      if (protein_node_[pg[u]] != kNoNode) throw std::logic_error("g(P) is not isomorphic to P");
      protein_node_[pg[u]] = u;
    }
  }

  const PhyloTree& gene_tree() const { return genes_; }
  const Reconciliation& reconciliation() const { return recon_; }
  std::vector<NodeId> incongruent() const { return incongruent_duplications(genes_, recon_); }
  std::vector<MixCandidate> mix(NodeId x) const { return mix_candidates_detailed(genes_, x, recon_); }

  // The unique protein node u with g(u) = x.
  NodeId protein_node(NodeId x) const { return protein_node_[x]; }

  // Y(G[x], S), read off the whole-tree reconciliation.
  int subtree_cost(NodeId x) const {
    CostSummary c;
    for (NodeId y = x; y < genes_.subtree_end(x); ++y) {
      if (!genes_.is_leaf(y) && recon_.labels[y] == Event::Dup) ++c.events;
      if (y != x) c.losses += static_cast<int>(recon_.losses[y].size());
    }
    c.mutation = c.events + c.losses;
    return select_cost(c, spec_.y);
  }

  // XY(P[u], G', S) for a tree G' on the leaves of G[x].
  int local_cost(const PhyloTree& protein_subtree, const PhyloTree& candidate) const {
    const CostSummary pg = protein_gene_cost(protein_subtree, candidate, gene_images(protein_subtree, candidate));
    const CostSummary gs = gene_species_cost(candidate, species_, species_images(candidate));
    return combine(spec_, pg, gs);
  }

  // Best Mix replacement at x regardless of the sign of its delta; nullopt
  // when Mix(G[x]) is empty. Ties go to the smaller canonical form.
  std::optional<LocalMove> evaluate(NodeId x, std::size_t* evaluated = nullptr) const {
    auto candidates = mix(x);
    if (evaluated) *evaluated += candidates.size();
    if (candidates.empty()) return std::nullopt;
    const PhyloTree protein_subtree = subtree(proteins_, protein_node(x));
    const PhyloTree original = subtree(genes_, x);
    if (select_cost(protein_gene_cost(protein_subtree, original, gene_images(protein_subtree, original)), spec_.x) != 0)
      throw std::logic_error("X(P[u], g(P)[x]) must be zero");
    std::optional<std::size_t> best;
    int best_cost = 0;
    std::string best_key;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const int cost = local_cost(protein_subtree, candidates[i].tree);
      if (!best || cost < best_cost) {
        best = i;
        best_cost = cost;
        best_key.clear();
      } else if (cost == best_cost) {
        if (best_key.empty()) best_key = canonical_form(candidates[*best].tree);
        std::string key = canonical_form(candidates[i].tree);
        if (key < best_key) {
          best = i;
          best_key = std::move(key);
        }
      }
    }
    LocalMove move;
    move.target = x;
    move.replacement = std::move(candidates[*best].tree);
    move.subtree_cost = subtree_cost(x);
    move.replacement_cost = best_cost;
    move.delta = move.subtree_cost - best_cost;
    return move;
  }

  std::optional<LocalMove> best_move(NodeId x, std::size_t* evaluated = nullptr) const {
    auto move = evaluate(x, evaluated);
    if (!move || move->delta <= 0) return std::nullopt;
    return move;
  }

  // XY(P, G, S) for any gene tree G on the same gene set.
  int total_cost(const PhyloTree& genes) const {
    return combine(spec_, protein_gene_cost(proteins_, genes, gene_images(proteins_, genes)),
                   gene_species_cost(genes, species_, species_images(genes)));
  }

  Correction run() const {
    const auto start = std::chrono::steady_clock::now();
    Correction out;
    CorrectionReport& rep = out.report;
    rep.spec = spec_;
    rep.baseline_gene_species = recon_.cost;
    rep.baseline = select_cost(recon_.cost, spec_.y);

    const auto nodes = incongruent();
    rep.incongruent = nodes.size();
    std::vector<LocalMove> moves;
    for (NodeId x : nodes)
      if (auto m = best_move(x, &rep.candidates)) moves.push_back(std::move(*m));
    rep.applied = select_antichain(std::move(moves), genes_);

    if (rep.applied.empty()) {
      out.gene_tree = genes_;
      rep.output_cost = rep.baseline;
    } else {
      std::vector<std::pair<NodeId, const PhyloTree*>> swaps;
      for (const auto& m : rep.applied) swaps.emplace_back(m.target, &m.replacement);
      out.gene_tree = replace_subtrees(genes_, swaps);
      rep.output_cost = total_cost(out.gene_tree);
      rep.modified = true;
      if (rep.output_cost != rep.baseline - rep.total_delta())
        throw std::logic_error("local replacements did not compose additively");
    }
    rep.milliseconds = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
  }

 private:
  std::vector<NodeId> species_images(const PhyloTree& genes) const {
    std::vector<NodeId> image(genes.size(), kNoNode);
    for (NodeId x : genes.leaves()) image[x] = species_of_gene_.at(genes.name(x));
    return image;
  }

  std::vector<NodeId> gene_images(const PhyloTree& proteins, const PhyloTree& genes) const {
    std::vector<NodeId> image(proteins.size(), kNoNode);
    for (NodeId p : proteins.leaves()) image[p] = genes.leaf(gene_of_protein_.at(proteins.name(p)));
    return image;
  }

  const PhyloTree& proteins_;
  const PhyloTree& species_;
  CostSpec spec_;
  PhyloTree genes_;
  Reconciliation recon_;
  std::unordered_map<std::string, NodeId> species_of_gene_;
  std::unordered_map<std::string, std::string> gene_of_protein_;
  std::vector<NodeId> protein_node_;
};

inline std::optional<LocalMove> best_local_replacement(const PhyloTree& proteins, const PhyloTree& species,
                                                       const LeafMapping& g, const LeafMapping& s, NodeId x,
                                                       CostSpec spec) {
  return GeneTreeCorrector(proteins, species, g, s, spec).best_move(x);
}

// Heuristic gene tree correction (one protein per gene): replaces an antichain
// of incongruent duplication subtrees of g(P) by their best Mix trees.
inline Correction correct_gene_tree(const PhyloTree& proteins, const PhyloTree& species, const LeafMapping& g,
                                    const LeafMapping& s, CostSpec spec) {
  return GeneTreeCorrector(proteins, species, g, s, spec).run();
}

struct ExactSolution {
  PhyloTree gene_tree;
  int cost = 0;
  std::uint64_t evaluated = 0;
};

// Minimizes XY(P, G, S) over every gene tree topology on the genes of P.
// Ties go to the smallest canonical form. Any g is accepted.
inline ExactSolution solve_exact(const PhyloTree& proteins, const PhyloTree& species, const LeafMapping& g,
                                 const LeafMapping& s, CostSpec spec, std::size_t cap = kDefaultTopologyCap) {
  std::map<std::string, NodeId> gene_species;
  for (NodeId p : proteins.leaves()) gene_species.emplace(g.at(proteins.name(p)), kNoNode);
  if (gene_species.size() > cap) throw CapExceeded("exact solver", gene_species.size(), cap);
  std::vector<std::string> genes;
  for (auto& [gene, sp] : gene_species) {
    const std::string& name = s.at(gene);
    auto y = species.find_leaf(name);
    if (!y) throw MappingError("mapping target '" + name + "' of leaf '" + gene + "' is not a leaf of the target tree");
    sp = *y;
    genes.push_back(gene);
  }
  std::vector<std::string> protein_gene(proteins.size());
  for (NodeId p : proteins.leaves()) protein_gene[p] = g.at(proteins.name(p));

  ExactSolution best;
  std::string best_key;
  bool have = false;
  std::vector<NodeId> pg(proteins.size(), kNoNode);
  for_each_topology(
      genes,
      [&](const PhyloTree& t) {
        ++best.evaluated;
        std::vector<NodeId> gs(t.size(), kNoNode);
        for (NodeId x : t.leaves()) gs[x] = gene_species.at(t.name(x));
        for (NodeId p : proteins.leaves()) pg[p] = t.leaf(protein_gene[p]);
        const int cost = combine(spec, protein_gene_cost(proteins, t, pg), gene_species_cost(t, species, gs));
        if (have && cost > best.cost) return;
        std::string key = canonical_form(t);
        if (!have || cost < best.cost || key < best_key) {
          have = true;
          best.cost = cost;
          best.gene_tree = t;
          best_key = std::move(key);
        }
      },
      cap);
  return best;
}

}  // namespace drecon
