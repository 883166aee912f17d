#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/mapping.hpp"
#include "drecon/tree.hpp"

namespace drecon {

struct SimConfig {
  std::size_t species = 5;
  double duplication = 0;   // per gene lineage per species edge
  double loss = 0;          // per gene lineage per species edge
  double creation = 0;      // per protein lineage per gene edge
  double protein_loss = 0;  // per protein lineage per gene edge
  std::uint64_t seed = 1;
  unsigned max_retries = 100;
  bool one_protein_per_gene = false;  // keep one random protein per gene

  void validate() const {
    if (species < 1) throw std::invalid_argument("species count must be at least 1");
    for (double p : {duplication, loss, creation, protein_loss})
      if (!(p >= 0 && p < 1)) throw std::invalid_argument("event probabilities must lie in [0, 1)");
  }
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

// mt19937_64 with distributions spelled out, so draws are identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do r = engine_();
    while (r >= limit);
    return r % n;
  }

  // Number of successes before the first failure.
  std::size_t geometric(double p) {
    std::size_t k = 0;
    while (bernoulli(p)) ++k;
    return k;
  }

 private:
  std::mt19937_64 engine_;
};

// a, b, ..., z, aa, ab, ...
inline std::string species_name(std::size_t index) {
  std::string out;
  for (std::size_t k = index + 1; k > 0; k = (k - 1) / 26) out.insert(out.begin(), static_cast<char>('a' + (k - 1) % 26));
  return out;
}

inline std::string gene_name(const std::string& species, std::size_t index) { return species + std::to_string(index); }

// <gene><j>; <gene>_<j> when j has several digits, keeping the gene
// recoverable from the name.
inline std::string protein_name(const std::string& gene, std::size_t index) {
  return index < 10 ? gene + std::to_string(index) : gene + '_' + std::to_string(index);
}

// Uniform sequential attachment: leaf i is inserted above a uniformly chosen
// node of the current tree.
inline PhyloTree simulate_species_tree(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("species tree needs at least one leaf");
  std::vector<NodeId> parent(n, kNoNode), left(n, kNoNode), right(n, kNoNode);
  NodeId root = 0;
  std::vector<NodeId> present{0};
  for (NodeId leaf = 1; leaf < n; ++leaf) {
    const NodeId target = present[rng.below(present.size())];
    const auto joint = static_cast<NodeId>(parent.size());
    const NodeId above = parent[target];
    parent.push_back(above);
    left.push_back(target);
    right.push_back(leaf);
    parent[target] = joint;
    parent[leaf] = joint;
    if (above == kNoNode)
      root = joint;
    else if (left[above] == target)
      left[above] = joint;
    else
      right[above] = joint;
    present.push_back(leaf);
    present.push_back(joint);
  }
  PhyloTree::Builder b;
  std::vector<NodeId> handle(parent.size(), kNoNode);
  std::vector<std::pair<NodeId, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [x, expanded] = stack.back();
    stack.pop_back();
    if (left[x] == kNoNode) {
      handle[x] = b.add_leaf(species_name(x));
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

inline PhyloTree simulate_species_tree(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_species_tree(n, rng);
}

// A lineage lost on the edge above a host tree node, given by its cluster.
struct TrueLoss {
  std::string host;  // comma-joined leaf names
};

struct GeneSimulation {
  PhyloTree species;  // restricted to the species that kept a gene
  PhyloTree genes;    // with true Spec/Dup labels
  LeafMapping s;
  std::vector<TrueLoss> losses;
};

struct ProteinSimulation {
  PhyloTree proteins;  // with true Spec/Dup/Creat labels
  LeafMapping g;
  std::vector<TrueLoss> losses;
};

namespace detail {

inline std::string cluster_key(const PhyloTree& t, NodeId x) {
  std::string out;
  for (const auto& name : t.cluster(x)) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

// Builder that collapses joins with a missing side.
struct LineageBuilder {
  PhyloTree::Builder b;

  std::optional<NodeId> join(std::optional<NodeId> l, std::optional<NodeId> r, Event e) {
    if (l && r) return b.join(*l, *r, e);
    return l ? l : r;
  }
};

}  // namespace detail

// Gene lineages evolve top-down along S: on every edge (including one above
// the root) a lineage duplicates a geometric number of times, then each copy
// is lost with the loss probability; speciation splits it at S's nodes.
inline GeneSimulation simulate_gene_tree(const PhyloTree& species, const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  for (unsigned attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    detail::LineageBuilder lb;
    std::vector<std::size_t> counter(species.size(), 0);
    std::vector<std::pair<std::string, NodeId>> gene_species;
    std::vector<TrueLoss> losses;

    // One lineage entering the edge above y.
    auto descend = [&](auto&& self, NodeId y) -> std::optional<NodeId> {
      const std::size_t copies = 1 + rng.geometric(cfg.duplication);
      std::vector<std::optional<NodeId>> alive;
      for (std::size_t c = 0; c < copies; ++c) {
        if (rng.bernoulli(cfg.loss)) {
          losses.push_back({detail::cluster_key(species, y)});
          alive.push_back(std::nullopt);
          continue;
        }
        if (species.is_leaf(y)) {
          std::string name = gene_name(species.name(y), ++counter[y]);
          gene_species.emplace_back(name, y);
          alive.push_back(lb.b.add_leaf(std::move(name)));
        } else {
          auto l = self(self, species.left(y));
          auto r = self(self, species.right(y));
          alive.push_back(lb.join(l, r, Event::Spec));
        }
      }
      // Duplications form a caterpillar above the copies.
      std::optional<NodeId> acc = alive.back();
      for (std::size_t c = copies - 1; c-- > 0;) acc = lb.join(alive[c], acc, Event::Dup);
      return acc;
    };

    auto top = descend(descend, species.root());
    if (!top) continue;
    GeneSimulation out;
    out.genes = lb.b.build(*top);
    std::vector<bool> covered(species.size(), false);
    for (auto& [gene, y] : gene_species) {
      covered[y] = true;
      out.s.add(gene, species.name(y));
    }
    out.species = restrict_to(species, covered);
    out.losses = std::move(losses);
    return out;
  }
  throw SimulationError("gene family went extinct in every attempt");
}

inline GeneSimulation simulate_gene_tree(const PhyloTree& species, const SimConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_gene_tree(species, cfg, rng);
}

// Protein lineages evolve top-down along G: on every edge a lineage spawns a
// geometric number of Creat copies, then lineages are lost with the protein
// loss probability, except that the last lineage on an edge always survives.
// At G's internal nodes every lineage splits, taking the node's label.
inline ProteinSimulation simulate_protein_tree(const PhyloTree& genes, const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  detail::LineageBuilder lb;
  std::vector<std::size_t> counter(genes.size(), 0);
  ProteinSimulation out;

  // Lineages entering the edge above x; returns the subtree handle of each.
  auto descend = [&](auto&& self, NodeId x, std::size_t entering) -> std::vector<std::optional<NodeId>> {
    std::vector<std::size_t> copies(entering);
    std::size_t total = 0;
    for (auto& c : copies) total += (c = 1 + rng.geometric(cfg.creation));
    std::vector<bool> lost(total, false);
    std::size_t remaining = total;
    for (std::size_t k = 0; k < total; ++k) {
      if (remaining > 1 && rng.bernoulli(cfg.protein_loss)) {
        lost[k] = true;
        --remaining;
        out.losses.push_back({detail::cluster_key(genes, x)});
      }
    }
    std::vector<std::optional<NodeId>> below(total);
    if (genes.is_leaf(x)) {
      for (std::size_t k = 0; k < total; ++k)
        if (!lost[k]) {
          std::string name = protein_name(genes.name(x), ++counter[x]);
          out.g.add(name, genes.name(x));
          below[k] = lb.b.add_leaf(std::move(name));
        }
    } else {
      const auto l = self(self, genes.left(x), remaining);
      const auto r = self(self, genes.right(x), remaining);
      for (std::size_t k = 0, j = 0; k < total; ++k)
        if (!lost[k]) {
          below[k] = lb.join(l[j], r[j], genes.label(x));
          ++j;
        }
    }
    std::vector<std::optional<NodeId>> result;
    for (std::size_t e = 0, k = 0; e < entering; ++e) {
      std::optional<NodeId> acc = below[k + copies[e] - 1];
      for (std::size_t c = copies[e] - 1; c-- > 0;) acc = lb.join(below[k + c], acc, Event::Creat);
      result.push_back(acc);
      k += copies[e];
    }
    return result;
  };

  auto top = descend(descend, genes.root(), 1);
  out.proteins = lb.b.build(*top.front());
  return out;
}

inline ProteinSimulation simulate_protein_tree(const PhyloTree& genes, const SimConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_protein_tree(genes, cfg, rng);
}

// One uniformly chosen protein per gene; P is restricted to those proteins
// and g to their rows, so g becomes a bijection.
inline std::pair<PhyloTree, LeafMapping> keep_one_protein_per_gene(const PhyloTree& proteins, const LeafMapping& g,
                                                                    Rng& rng) {
  std::map<std::string, std::vector<NodeId>> by_gene;
  for (NodeId x : proteins.leaves()) by_gene[g.at(proteins.name(x))].push_back(x);
  std::vector<bool> keep(proteins.size(), false);
  LeafMapping kept;
  for (auto& [gene, xs] : by_gene) {
    const NodeId x = xs[rng.below(xs.size())];
    keep[x] = true;
    kept.add(proteins.name(x), gene);
  }
  return {restrict_to(proteins, keep), std::move(kept)};
}

struct GroundTruth {
  PhyloTree species;
  PhyloTree genes;     // true labels
  PhyloTree proteins;  // true labels
  LeafMapping s;
  LeafMapping g;
  std::vector<TrueLoss> gene_losses;
  std::vector<TrueLoss> protein_losses;
};

// S, then G along S, then P along G, from one seeded stream.
inline GroundTruth simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  GroundTruth t;
  const PhyloTree full_species = simulate_species_tree(cfg.species, rng);
  GeneSimulation gs = simulate_gene_tree(full_species, cfg, rng);
  ProteinSimulation ps = simulate_protein_tree(gs.genes, cfg, rng);
  t.species = std::move(gs.species);
  t.genes = std::move(gs.genes);
  t.s = std::move(gs.s);
  t.gene_losses = std::move(gs.losses);
  if (cfg.one_protein_per_gene) {
    std::tie(t.proteins, t.g) = keep_one_protein_per_gene(ps.proteins, ps.g, rng);
  } else {
    t.proteins = std::move(ps.proteins);
    t.g = std::move(ps.g);
  }
  t.protein_losses = std::move(ps.losses);
  return t;
}

}  // namespace drecon
