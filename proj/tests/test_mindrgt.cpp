#include <catch_amalgamated.hpp>

#include "drecon/mindrgt.hpp"
#include "drecon/newick.hpp"
#include "drecon/simulate.hpp"
#include "oracles.hpp"

using namespace drecon;

namespace {

std::map<std::string, std::string> plain(const LeafMapping& m) { return {m.pairs().begin(), m.pairs().end()}; }

const LeafMapping kGs{{"a1", "a"}, {"b1", "b"}, {"c1", "c"}, {"a2", "a"}};

GroundTruth bijective(std::uint64_t seed, std::size_t species, double dup, double loss, double creation = 0.2,
                      double protein_loss = 0.3) {
  SimConfig cfg;
  cfg.species = species;
  cfg.duplication = dup;
  cfg.loss = loss;
  cfg.creation = creation;
  cfg.protein_loss = protein_loss;
  cfg.one_protein_per_gene = true;
  cfg.seed = seed;
  return simulate(cfg);
}

int cost_of(const GroundTruth& t, const PhyloTree& genes, CostSpec spec) {
  return double_cost(t.proteins, genes, t.species, t.g, t.s, spec);
}

}  // namespace

TEST_CASE("induced gene tree") {
  const auto p = parse_newick("((a11,b11)Spec,c11);");
  const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
  CHECK(serialize_newick(induced_gene_tree(p, g)) == "((a1,b1),c1);");
  CHECK(serialize_newick(induced_gene_tree(parse_newick("a11;"), g)) == "a1;");
  CHECK_THROWS_AS(induced_gene_tree(parse_newick("(a11,a12);"), LeafMapping{{"a11", "a1"}, {"a12", "a1"}}),
                  BijectionError);
}

TEST_CASE("X(P, g(P)) is zero for every cost") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto t = bijective(seed, 3 + seed % 6, 0.2, 0.2);
    const auto gp = induced_gene_tree(t.proteins, t.g);
    const auto r = reconcile_protein_gene(t.proteins, gp, t.g, reconcile_gene_species(gp, t.species, t.s));
    REQUIRE(r.cost == CostSummary{0, 0, 0});
  }
}

TEST_CASE("incongruent duplications") {
  const auto s = parse_newick("((a,b),c);");
  CHECK(incongruent_duplications(parse_newick("((a1,b1),c1);"), s, kGs).empty());
  const auto g = parse_newick("((a1,c1),b1);");
  CHECK(incongruent_duplications(g, s, kGs) == std::vector<NodeId>{g.root()});
  CHECK(incongruent_duplications(parse_newick("(a1,a2);"), parse_newick("(a,b);"), kGs).empty());
}

TEST_CASE("incongruent duplications match the labeling definition") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto t = bijective(seed, 3 + seed % 6, 0.25, 0.2);
    const auto gp = induced_gene_tree(t.proteins, t.g);
    const auto r = reconcile_gene_species(gp, t.species, t.s);
    std::vector<NodeId> expected;
    for (NodeId x = 0; x < gp.size(); ++x)
      if (!gp.is_leaf(x) && r.labels[x] == Event::Dup &&
          (r.image[x] != r.image[gp.left(x)] || r.image[x] != r.image[gp.right(x)]))
        expected.push_back(x);
    REQUIRE(incongruent_duplications(gp, r) == expected);
  }
}

TEST_CASE("mix candidates") {
  const auto s = parse_newick("((a,b),c);");
  {
    const auto g = parse_newick("((a1,b1),(a2,c1));");
    const auto mix = mix_candidates(g, g.root(), reconcile_gene_species(g, s, kGs));
    REQUIRE(mix.size() == 1);
    CHECK(serialize_newick(mix[0]) == "(((a1,b1),a2),c1);");
  }
  {
    const auto g = parse_newick("(a1,a2);");
    CHECK(mix_candidates(g, g.root(), reconcile_gene_species(g, parse_newick("(a,b);"), kGs)).empty());
  }
  {
    const auto g = parse_newick("((a1,c1),b1);");
    CHECK(mix_candidates(g, g.root(), reconcile_gene_species(g, s, kGs)).empty());
  }
}

TEST_CASE("mix candidates keep the leaf set and graft on loss-bearing edges") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto t = bijective(seed, 4 + seed % 6, 0.3, 0.25);
    const auto gp = induced_gene_tree(t.proteins, t.g);
    const auto r = reconcile_gene_species(gp, t.species, t.s);
    const auto lists = oracle::loss_lists(oracle::parse(serialize_newick(gp)), oracle::parse(serialize_newick(t.species)),
                                          plain(t.s));
    for (NodeId x : incongruent_duplications(gp, r)) {
      const auto base = gp.cluster(x);
      std::size_t expected = 0;
      for (NodeId moved : gp.children(x)) {
        if (r.image[moved] == r.image[x]) continue;
        const auto moved_species = t.species.cluster(r.image[moved]);
        const std::set<std::string> key(moved_species.begin(), moved_species.end());
        const NodeId host = gp.sibling(moved);
        for (NodeId c = host + 1; c < gp.subtree_end(host); ++c) {
          const auto cl = gp.cluster(c);
          const auto& list = lists.at({cl.begin(), cl.end()});
          expected += std::count(list.begin(), list.end(), key) > 0;
        }
      }
      const auto mix = mix_candidates_detailed(gp, x, r);
      REQUIRE(mix.size() == expected);
      for (const auto& c : mix) REQUIRE(c.tree.leaf_names().size() == base.size());
      for (const auto& c : mix) REQUIRE(c.tree.cluster(c.tree.root()) == base);
    }
  }
}

TEST_CASE("local replacement with negative delta is rejected") {
  const auto p = parse_newick("((a11,b11),(a21,c11));");
  const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"a21", "a2"}, {"c11", "c1"}};
  const auto s = parse_newick("((a,b),c);");
  const CostSpec mm = CostSpec::parse("MM");
  const GeneTreeCorrector c(p, s, g, kGs, mm);
  const auto move = c.evaluate(c.gene_tree().root());
  REQUIRE(move);
  CHECK(move->subtree_cost == 3);
  CHECK(move->replacement_cost == 6);
  CHECK(move->delta == -3);
  CHECK_FALSE(best_local_replacement(p, s, g, kGs, c.gene_tree().root(), mm));
  // Both sides agree with the exact solver's evaluation of those two trees.
  const auto ex = solve_exact(p, s, g, kGs, mm);
  CHECK(ex.cost <= 3);
  CHECK(double_cost(p, parse_newick("(((a1,b1),a2),c1);"), s, g, kGs, mm) == 6);
  CHECK(double_cost(p, c.gene_tree(), s, g, kGs, mm) == 3);
}

TEST_CASE("empty mix gives no move") {
  const auto p = parse_newick("((a11,c11),b11);");
  const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
  const auto s = parse_newick("((a,b),c);");
  CHECK_FALSE(best_local_replacement(p, s, g, kGs, 0, CostSpec::parse("MM")));
}

TEST_CASE("antichain selection examples") {
  const auto t = parse_newick("(((a,b),(c,d)),e);");
  auto move = [](NodeId x, int d) {
    LocalMove m;
    m.target = x;
    m.delta = d;
    return m;
  };
  const NodeId x = t.left(t.root());
  const NodeId y = t.left(x);
  const NodeId z = t.right(x);
  auto targets = [](const std::vector<LocalMove>& ms) {
    std::vector<NodeId> out;
    for (const auto& m : ms) out.push_back(m.target);
    return out;
  };
  CHECK(targets(select_antichain({move(x, 3)}, t)) == std::vector<NodeId>{x});
  CHECK(targets(select_antichain({move(x, 3), move(y, 5)}, t)) == std::vector<NodeId>{y});
  CHECK(targets(select_antichain({move(x, 4), move(y, 3), move(z, 2)}, t)) == std::vector<NodeId>{y, z});
  CHECK(targets(select_antichain({move(x, 6), move(y, 3), move(z, 2)}, t)) == std::vector<NodeId>{x});
  // Ties keep the descendants.
  CHECK(targets(select_antichain({move(x, 5), move(y, 3), move(z, 2)}, t)) == std::vector<NodeId>{y, z});
  CHECK_THROWS_AS(select_antichain({move(x, 0)}, t), std::invalid_argument);
}

TEST_CASE("antichain selection is optimal against subset enumeration") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const auto t = simulate_species_tree(4 + seed % 10, rng);
    const auto o = oracle::parse(serialize_newick(t));
    const std::size_t k = 1 + rng.below(12);
    std::vector<LocalMove> moves;
    std::vector<std::pair<int, int>> weighted;
    std::set<NodeId> used;
    for (std::size_t i = 0; i < k; ++i) {
      const auto x = static_cast<NodeId>(rng.below(t.size()));
      if (!used.insert(x).second) continue;
      LocalMove m;
      m.target = x;
      m.delta = 1 + static_cast<int>(rng.below(9));
      weighted.emplace_back(static_cast<int>(x), m.delta);
      moves.push_back(m);
    }
    const auto chosen = select_antichain(moves, t);
    int sum = 0;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      sum += chosen[i].delta;
      for (std::size_t j = i + 1; j < chosen.size(); ++j) {
        REQUIRE_FALSE(t.is_ancestor(chosen[i].target, chosen[j].target));
        REQUIRE_FALSE(t.is_ancestor(chosen[j].target, chosen[i].target));
      }
    }
    REQUIRE(sum == oracle::best_antichain(o, weighted));
  }
}

TEST_CASE("correction examples") {
  const auto s = parse_newick("((a,b),c);");
  {
    const auto p = parse_newick("((a11,b11),c11);");
    const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
    const auto c = correct_gene_tree(p, s, g, kGs, CostSpec::parse("MM"));
    CHECK_FALSE(c.report.modified);
    CHECK(serialize_newick(c.gene_tree) == "((a1,b1),c1);");
    CHECK(c.report.baseline == 0);
  }
  {
    const auto p = parse_newick("((a11,c11),b11);");
    const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
    const auto c = correct_gene_tree(p, s, g, kGs, CostSpec::parse("MM"));
    CHECK_FALSE(c.report.modified);
    CHECK(serialize_newick(c.gene_tree) == "((a1,c1),b1);");
    CHECK(c.report.baseline == 4);
    CHECK(c.report.output_cost == 4);
    CHECK(c.report.incongruent == 1);
    CHECK(c.report.candidates == 0);
  }
  CHECK_THROWS_AS(correct_gene_tree(parse_newick("(a11,a12);"), parse_newick("(a,b);"),
                                    LeafMapping{{"a11", "a1"}, {"a12", "a1"}}, kGs, CostSpec::parse("MM")),
                  BijectionError);
}

TEST_CASE("exact solver examples") {
  const auto s = parse_newick("((a,b),c);");
  {
    const auto p = parse_newick("((a11,b11),c11);");
    const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
    const auto e = solve_exact(p, s, g, kGs, CostSpec::parse("MM"));
    CHECK(e.cost == 0);
    CHECK(canonical_form(e.gene_tree) == canonical_form(parse_newick("((a1,b1),c1);")));
  }
  {
    const auto p = parse_newick("((a11,c11),b11);");
    const LeafMapping g{{"a11", "a1"}, {"b11", "b1"}, {"c11", "c1"}};
    const auto e = solve_exact(p, s, g, kGs, CostSpec::parse("MM"));
    CHECK(e.cost == 4);
    CHECK(e.evaluated == 3);
    // Both ((a1,b1),c1) and ((a1,c1),b1) reach 4; the smaller canonical form wins.
    CHECK(canonical_form(e.gene_tree) == "((a1,b1),c1)");
    std::vector<int> values;
    for (const auto& t : enumerate_topologies({"a1", "b1", "c1"}))
      values.push_back(double_cost(p, t, s, g, kGs, CostSpec::parse("MM")));
    std::sort(values.begin(), values.end());
    CHECK(values == std::vector<int>{4, 4, 8});
  }
  std::vector<std::string> many;
  LeafMapping g, gs;
  std::string text = "a01";
  for (int i = 2; i <= 9; ++i) text = "(" + text + ",a0" + std::to_string(i) + ")";
  for (int i = 1; i <= 9; ++i) {
    g.add("a0" + std::to_string(i), "g" + std::to_string(i));
    gs.add("g" + std::to_string(i), "a");
  }
  CHECK_THROWS_AS(solve_exact(parse_newick(text + ";"), parse_newick("a;"), g, gs, CostSpec::parse("MM")), CapExceeded);
}

TEST_CASE("exact solver matches the bipartition oracle") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    SimConfig cfg;
    cfg.species = 2 + seed % 4;
    cfg.duplication = 0.2;
    cfg.loss = 0.2;
    cfg.creation = 0.2;
    cfg.protein_loss = 0.2;
    cfg.seed = seed;
    const auto t = simulate(cfg);  // several proteins per gene allowed
    std::set<std::string> genes;
    for (const auto& [p, gene] : t.g.pairs()) genes.insert(gene);
    if (genes.size() > 6) continue;
    const auto op = oracle::parse(serialize_newick(t.proteins));
    const auto os = oracle::parse(serialize_newick(t.species));
    for (const auto spec : CostSpec::all()) {
      const auto ours = solve_exact(t.proteins, t.species, t.g, t.s, spec);
      const auto theirs = oracle::exact(op, os, plain(t.g), plain(t.s), spec.code());
      REQUIRE(ours.cost == theirs.cost);
      REQUIRE(theirs.minimizers.count(canonical_form(ours.gene_tree)) == 1);
      REQUIRE(canonical_form(ours.gene_tree) == *theirs.minimizers.begin());
    }
  }
}

TEST_CASE("correction contract and oracle sandwich") {
  std::size_t instances = 0;
  std::size_t modified = 0;
  for (std::uint64_t seed = 1; instances < 150; ++seed) {
    const auto t = bijective(seed, 3 + seed % 5, 0.3, 0.3, 0.3, 0.3);
    if (t.proteins.leaf_count() > 8 || t.proteins.leaf_count() < 2) continue;
    ++instances;
    const auto gp = induced_gene_tree(t.proteins, t.g);
    for (const auto spec : CostSpec::all()) {
      const auto c = correct_gene_tree(t.proteins, t.species, t.g, t.s, spec);
      const int baseline = cost_of(t, gp, spec);
      const int output = cost_of(t, c.gene_tree, spec);
      REQUIRE(c.report.baseline == baseline);
      REQUIRE(c.report.output_cost == output);
      REQUIRE(output == baseline - c.report.total_delta());
      if (c.report.modified) {
        ++modified;
        REQUIRE(output < baseline);
      } else {
        REQUIRE(serialize_newick(c.gene_tree) == serialize_newick(gp));
      }
      for (const auto& m : c.report.applied) {
        REQUIRE(m.delta > 0);
        REQUIRE(m.replacement.cluster(m.replacement.root()) == gp.cluster(m.target));
      }
      REQUIRE(solve_exact(t.proteins, t.species, t.g, t.s, spec).cost <= output);
    }
  }
  CHECK(modified > 0);
}

TEST_CASE("a modified instance: delta equals the full-tree cost difference") {
  const CostSpec mm = CostSpec::parse("CM");
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 3000 && !found; ++seed) {
    const auto t = bijective(seed, 3 + seed % 6, 0.3, 0.3, 0.2, 0.3);
    if (t.proteins.leaf_count() > 8) continue;
    const GeneTreeCorrector c(t.proteins, t.species, t.g, t.s, mm);
    for (NodeId x : c.incongruent()) {
      const auto m = c.best_move(x);
      if (!m) continue;
      found = true;
      const std::pair<NodeId, const PhyloTree*> swap{x, &m->replacement};
      const auto replaced = replace_subtrees(c.gene_tree(), std::span(&swap, 1));
      CHECK(m->delta >= 1);
      CHECK(cost_of(t, c.gene_tree(), mm) - cost_of(t, replaced, mm) == m->delta);
      const auto out = c.run();
      CHECK(out.report.modified);
      CHECK(out.report.output_cost >= solve_exact(t.proteins, t.species, t.g, t.s, mm).cost);
      break;
    }
  }
  CHECK(found);
}
