#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "drecon/batch.hpp"
#include "drecon/error.hpp"
#include "drecon/mapping.hpp"
#include "drecon/mindrgt.hpp"
#include "drecon/mindrpgt.hpp"
#include "drecon/newick.hpp"
#include "drecon/reconcile.hpp"
#include "drecon/simulate.hpp"

namespace drecon::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kParse = 3,
  kMapping = 4,
  kBijection = 5,
  kConsistency = 6,
  kCap = 7,
  kSimulation = 8,
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes via a temporary sibling and a rename, so readers never see partial
// files.
inline void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

inline PhyloTree read_tree(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_newick(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

inline std::vector<PhyloTree> read_trees(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_newick_all(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

// Inferred rows first, then the explicit file on top (explicit rows win).
inline LeafMapping load_mapping(const std::string& path, bool infer, const PhyloTree& source, bool protein_level) {
  LeafMapping m;
  if (infer) m = protein_level ? infer_protein_gene_mapping(source) : infer_gene_species_mapping(source);
  if (!path.empty()) {
    std::istringstream in(read_file(path));
    const LeafMapping rows = read_mapping_tsv(in);
    for (const auto& [from, to] : rows.pairs()) m.set(from, to);
  } else if (!infer) {
    throw UsageError(std::string("a ") + (protein_level ? "--pmap" : "--map") + " file or --infer-map is required");
  }
  return m;
}

inline std::string cluster_text(const PhyloTree& t, NodeId x) {
  std::string out;
  for (const auto& n : t.cluster(x)) out += (out.empty() ? "" : ",") + n;
  return out;
}

inline std::string cost_line(const CostSummary& c, bool protein_level) {
  return std::string(protein_level ? "C=" : "D=") + std::to_string(c.events) + " L=" + std::to_string(c.losses) +
         " M=" + std::to_string(c.mutation);
}

inline void append_losses(std::string& tsv, const char* layer, const PhyloTree& src, const PhyloTree& dst,
                          const Reconciliation& r) {
  for (NodeId x = 1; x < src.size(); ++x)
    for (const auto& loss : r.losses[x])
      tsv += std::string(layer) + '\t' + cluster_text(src, x) + '\t' + cluster_text(dst, loss.lost) + '\t' +
             (loss.extra ? "1" : "0") + '\n';
}

// ---------------------------------------------------------------------------

struct ReconcileArgs {
  std::string gene, species, map, protein, pmap, out, cost = "MM";
  bool infer = false;
};

inline int cmd_reconcile(const ReconcileArgs& a, std::ostream& out) {
  const CostSpec spec = CostSpec::parse(a.cost);
  const PhyloTree genes = read_tree(a.gene);
  const PhyloTree species = read_tree(a.species);
  const LeafMapping s = load_mapping(a.map, a.infer, genes, false);
  const Reconciliation gs = reconcile_gene_species(genes, species, s);
  std::string losses = "layer\tchild\tlost\textra\n";
  append_losses(losses, "gene-species", genes, species, gs);
  out << cost_line(gs.cost, false) << '\n';
  std::optional<PhyloTree> proteins;
  std::optional<Reconciliation> pg;
  if (!a.protein.empty()) {
    proteins = read_tree(a.protein);
    const LeafMapping g = load_mapping(a.pmap, a.infer, *proteins, true);
    pg = reconcile_protein_gene(*proteins, genes, g, gs);
    append_losses(losses, "protein-gene", *proteins, genes, *pg);
    out << cost_line(pg->cost, true) << '\n';
    out << spec.code() << '=' << combine(spec, pg->cost, gs.cost) << '\n';
  }
  if (!a.out.empty()) {
    make_dirs(a.out);
    const fs::path dir(a.out);
    write_file(dir / "G.labeled.nwk", serialize_newick(labeled_tree(genes, gs)) + '\n');
    if (proteins) write_file(dir / "P.labeled.nwk", serialize_newick(labeled_tree(*proteins, *pg)) + '\n');
    write_file(dir / "losses.tsv", losses);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct CorrectArgs {
  std::string protein, species, pmap, map, out, report, dir, summary, buckets, cost = "MM";
  bool infer = false;
  bool no_timing = false;
  unsigned jobs = 1;
};

struct Instance {
  std::string name;
  fs::path protein, species, pmap, map;
};

inline CorrectionRow correct_instance(const Instance& inst, const CorrectArgs& a, std::string& tree_out) {
  const CostSpec spec = CostSpec::parse(a.cost);
  const PhyloTree proteins = read_tree(inst.protein);
  const PhyloTree species = read_tree(inst.species);
  const LeafMapping g = load_mapping(inst.pmap.string(), a.infer, proteins, true);
  const PhyloTree induced = induced_gene_tree(proteins, g);
  const LeafMapping s = load_mapping(inst.map.string(), a.infer, induced, false);
  const Correction c = correct_gene_tree(proteins, species, g, s, spec);
  tree_out = serialize_newick(c.gene_tree) + '\n';
  CorrectionRow row;
  row.instance = inst.name;
  row.leaves = proteins.leaf_count();
  row.cost = spec.code();
  row.baseline = c.report.baseline;
  row.output = c.report.output_cost;
  row.modified = c.report.modified;
  row.duplications = c.report.baseline_gene_species.events;
  row.losses = c.report.baseline_gene_species.losses;
  row.moves = c.report.applied.size();
  row.ms = a.no_timing ? 0.0 : c.report.milliseconds;
  return row;
}

inline std::string row_text(const CorrectionRow& row) {
  std::ostringstream s;
  s << kCorrectionHeader << '\n';
  write_correction_row(s, row);
  return s.str();
}

inline int cmd_correct(const CorrectArgs& a, std::ostream& out, std::ostream& err) {
  CostSpec::parse(a.cost);
  if (a.dir.empty()) {
    if (a.protein.empty() || a.species.empty()) throw UsageError("correct needs --protein and --species, or --dir");
    std::string tree;
    const CorrectionRow row = correct_instance({fs::path(a.protein).stem().string(), a.protein, a.species, a.pmap, a.map}, a, tree);
    if (a.out.empty())
      out << tree;
    else
      write_file(a.out, tree);
    if (a.report.empty())
      out << row_text(row);
    else
      write_file(a.report, row_text(row));
    return kOk;
  }

  // Batch: every subdirectory holding P.nwk is one instance.
  std::vector<Instance> instances;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(a.dir, ec)) {
    const fs::path d = entry.path();
    if (!entry.is_directory() || !fs::exists(d / "P.nwk")) continue;
    Instance inst{d.filename().string(), d / "P.nwk", d / "S.nwk", {}, {}};
    if (fs::exists(d / "pg.tsv")) inst.pmap = d / "pg.tsv";
    if (fs::exists(d / "gs.tsv")) inst.map = d / "gs.tsv";
    instances.push_back(std::move(inst));
  }
  if (ec) throw IoError("cannot list '" + a.dir + "': " + ec.message());
  if (instances.empty()) throw IoError("no instances (subdirectories with P.nwk) under '" + a.dir + "'");
  std::sort(instances.begin(), instances.end(), [](const Instance& x, const Instance& y) { return x.name < y.name; });

  std::vector<std::optional<CorrectionRow>> rows(instances.size());
  std::vector<std::string> failures(instances.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < instances.size();) {
      try {
        std::string tree;
        CorrectionRow row = correct_instance(instances[i], a, tree);
        const fs::path d = fs::path(a.dir) / instances[i].name;
        write_file(d / "G_opt.nwk", tree);
        write_file(d / "report.tsv", row_text(row));
        rows[i] = std::move(row);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(instances.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<CorrectionRow> ok;
  out << kCorrectionHeader << '\n';
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (rows[i]) {
      write_correction_row(out, *rows[i]);
      ok.push_back(*rows[i]);
    } else {
      err << instances[i].name << ": " << failures[i] << '\n';
    }
  }
  if (!ok.empty()) {
    const BatchSummary summary =
        summarize_batch(ok, a.buckets.empty() ? default_buckets() : parse_buckets(a.buckets));
    out << '\n';
    write_summary_text(out, summary);
    if (!a.summary.empty()) {
      std::ostringstream tsv;
      write_summary_tsv(tsv, summary);
      write_file(a.summary, tsv.str());
    }
  }
  return ok.size() == instances.size() ? kOk : kIo;
}

// ---------------------------------------------------------------------------

struct AssembleArgs {
  std::string input, out, spans;
};

inline int cmd_assemble(const AssembleArgs& a, std::ostream& out) {
  const SubtreeFamily family = read_trees(a.input);
  if (family.empty()) throw ParseError(a.input + ": no trees", 0);
  if (!a.spans.empty()) {
    std::ostringstream tsv;
    write_span_partition_tsv(tsv, span_partition(family));
    write_file(a.spans, tsv.str());
  }
  const std::string tree = serialize_newick(assemble_protein_tree(family)) + '\n';
  if (a.out.empty())
    out << tree;
  else
    write_file(a.out, tree);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string protein, species, pmap, map, cost = "MM";
  bool infer = false;
  std::size_t cap = kDefaultTopologyCap;
};

inline int cmd_solve_exact(const SolveArgs& a, std::ostream& out) {
  const CostSpec spec = CostSpec::parse(a.cost);
  const PhyloTree proteins = read_tree(a.protein);
  const PhyloTree species = read_tree(a.species);
  const LeafMapping g = load_mapping(a.pmap, a.infer, proteins, true);
  LeafMapping s;
  if (a.infer) {
    for (NodeId x : proteins.leaves()) {
      const std::string& gene = g.at(proteins.name(x));
      s.set(gene, infer_species_name(gene));
    }
  }
  if (!a.map.empty()) {
    std::istringstream in(read_file(a.map));
    const LeafMapping rows = read_mapping_tsv(in);
    for (const auto& [from, to] : rows.pairs()) s.set(from, to);
  } else if (!a.infer) {
    throw UsageError("a --map file or --infer-map is required");
  }
  const ExactSolution best = solve_exact(proteins, species, g, s, spec, a.cap);
  out << serialize_newick(best.gene_tree) << '\n' << spec.code() << '=' << best.cost << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  SimConfig cfg;
  std::size_t count = 1;
};

inline std::string mapping_text(const LeafMapping& m) {
  std::ostringstream s;
  write_mapping_tsv(s, m);
  return s.str();
}

inline std::string truth_text(const GroundTruth& t) {
  std::string tsv = "tree\tevent\tleaves\n";
  auto labels = [&](const char* name, const PhyloTree& tree) {
    for (NodeId x = 0; x < tree.size(); ++x)
      if (!tree.is_leaf(x))
        tsv += std::string(name) + '\t' + std::string(to_string(tree.label(x))) + '\t' + cluster_text(tree, x) + '\n';
  };
  labels("G", t.genes);
  labels("P", t.proteins);
  for (const auto& l : t.gene_losses) tsv += "S\tLoss\t" + l.host + '\n';
  for (const auto& l : t.protein_losses) tsv += "G\tLoss\t" + l.host + '\n';
  return tsv;
}

inline void write_instance(const fs::path& dir, const GroundTruth& t) {
  make_dirs(dir);
  write_file(dir / "S.nwk", serialize_newick(t.species) + '\n');
  write_file(dir / "G.nwk", serialize_newick(strip_labels(t.genes)) + '\n');
  write_file(dir / "P.nwk", serialize_newick(strip_labels(t.proteins)) + '\n');
  write_file(dir / "gs.tsv", mapping_text(t.s));
  write_file(dir / "pg.tsv", mapping_text(t.g));
  write_file(dir / "truth.tsv", truth_text(t));
}

inline int cmd_simulate(SimulateArgs a, std::ostream& out) {
  if (const char* env = std::getenv("DRECON_SEED"); env && *env) {
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), seed);
    if (ec != std::errc() || *ptr != '\0') throw UsageError("DRECON_SEED must be an unsigned integer");
    a.cfg.seed = seed;
  }
  a.cfg.validate();
  if (a.count == 0) throw UsageError("--count must be positive");
  const fs::path root(a.out);
  for (std::size_t i = 0; i < a.count; ++i) {
    SimConfig cfg = a.cfg;
    cfg.seed = a.cfg.seed + i;
    const GroundTruth t = simulate(cfg);
    char name[32];
    std::snprintf(name, sizeof name, "inst%04zu", i + 1);
    const fs::path dir = a.count == 1 ? root : root / name;
    write_instance(dir, t);
    out << dir.string() << '\t' << t.proteins.leaf_count() << " proteins\t" << t.genes.leaf_count() << " genes\t"
        << t.species.leaf_count() << " species\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string dir, buckets, tsv;
};

inline int cmd_stats(const StatsArgs& a, std::ostream& out) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(a.dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec))
    if (it->is_regular_file() && it->path().extension() == ".tsv") files.push_back(it->path());
  if (ec) throw IoError("cannot list '" + a.dir + "': " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<CorrectionRow> rows;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    if (text.rfind(std::string(kCorrectionHeader), 0) != 0) continue;
    std::istringstream in(text);
    try {
      for (auto& r : read_correction_rows(in)) rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.message(), e.offset());
    }
  }
  if (rows.empty()) throw IoError("no correction reports under '" + a.dir + "'");
  const BatchSummary summary = summarize_batch(rows, a.buckets.empty() ? default_buckets() : parse_buckets(a.buckets));
  write_summary_text(out, summary);
  if (!a.tsv.empty()) {
    std::ostringstream tsv;
    write_summary_tsv(tsv, summary);
    write_file(a.tsv, tsv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double reconciliation of protein, gene and species trees", "drecon"};
  app.require_subcommand(1);

  ReconcileArgs rec;
  auto* reconcile = app.add_subcommand("reconcile", "LCA-reconcile G with S, and optionally P with G");
  reconcile->add_option("--gene", rec.gene, "gene tree (Newick)")->required();
  reconcile->add_option("--species", rec.species, "species tree (Newick)")->required();
  reconcile->add_option("--map", rec.map, "gene to species TSV");
  reconcile->add_option("--protein", rec.protein, "protein tree (Newick)");
  reconcile->add_option("--pmap", rec.pmap, "protein to gene TSV");
  reconcile->add_option("--cost", rec.cost, "double cost XY")->capture_default_str();
  reconcile->add_option("--out", rec.out, "directory for labeled trees and losses.tsv");
  reconcile->add_flag("--infer-map", rec.infer, "infer mappings from leaf names");

  CorrectArgs cor;
  auto* correct = app.add_subcommand("correct", "correct g(P) with the local rearrangement heuristic");
  correct->add_option("--protein", cor.protein, "protein tree (Newick)");
  correct->add_option("--species", cor.species, "species tree (Newick)");
  correct->add_option("--pmap", cor.pmap, "protein to gene TSV (one protein per gene)");
  correct->add_option("--map", cor.map, "gene to species TSV");
  correct->add_option("--cost", cor.cost, "double cost XY")->capture_default_str();
  correct->add_option("--out", cor.out, "corrected gene tree path (default: stdout)");
  correct->add_option("--report", cor.report, "report row path (default: stdout)");
  correct->add_option("--dir", cor.dir, "batch mode: one instance per subdirectory");
  correct->add_option("--jobs", cor.jobs, "batch worker threads")->capture_default_str();
  correct->add_option("--summary", cor.summary, "batch summary TSV path");
  correct->add_option("--buckets", cor.buckets, "leaf-count buckets, e.g. 1-9,10-99,100-199");
  correct->add_flag("--infer-map", cor.infer, "infer mappings from leaf names");
  correct->add_flag("--no-timing", cor.no_timing, "report 0 ms, for byte-stable reports");

  AssembleArgs asmb;
  auto* assemble = app.add_subcommand("assemble", "rebuild a protein tree from its maximal creation-free subtrees");
  assemble->add_option("--input", asmb.input, "Newick file with one or more trees")->required();
  assemble->add_option("--out", asmb.out, "output tree path (default: stdout)");
  assemble->add_option("--spans", asmb.spans, "span partition TSV path");

  SolveArgs sol;
  auto* solve = app.add_subcommand("solve-exact", "minimize XY(P, G, S) over all gene trees");
  solve->add_option("--protein", sol.protein, "protein tree (Newick)")->required();
  solve->add_option("--species", sol.species, "species tree (Newick)")->required();
  solve->add_option("--pmap", sol.pmap, "protein to gene TSV");
  solve->add_option("--map", sol.map, "gene to species TSV");
  solve->add_option("--cost", sol.cost, "double cost XY")->capture_default_str();
  solve->add_option("--cap", sol.cap, "largest gene count to enumerate")->capture_default_str();
  solve->add_flag("--infer-map", sol.infer, "infer mappings from leaf names");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate species, gene and protein trees");
  simulate_cmd->add_option("--out", sim.out, "output directory")->required();
  simulate_cmd->add_option("--species", sim.cfg.species, "species count")->capture_default_str();
  simulate_cmd->add_option("--dup", sim.cfg.duplication, "duplication probability")->capture_default_str();
  simulate_cmd->add_option("--loss", sim.cfg.loss, "gene loss probability")->capture_default_str();
  simulate_cmd->add_option("--creation", sim.cfg.creation, "protein creation probability")->capture_default_str();
  simulate_cmd->add_option("--protein-loss", sim.cfg.protein_loss, "protein loss probability")->capture_default_str();
  simulate_cmd->add_option("--seed", sim.cfg.seed, "seed (DRECON_SEED overrides)")->capture_default_str();
  simulate_cmd->add_option("--retries", sim.cfg.max_retries, "extinction retries")->capture_default_str();
  simulate_cmd->add_option("--count", sim.count, "instances; more than one go to inst0001, ...")->capture_default_str();
  simulate_cmd->add_flag("--one-protein-per-gene", sim.cfg.one_protein_per_gene, "keep one random protein per gene");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "summarize correction reports by leaf-count bucket");
  stats->add_option("--dir", st.dir, "directory searched for report TSVs")->required();
  stats->add_option("--buckets", st.buckets, "leaf-count buckets, e.g. 1-9,10-99,100-199");
  stats->add_option("--tsv", st.tsv, "summary TSV path");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*reconcile) return cmd_reconcile(rec, out);
    if (*correct) return cmd_correct(cor, out, err);
    if (*assemble) return cmd_assemble(asmb, out);
    if (*solve) return cmd_solve_exact(sol, out);
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*stats) return cmd_stats(st, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const BijectionError& e) {
    err << "bijection error: " << e.what() << '\n';
    return kBijection;
  } catch (const MappingError& e) {
    err << "mapping error: " << e.what() << '\n';
    return kMapping;
  } catch (const UnknownLeaf& e) {
    err << "mapping error: " << e.what() << '\n';
    return kMapping;
  } catch (const ConsistencyError& e) {
    err << "consistency error: " << e.what() << '\n';
    return kConsistency;
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << '\n';
    return kCap;
  } catch (const SimulationError& e) {
    err << "simulation error: " << e.what() << '\n';
    return kSimulation;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace drecon::cli
