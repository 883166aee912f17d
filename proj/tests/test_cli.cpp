#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cli.hpp"

using namespace drecon;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result drecon_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("drecon_cli_" + std::to_string(::getpid()) + "_" + std::to_string(++counter));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
    return p.string();
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

const char* kGs = "a1\ta\nb1\tb\nc1\tc\n";
const char* kPg = "a11\ta1\nb11\tb1\nc11\tc1\n";

}  // namespace

TEST_CASE("usage errors") {
  CHECK(drecon_run({}).code == 1);
  CHECK(drecon_run({"frobnicate"}).code == 1);
  CHECK(drecon_run({"--help"}).code == 0);
  TempDir d;
  const auto g = d.write("G.nwk", "((a1,c1),b1);\n");
  const auto s = d.write("S.nwk", "((a,b),c);\n");
  const auto r = drecon_run({"reconcile", "--gene", g, "--species", s, "--infer-map", "--cost", "QQ"});
  CHECK(r.code == 1);
  CHECK(drecon_run({"reconcile", "--gene", g, "--species", s}).code == 1);
}

TEST_CASE("reconcile") {
  TempDir d;
  const auto g = d.write("G.nwk", "((a1,c1),b1);\n");
  const auto s = d.write("S.nwk", "((a,b),c);\n");
  const auto m = d.write("gs.tsv", kGs);
  {
    const auto r = drecon_run({"reconcile", "--gene", g, "--species", s, "--map", m});
    CHECK(r.code == 0);
    CHECK(r.out == "D=1 L=3 M=4\n");
  }
  {
    const auto congruent = d.write("G2.nwk", "((a1,b1),c1);\n");
    CHECK(drecon_run({"reconcile", "--gene", congruent, "--species", s, "--map", m}).out == "D=0 L=0 M=0\n");
  }
  {
    const auto p = d.write("P.nwk", "((a11,c11),b11);\n");
    const auto pm = d.write("pg.tsv", kPg);
    const auto r = drecon_run({"reconcile", "--gene", g, "--species", s, "--map", m, "--protein", p, "--pmap", pm,
                               "--out", d / "rec"});
    CHECK(r.code == 0);
    CHECK(r.out == "D=1 L=3 M=4\nC=0 L=0 M=0\nMM=4\n");
    CHECK(slurp(d / "rec/G.labeled.nwk") == "((a1,c1)Spec,b1)Dup;\n");
    CHECK(slurp(d / "rec/P.labeled.nwk") == "((a11,c11)Spec,b11)Dup;\n");
    const auto losses = slurp(d / "rec/losses.tsv");
    CHECK(std::count(losses.begin(), losses.end(), '\n') == 4);
  }
}

TEST_CASE("reconcile errors map to exit codes") {
  TempDir d;
  const auto g = d.write("G.nwk", "((a1,c1),b1);\n");
  const auto s = d.write("S.nwk", "((a,b),c);\n");
  {
    const auto m = d.write("short.tsv", "a1\ta\nb1\tb\n");
    const auto r = drecon_run({"reconcile", "--gene", g, "--species", s, "--map", m});
    CHECK(r.code == 4);
    CHECK(r.err.find("c1") != std::string::npos);
  }
  CHECK(drecon_run({"reconcile", "--gene", d / "missing.nwk", "--species", s, "--infer-map"}).code == 2);
  {
    const auto bad = d.write("bad.nwk", "((a1,c1),b1;\n");
    CHECK(drecon_run({"reconcile", "--gene", bad, "--species", s, "--infer-map"}).code == 3);
  }
}

TEST_CASE("correct: single instance") {
  TempDir d;
  const auto s = d.write("S.nwk", "((a,b),c);\n");
  const auto m = d.write("gs.tsv", kGs);
  const auto pm = d.write("pg.tsv", kPg);
  {
    const auto p = d.write("P.nwk", "((a11,b11),c11);\n");
    const auto r = drecon_run({"correct", "--protein", p, "--species", s, "--pmap", pm, "--map", m, "--no-timing"});
    CHECK(r.code == 0);
    CHECK(r.out == "((a1,b1),c1);\n" + std::string(kCorrectionHeader) + "\nP\t3\tMM\t0\t0\t0\t0\t0\t0\t0\t0.000\n");
  }
  {
    const auto p = d.write("P2.nwk", "((a11,c11),b11);\n");
    const auto r = drecon_run({"correct", "--protein", p, "--species", s, "--pmap", pm, "--map", m, "--no-timing",
                               "--out", d / "G_opt.nwk", "--report", d / "report.tsv"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    CHECK(slurp(d / "G_opt.nwk") == "((a1,c1),b1);\n");
    std::istringstream in(slurp(d / "report.tsv"));
    const auto rows = read_correction_rows(in);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].modified);
    CHECK(rows[0].reduction() == 0);
    CHECK(rows[0].baseline == 4);
  }
  {
    const auto p = d.write("P3.nwk", "(a11,a12);\n");
    const auto two = d.write("two.tsv", "a11\ta1\na12\ta1\n");
    CHECK(drecon_run({"correct", "--protein", p, "--species", s, "--pmap", two, "--map", m}).code == 5);
  }
}

TEST_CASE("correct: modified instance reports the summed deltas") {
  const CostSpec spec = CostSpec::parse("CM");
  std::optional<GroundTruth> found;
  for (std::uint64_t seed = 1; seed <= 3000 && !found; ++seed) {
    SimConfig cfg;
    cfg.species = 3 + seed % 6;
    cfg.duplication = 0.3;
    cfg.loss = 0.3;
    cfg.creation = 0.2;
    cfg.protein_loss = 0.3;
    cfg.one_protein_per_gene = true;
    cfg.seed = seed;
    auto t = simulate(cfg);
    if (t.proteins.leaf_count() <= 12 && correct_gene_tree(t.proteins, t.species, t.g, t.s, spec).report.modified)
      found = std::move(t);
  }
  REQUIRE(found);
  TempDir d;
  cli::write_instance(d / "inst", *found);
  const auto expected = correct_gene_tree(found->proteins, found->species, found->g, found->s, spec);
  const auto r = drecon_run({"correct", "--protein", d / "inst/P.nwk", "--species", d / "inst/S.nwk", "--pmap",
                             d / "inst/pg.tsv", "--map", d / "inst/gs.tsv", "--cost", "CM", "--report",
                             d / "report.tsv"});
  REQUIRE(r.code == 0);
  CHECK(r.out == serialize_newick(expected.gene_tree) + "\n");
  std::istringstream in(slurp(d / "report.tsv"));
  const auto rows = read_correction_rows(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].modified);
  CHECK(rows[0].reduction() > 0);
  CHECK(rows[0].reduction() == expected.report.total_delta());
  CHECK(rows[0].moves == expected.report.applied.size());
}

TEST_CASE("correct: batch directory, stats and determinism") {
  TempDir d;
  const auto sim = drecon_run({"simulate", "--out", d / "batch", "--species", "5", "--dup", "0.2", "--loss", "0.2",
                               "--creation", "0.2", "--protein-loss", "0.2", "--seed", "11", "--count", "3",
                               "--one-protein-per-gene"});
  REQUIRE(sim.code == 0);
  CHECK(fs::exists(d / "batch/inst0003/P.nwk"));

  const auto first = drecon_run({"correct", "--dir", d / "batch", "--no-timing", "--summary", d / "summary.tsv"});
  REQUIRE(first.code == 0);
  std::istringstream rows_in(first.out.substr(0, first.out.find("\n\n")));
  const auto rows = read_correction_rows(rows_in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].instance == "inst0001");
  CHECK(rows[2].instance == "inst0003");
  CHECK(first.out.find("(1) modified") != std::string::npos);
  for (const char* name : {"inst0001", "inst0002", "inst0003"}) {
    CHECK(fs::exists(d / (std::string("batch/") + name + "/G_opt.nwk")));
    CHECK(fs::exists(d / (std::string("batch/") + name + "/report.tsv")));
  }
  const auto summary = slurp(d / "summary.tsv");
  CHECK(summary.rfind("bucket\ttrees", 0) == 0);

  const auto reports = snapshot(d / "batch");
  const auto second = drecon_run({"correct", "--dir", d / "batch", "--no-timing", "--jobs", "3"});
  CHECK(second.out == first.out);
  CHECK(snapshot(d / "batch") == reports);

  const auto stats = drecon_run({"stats", "--dir", d / "batch", "--tsv", d / "stats.tsv"});
  CHECK(stats.code == 0);
  CHECK(stats.out.find("all") != std::string::npos);
  CHECK(slurp(d / "stats.tsv") == summary);

  fs::create_directories(d / "empty");
  CHECK(drecon_run({"stats", "--dir", d / "empty"}).code == 2);
  CHECK(drecon_run({"correct", "--dir", d / "empty"}).code == 2);
}

TEST_CASE("assemble") {
  TempDir d;
  {
    const auto in = d.write("family.nwk", "(x11);\n(x12);\n");
    const auto r = drecon_run({"assemble", "--input", in, "--spans", d / "spans.tsv"});
    CHECK(r.code == 0);
    CHECK(r.out == "(x11,x12)Creat;\n");
    CHECK(slurp(d / "spans.tsv") == "class\tspan\tleaves\nS1\t{P1}\tx11\nS2\t{P2}\tx12\n");
  }
  {
    const auto in = d.write("pair.nwk", "(x11,y11);\n(x12,y12);\n");
    CHECK(drecon_run({"assemble", "--input", in, "--out", d / "P.nwk"}).code == 0);
    CHECK(canonical_form(parse_newick(slurp(d / "P.nwk"))) == "((x11,y11),(x12,y12))Creat");
  }
  {
    const auto in = d.write("clash.nwk", "((a,b),c);\n((a,c),b);\n");
    CHECK(drecon_run({"assemble", "--input", in}).code == 6);
  }
}

TEST_CASE("solve-exact") {
  TempDir d;
  const auto p = d.write("P.nwk", "((a11,c11),b11);\n");
  const auto s = d.write("S.nwk", "((a,b),c);\n");
  const auto m = d.write("gs.tsv", kGs);
  const auto pm = d.write("pg.tsv", kPg);
  const auto r = drecon_run({"solve-exact", "--protein", p, "--species", s, "--pmap", pm, "--map", m});
  CHECK(r.code == 0);
  CHECK(r.out == "((a1,b1),c1);\nMM=4\n");
  CHECK(drecon_run({"solve-exact", "--protein", p, "--species", s, "--infer-map"}).out == r.out);
  CHECK(drecon_run({"solve-exact", "--protein", p, "--species", s, "--infer-map", "--cap", "2"}).code == 7);
}

TEST_CASE("simulate") {
  TempDir d;
  const std::vector<std::string> base{"simulate", "--species", "6", "--dup", "0.2", "--loss", "0.2",
                                      "--creation", "0.3", "--protein-loss", "0.2", "--seed", "7"};
  auto with_out = [&](const std::string& out) {
    auto args = base;
    args.insert(args.end(), {"--out", out});
    return args;
  };
  REQUIRE(drecon_run(with_out(d / "one")).code == 0);
  REQUIRE(drecon_run(with_out(d / "two")).code == 0);
  const auto one = snapshot(d / "one");
  CHECK(one == snapshot(d / "two"));
  for (const char* f : {"S.nwk", "G.nwk", "P.nwk", "gs.tsv", "pg.tsv", "truth.tsv"}) CHECK(one.count(f) == 1);

  ::setenv("DRECON_SEED", "8", 1);
  REQUIRE(drecon_run(with_out(d / "env")).code == 0);
  ::unsetenv("DRECON_SEED");
  auto eight = base;
  eight[eight.size() - 1] = "8";
  eight.insert(eight.end(), {"--out", d / "eight"});
  REQUIRE(drecon_run(eight).code == 0);
  CHECK(snapshot(d / "env") == snapshot(d / "eight"));
  CHECK(snapshot(d / "env") != one);

  const auto r = drecon_run({"simulate", "--out", d / "doomed", "--species", "3", "--loss", "0.99", "--retries", "0"});
  CHECK(r.code == 8);
  CHECK(drecon_run({"simulate", "--out", d / "bad", "--loss", "1.5"}).code == 1);
}
