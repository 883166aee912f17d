#pragma once

#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/tree.hpp"

namespace drecon {

// Leaf-name function from one leafset to another: protein -> gene (g) or
// gene -> species (s).
class LeafMapping {
 public:
  LeafMapping() = default;
  LeafMapping(std::initializer_list<std::pair<const std::string, std::string>> pairs) : pairs_(pairs) {}

  // Rejects a second, different target for the same source.
  void add(std::string source, std::string target) {
    auto [it, inserted] = pairs_.emplace(std::move(source), target);
    if (!inserted && it->second != target)
      throw MappingError("conflicting mapping rows for '" + it->first + "'");
  }

  // Later rows win; used to let explicit files override inferred names.
  void set(std::string source, std::string target) { pairs_[std::move(source)] = std::move(target); }

  std::optional<std::string_view> find(std::string_view source) const {
    auto it = pairs_.find(source);
    if (it == pairs_.end()) return std::nullopt;
    return std::string_view(it->second);
  }

  const std::string& at(std::string_view source) const {
    auto it = pairs_.find(source);
    if (it == pairs_.end()) throw MappingError("no mapping for leaf '" + std::string(source) + "'");
    return it->second;
  }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::map<std::string, std::string, std::less<>>& pairs() const { return pairs_; }

  bool operator==(const LeafMapping&) const = default;

 private:
  std::map<std::string, std::string, std::less<>> pairs_;
};

// Two tab-separated columns per line, source then target. Blank lines and
// lines starting with '#' are skipped.
inline LeafMapping read_mapping_tsv(std::istream& in) {
  LeafMapping m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw MappingError("mapping line " + std::to_string(line_no) + ": expected two tab-separated columns");
    std::string source = line.substr(0, tab);
    std::string target = line.substr(tab + 1);
    if (const auto extra = target.find('\t'); extra != std::string::npos) target.resize(extra);
    if (source.empty() || target.empty())
      throw MappingError("mapping line " + std::to_string(line_no) + ": empty column");
    m.add(std::move(source), std::move(target));
  }
  return m;
}

inline LeafMapping parse_mapping_tsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_mapping_tsv(in);
}

inline void write_mapping_tsv(std::ostream& out, const LeafMapping& m) {
  for (const auto& [source, target] : m.pairs()) out << source << '\t' << target << '\n';
}

// Name convention <species><geneIdx><proteinIdx>, e.g. a31 -> a3 -> a.
// Proteins whose name contains '_' use the part before the last '_' as the
// gene (the simulator's form for multi-digit indices).
inline std::string infer_gene_name(std::string_view protein) {
  if (const auto cut = protein.rfind('_'); cut != std::string_view::npos && cut > 0)
    return std::string(protein.substr(0, cut));
  if (protein.size() < 2) throw MappingError("cannot infer gene of protein '" + std::string(protein) + "'");
  return std::string(protein.substr(0, protein.size() - 1));
}

inline std::string infer_species_name(std::string_view gene) {
  std::size_t end = gene.size();
  while (end > 0 && std::isdigit(static_cast<unsigned char>(gene[end - 1]))) --end;
  if (end == 0 || end == gene.size())
    throw MappingError("cannot infer species of gene '" + std::string(gene) + "'");
  return std::string(gene.substr(0, end));
}

inline LeafMapping infer_protein_gene_mapping(const PhyloTree& proteins) {
  LeafMapping m;
  for (NodeId x : proteins.leaves()) m.add(proteins.name(x), infer_gene_name(proteins.name(x)));
  return m;
}

inline LeafMapping infer_gene_species_mapping(const PhyloTree& genes) {
  LeafMapping m;
  for (NodeId x : genes.leaves()) m.add(genes.name(x), infer_species_name(genes.name(x)));
  return m;
}

// Leaf images of src in dst, indexed by src NodeId (internal entries are
// kNoNode). Rows for names absent from src are ignored.
inline std::vector<NodeId> resolve_leaf_images(const PhyloTree& src, const PhyloTree& dst, const LeafMapping& m) {
  std::vector<NodeId> image(src.size(), kNoNode);
  for (NodeId x : src.leaves()) {
    const std::string& target = m.at(src.name(x));
    auto y = dst.find_leaf(target);
    if (!y)
      throw MappingError("mapping target '" + target + "' of leaf '" + src.name(x) +
                         "' is not a leaf of the target tree");
    image[x] = *y;
  }
  return image;
}

// Names of dst leaves that no src leaf maps onto.
inline std::vector<std::string> unmapped_targets(const PhyloTree& src, const PhyloTree& dst, const LeafMapping& m) {
  std::vector<bool> hit(dst.size(), false);
  for (NodeId x : resolve_leaf_images(src, dst, m)) {
    if (x != kNoNode) hit[x] = true;
  }
  std::vector<std::string> out;
  for (NodeId y : dst.leaves())
    if (!hit[y]) out.push_back(dst.name(y));
  return out;
}

// Fails unless the mapping is one-to-one on the leaves of src.
inline void require_injective(const PhyloTree& src, const LeafMapping& m) {
  std::map<std::string_view, std::string_view> seen;
  for (NodeId x : src.leaves()) {
    const std::string& target = m.at(src.name(x));
    auto [it, inserted] = seen.emplace(target, src.name(x));
    if (!inserted)
      throw BijectionError("leaves '" + std::string(it->second) + "' and '" + src.name(x) + "' both map to '" +
                           target + "'");
  }
}

}  // namespace drecon
