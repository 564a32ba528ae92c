#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include "perception.hpp"
#include "sgc/chemio.hpp"
#include "sgc/error.hpp"

namespace sgc::chem {
namespace {

std::string_view column(std::string_view line, std::size_t start, std::size_t len) {
  if (start >= line.size()) return {};
  return line.substr(start, std::min(len, line.size() - start));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool to_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool to_int(std::string_view s, long& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// Columns 79-80: "2+", "1-".
int pdb_charge(std::string_view s) {
  s = trim(s);
  if (s.size() != 2 || !std::isdigit(static_cast<unsigned char>(s[0]))) return 0;
  int magnitude = s[0] - '0';
  return s[1] == '-' ? -magnitude : magnitude;
}

struct RawPdb {
  std::vector<Atom> atoms;
  std::vector<long> serials;
  // CONECT multiplicity keyed by (serial, serial) as listed.
  std::map<std::pair<long, long>, int> conect;
};

RawPdb read_records(std::string_view text) {
  RawPdb raw;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;

    const std::string_view record = column(line, 0, 6);
    if (record == "ENDMDL") break;
    if (record == "ATOM  " || record == "HETATM") {
      const char alt = line.size() > 16 ? line[16] : ' ';
      if (alt != ' ' && alt != 'A' && alt != '1') continue;
      Atom atom;
      for (int c = 0; c < 3; ++c)
        if (!to_double(column(line, 30 + 8 * static_cast<std::size_t>(c), 8), atom.position[c]))
          throw ParseError("malformed coordinates", line_no);
      std::string_view symbol = trim(column(line, 76, 2));
      if (symbol.empty()) throw ParseError("missing element column", line_no);
      atom.element = element_from_symbol(symbol);
      if (atom.element == 0)
        throw ParseError("unknown element symbol '" + std::string(symbol) + "'", line_no);
      atom.formal_charge = pdb_charge(column(line, 78, 2));
      atom.residue_name = std::string(trim(column(line, 17, 3)));
      long serial = 0;
      if (!to_int(column(line, 6, 5), serial)) serial = -static_cast<long>(raw.atoms.size()) - 1;
      raw.serials.push_back(serial);
      raw.atoms.push_back(std::move(atom));
    } else if (record == "CONECT") {
      long from = 0;
      if (!to_int(column(line, 6, 5), from)) throw ParseError("malformed CONECT record", line_no);
      for (std::size_t k = 0; k < 4; ++k) {
        long to = 0;
        if (to_int(column(line, 11 + 5 * k, 5), to)) ++raw.conect[{from, to}];
      }
    }
  }
  return raw;
}

// Builds the system from raw records with the given atom order.
MolecularSystem assemble(RawPdb& raw, const std::vector<std::size_t>& order,
                         std::size_t n_ligand, const ParseOptions& options) {
  MolecularSystem sys;
  sys.n_ligand = n_ligand;
  std::map<long, std::size_t> index_of_serial;
  for (std::size_t k = 0; k < order.size(); ++k) {
    sys.atoms.push_back(raw.atoms[order[k]]);
    index_of_serial.emplace(raw.serials[order[k]], k);
  }

  const std::size_t n = sys.atoms.size();
  std::map<std::pair<std::size_t, std::size_t>, int> explicit_bonds;
  for (const auto& [pair, count] : raw.conect) {
    auto a = index_of_serial.find(pair.first);
    auto b = index_of_serial.find(pair.second);
    if (a == index_of_serial.end() || b == index_of_serial.end() || a->second == b->second)
      continue;
    auto key = std::minmax(a->second, b->second);
    // Writers list each bond from both ends; repeats encode bond order.
    int& order_count = explicit_bonds[key];
    order_count = std::max(order_count, std::min(count, 3));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const bool lig_i = i < n_ligand;
    for (std::size_t j = i + 1; j < n; ++j) {
      auto it = explicit_bonds.find({i, j});
      if (it != explicit_bonds.end()) {
        BondOrder order = it->second >= 3   ? BondOrder::triple
                          : it->second == 2 ? BondOrder::double_
                                            : BondOrder::single;
        sys.bonds.push_back({i, j, order});
        continue;
      }
      if (lig_i != (j < n_ligand)) continue;
      const auto& pi = sys.atoms[i].position;
      const auto& pj = sys.atoms[j].position;
      const double dx = pi[0] - pj[0], dy = pi[1] - pj[1], dz = pi[2] - pj[2];
      const double limit = covalent_radius(sys.atoms[i].element) +
                           covalent_radius(sys.atoms[j].element) + kBondTolerance;
      if (dx * dx + dy * dy + dz * dz <= limit * limit)
        sys.bonds.push_back({i, j, BondOrder::single});
    }
  }

  // Without bond orders a valence model would invent hydrogens, so implicit
  // counts stay at zero for PDB input.
  detail::assign_atom_properties(sys, /*implicit_from_valence=*/false);
  if (options.strip_hydrogens) detail::remove_hydrogens(sys);
  return sys;
}

}  // namespace

MolecularSystem parse_pdb(std::string_view text, std::string_view ligand_resname,
                          const ParseOptions& options) {
  RawPdb raw = read_records(text);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < raw.atoms.size(); ++i)
    if (raw.atoms[i].residue_name == ligand_resname) order.push_back(i);
  const std::size_t n_ligand = order.size();
  if (n_ligand == 0)
    throw ParseError("no atoms with ligand residue name '" + std::string(ligand_resname) + "'");
  for (std::size_t i = 0; i < raw.atoms.size(); ++i)
    if (raw.atoms[i].residue_name != ligand_resname) order.push_back(i);
  MolecularSystem sys = assemble(raw, order, n_ligand, options);
  if (sys.n_ligand == 0) throw ParseError("ligand has no heavy atoms");
  return sys;
}

MolecularSystem parse_pdb_protein(std::string_view text, const ParseOptions& options) {
  RawPdb raw = read_records(text);
  std::vector<std::size_t> order(raw.atoms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return assemble(raw, order, 0, options);
}

MolecularSystem combine_complex(const MolecularSystem& ligand, const MolecularSystem& protein) {
  MolecularSystem out;
  out.sample_id = ligand.sample_id;
  out.labels = ligand.labels;
  // Everything in `ligand` is treated as ligand, everything in `protein` as
  // protein, regardless of their own partitions.
  out.atoms = ligand.atoms;
  out.n_ligand = ligand.atoms.size();
  out.bonds = ligand.bonds;
  const std::size_t offset = out.atoms.size();
  out.atoms.insert(out.atoms.end(), protein.atoms.begin(), protein.atoms.end());
  for (const Bond& b : protein.bonds) out.bonds.push_back({b.i + offset, b.j + offset, b.order});
  return out;
}

MolecularSystem crop_pocket(const MolecularSystem& system, double cutoff) {
  MolecularSystem out = system;
  std::vector<bool> keep(system.atoms.size(), true);
  const double c2 = cutoff * cutoff;
  for (std::size_t p = system.n_ligand; p < system.atoms.size(); ++p) {
    bool near = false;
    for (std::size_t l = 0; l < system.n_ligand && !near; ++l) {
      const auto& a = system.atoms[p].position;
      const auto& b = system.atoms[l].position;
      const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
      near = dx * dx + dy * dy + dz * dz <= c2;
    }
    keep[p] = near;
  }
  detail::filter_atoms(out, keep);
  return out;
}

}  // namespace sgc::chem
