#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "perception.hpp"
#include "sgc/chemio.hpp"
#include "sgc/error.hpp"

namespace sgc::chem {
namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  bool at_end_of_content() const {
    for (std::size_t i = pos_; i < text_.size(); ++i)
      if (!std::isspace(static_cast<unsigned char>(text_[i]))) return false;
    return true;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::string_view field(std::string_view line, std::size_t start, std::size_t len) {
  if (start >= line.size()) return {};
  return line.substr(start, std::min(len, line.size() - start));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

int optional_int(std::string_view s, std::size_t line_no, const char* what) {
  if (trim(s).empty()) return 0;
  int v = 0;
  if (!parse_int(s, v)) throw ParseError(std::string("malformed ") + what, line_no);
  return v;
}

// Atom-block charge column: 1..3 → +3..+1, 4 → doublet radical, 5..7 → -1..-3.
void apply_charge_code(Atom& atom, int code) {
  switch (code) {
    case 1: atom.formal_charge = 3; break;
    case 2: atom.formal_charge = 2; break;
    case 3: atom.formal_charge = 1; break;
    case 4: atom.radical_electrons = 1; break;
    case 5: atom.formal_charge = -1; break;
    case 6: atom.formal_charge = -2; break;
    case 7: atom.formal_charge = -3; break;
    default: break;
  }
}

int radical_electrons_from_multiplicity(int code) {
  switch (code) {
    case 1: return 2;  // singlet
    case 2: return 1;  // doublet
    case 3: return 2;  // triplet
    default: return 0;
  }
}

// "M  CHG  n aaa vvv aaa vvv ..."
template <class Apply>
void parse_property_pairs(std::string_view line, std::size_t n_atoms, std::size_t line_no,
                          Apply apply) {
  int count = 0;
  if (!parse_int(field(line, 6, 3), count) || count < 0 || count > 8)
    throw ParseError("malformed property count", line_no);
  for (int k = 0; k < count; ++k) {
    int atom = 0, value = 0;
    if (!parse_int(field(line, 10 + 8 * k, 3), atom) ||
        !parse_int(field(line, 14 + 8 * k, 3), value))
      throw ParseError("malformed property entry", line_no);
    if (atom < 1 || static_cast<std::size_t>(atom) > n_atoms)
      throw ParseError("property references atom " + std::to_string(atom) + " out of range",
                       line_no);
    apply(static_cast<std::size_t>(atom - 1), value);
  }
}

}  // namespace

std::vector<MolecularSystem> parse_sdf(std::string_view text, const ParseOptions& options) {
  std::vector<MolecularSystem> out;
  LineReader reader(text);
  std::string_view line;

  while (!reader.at_end_of_content()) {
    MolecularSystem mol;

    // Header block: title, program, comment.
    if (!reader.next(line)) break;
    mol.sample_id = std::string(trim(line));
    for (int k = 0; k < 2; ++k)
      if (!reader.next(line)) throw ParseError("truncated header block", reader.line_no());

    if (!reader.next(line)) throw ParseError("missing counts line", reader.line_no() + 1);
    const std::size_t counts_line = reader.line_no();
    if (line.find("V3000") != std::string_view::npos)
      throw ParseError("V3000 molfiles are not supported", counts_line);
    int n_atoms = 0, n_bonds = 0;
    if (!parse_int(field(line, 0, 3), n_atoms) || !parse_int(field(line, 3, 3), n_bonds) ||
        n_atoms < 0 || n_bonds < 0)
      throw ParseError("malformed counts line", counts_line);

    mol.atoms.resize(static_cast<std::size_t>(n_atoms));
    for (int a = 0; a < n_atoms; ++a) {
      if (!reader.next(line)) throw ParseError("truncated atom block", reader.line_no() + 1);
      const std::size_t ln = reader.line_no();
      Atom& atom = mol.atoms[static_cast<std::size_t>(a)];
      if (line.size() < 34) throw ParseError("truncated atom line", ln);
      for (int c = 0; c < 3; ++c)
        if (!parse_double(field(line, 10 * static_cast<std::size_t>(c), 10), atom.position[c]))
          throw ParseError("malformed coordinate", ln);
      std::string_view symbol = trim(field(line, 31, 3));
      atom.element = element_from_symbol(symbol);
      if (atom.element == 0)
        throw ParseError("unknown element symbol '" + std::string(symbol) + "'", ln);
      apply_charge_code(atom, optional_int(field(line, 36, 3), ln, "charge field"));
    }

    std::vector<std::vector<int>> seen(static_cast<std::size_t>(n_atoms));
    for (int b = 0; b < n_bonds; ++b) {
      if (!reader.next(line)) throw ParseError("truncated bond block", reader.line_no() + 1);
      const std::size_t ln = reader.line_no();
      int i = 0, j = 0, type = 0;
      if (!parse_int(field(line, 0, 3), i) || !parse_int(field(line, 3, 3), j) ||
          !parse_int(field(line, 6, 3), type))
        throw ParseError("malformed bond line", ln);
      if (i < 1 || j < 1 || i > n_atoms || j > n_atoms)
        throw ParseError("bond references atom index out of range (V2000 is 1-indexed)", ln);
      if (i == j) throw ParseError("bond joins an atom to itself", ln);
      Bond bond{static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1),
                BondOrder::single};
      switch (type) {
        case 1: bond.order = BondOrder::single; break;
        case 2: bond.order = BondOrder::double_; break;
        case 3: bond.order = BondOrder::triple; break;
        case 4: bond.order = BondOrder::aromatic; break;
        default: throw ParseError("unsupported bond type " + std::to_string(type), ln);
      }
      auto& si = seen[bond.i];
      for (int other : si)
        if (static_cast<std::size_t>(other) == bond.j) throw ParseError("duplicate bond", ln);
      si.push_back(static_cast<int>(bond.j));
      seen[bond.j].push_back(static_cast<int>(bond.i));
      mol.bonds.push_back(bond);
    }

    // Properties block, then data items up to the record separator.
    bool charges_reset = false;
    bool in_properties = true;
    while (reader.next(line)) {
      const std::size_t ln = reader.line_no();
      if (line.substr(0, 4) == "$$$$") break;
      if (!in_properties) continue;
      if (line.substr(0, 6) == "M  END") {
        in_properties = false;
        continue;
      }
      const bool chg = line.substr(0, 6) == "M  CHG";
      const bool rad = line.substr(0, 6) == "M  RAD";
      if ((chg || rad) && !charges_reset) {
        // Any CHG or RAD entry supersedes all atom-block charges and radicals.
        for (Atom& a : mol.atoms) {
          a.formal_charge = 0;
          a.radical_electrons = 0;
        }
        charges_reset = true;
      }
      if (chg) {
        parse_property_pairs(line, mol.atoms.size(), ln, [&](std::size_t a, int v) {
          mol.atoms[a].formal_charge = v;
        });
      } else if (rad) {
        parse_property_pairs(line, mol.atoms.size(), ln, [&](std::size_t a, int v) {
          mol.atoms[a].radical_electrons = radical_electrons_from_multiplicity(v);
        });
      } else if (line.substr(0, 1) == ">") {
        in_properties = false;
      }
    }
    if (mol.sample_id.empty()) mol.sample_id = "mol" + std::to_string(out.size());
    detail::perceive_aromaticity(mol);
    detail::assign_atom_properties(mol, /*implicit_from_valence=*/true);
    mol.n_ligand = mol.atoms.size();
    if (options.strip_hydrogens) detail::remove_hydrogens(mol);
    out.push_back(std::move(mol));
  }
  return out;
}

std::string write_sdf(const std::vector<MolecularSystem>& systems) {
  std::string out;
  char buf[128];
  for (const MolecularSystem& mol : systems) {
    out += mol.sample_id + "\n  sgc\n\n";
    std::snprintf(buf, sizeof buf, "%3zu%3zu  0  0  0  0  0  0  0  0999 V2000\n",
                  mol.atoms.size(), mol.bonds.size());
    out += buf;
    for (const Atom& a : mol.atoms) {
      std::snprintf(buf, sizeof buf, "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n",
                    a.position[0], a.position[1], a.position[2],
                    element_symbol(a.element).c_str());
      out += buf;
    }
    for (const Bond& b : mol.bonds) {
      int type = 1;
      switch (b.order) {
        case BondOrder::single: type = 1; break;
        case BondOrder::double_: type = 2; break;
        case BondOrder::triple: type = 3; break;
        case BondOrder::aromatic: type = 4; break;
      }
      std::snprintf(buf, sizeof buf, "%3zu%3zu%3d  0\n", b.i + 1, b.j + 1, type);
      out += buf;
    }
    for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
      if (mol.atoms[a].formal_charge != 0) {
        std::snprintf(buf, sizeof buf, "M  CHG  1 %3zu %3d\n", a + 1, mol.atoms[a].formal_charge);
        out += buf;
      }
      if (mol.atoms[a].radical_electrons == 1) {
        std::snprintf(buf, sizeof buf, "M  RAD  1 %3zu   2\n", a + 1);
        out += buf;
      }
    }
    out += "M  END\n$$$$\n";
  }
  return out;
}

}  // namespace sgc::chem
