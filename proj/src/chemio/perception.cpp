#include "perception.hpp"

#include <cmath>
#include <deque>
#include <set>
#include <utility>

#include "sgc/error.hpp"

namespace sgc::chem {

void MolecularSystem::validate() const {
  const std::size_t n = atoms.size();
  if (n_ligand == 0) throw Error(ErrorKind::generic, "system '" + sample_id + "' has no ligand atoms");
  if (n_ligand > n) throw Error(ErrorKind::generic, "ligand count exceeds atom count");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond& b : bonds) {
    if (b.i >= n || b.j >= n) throw Error(ErrorKind::generic, "bond index out of range");
    if (b.i == b.j) throw Error(ErrorKind::generic, "self bond on atom " + std::to_string(b.i));
    auto key = std::minmax(b.i, b.j);
    if (!seen.insert(key).second)
      throw Error(ErrorKind::generic, "duplicate bond " + std::to_string(key.first) + "-" +
                                          std::to_string(key.second));
  }
  for (const Atom& a : atoms) {
    if (a.element < 1) throw Error(ErrorKind::generic, "atom with invalid element");
    if (a.implicit_hydrogens > a.total_hydrogens || a.degree < 0)
      throw Error(ErrorKind::generic, "inconsistent hydrogen or degree counts");
    for (double c : a.position)
      if (!std::isfinite(c)) throw Error(ErrorKind::generic, "non-finite coordinate");
  }
}

namespace detail {
namespace {

int default_valence(int element, int charge) {
  switch (element) {
    case 5: return 3 - charge;   // B
    case 6: return 4 - std::abs(charge);
    case 7: return 3 + charge;   // N
    case 8: return 2 + charge;   // O
    case 15: return 3 + charge;  // P
    case 16: return 2 + charge;  // S
    case 34: return 2 + charge;  // Se
    case 9:
    case 17:
    case 35:
    case 53: return 1 + charge;
    case 14: return 4;
    default: return -1;
  }
}

// Hypervalent alternatives for third-row elements.
int expand_valence(int element, int valence, int needed) {
  if (element == 16 || element == 34) {
    for (int v : {2, 4, 6})
      if (v >= needed && v >= valence) return v;
  } else if (element == 15) {
    for (int v : {3, 5})
      if (v >= needed && v >= valence) return v;
  }
  return valence;
}

double bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::single: return 1.0;
    case BondOrder::double_: return 2.0;
    case BondOrder::triple: return 3.0;
    case BondOrder::aromatic: return 1.5;
  }
  return 1.0;
}

}  // namespace

void perceive_aromaticity(MolecularSystem& system) {
  const std::size_t n = system.atoms.size();
  std::vector<std::vector<std::size_t>> aromatic_adj(n);
  for (std::size_t b = 0; b < system.bonds.size(); ++b)
    if (system.bonds[b].order == BondOrder::aromatic) {
      aromatic_adj[system.bonds[b].i].push_back(b);
      aromatic_adj[system.bonds[b].j].push_back(b);
    }

  std::vector<bool> in_ring(system.bonds.size(), false);
  for (std::size_t b = 0; b < system.bonds.size(); ++b) {
    const Bond& bond = system.bonds[b];
    if (bond.order != BondOrder::aromatic) continue;
    // The bond lies on an all-aromatic ring iff its endpoints stay connected
    // through aromatic bonds once the bond itself is removed.
    std::vector<bool> visited(n, false);
    std::deque<std::size_t> queue{bond.i};
    visited[bond.i] = true;
    bool found = false;
    while (!queue.empty() && !found) {
      std::size_t a = queue.front();
      queue.pop_front();
      for (std::size_t other : aromatic_adj[a]) {
        if (other == b) continue;
        const Bond& ob = system.bonds[other];
        std::size_t next = ob.i == a ? ob.j : ob.i;
        if (next == bond.j) {
          found = true;
          break;
        }
        if (!visited[next]) {
          visited[next] = true;
          queue.push_back(next);
        }
      }
    }
    in_ring[b] = found;
  }
  for (std::size_t b = 0; b < system.bonds.size(); ++b)
    if (system.bonds[b].order == BondOrder::aromatic && !in_ring[b])
      system.bonds[b].order = BondOrder::single;
}

void assign_atom_properties(MolecularSystem& system, bool implicit_from_valence) {
  const std::size_t n = system.atoms.size();
  std::vector<int> degree(n, 0), explicit_h(n, 0), n_double(n, 0), n_triple(n, 0),
      n_aromatic(n, 0);
  std::vector<double> valence(n, 0.0);
  for (const Bond& b : system.bonds) {
    for (std::size_t end : {b.i, b.j}) {
      std::size_t other = end == b.i ? b.j : b.i;
      ++degree[end];
      if (system.atoms[other].element == 1) ++explicit_h[end];
      valence[end] += bond_valence(b.order);
      if (b.order == BondOrder::double_) ++n_double[end];
      if (b.order == BondOrder::triple) ++n_triple[end];
      if (b.order == BondOrder::aromatic) ++n_aromatic[end];
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    Atom& a = system.atoms[i];
    a.degree = degree[i];
    a.is_aromatic = n_aromatic[i] > 0;

    int implicit = 0;
    if (implicit_from_valence && a.element != 1) {
      int dv = default_valence(a.element, a.formal_charge);
      if (dv >= 0) {
        int used = static_cast<int>(std::ceil(valence[i] - 1e-9));
        dv = expand_valence(a.element, dv, used);
        implicit = std::max(0, dv - used - a.radical_electrons);
      }
    }
    a.implicit_hydrogens = implicit;
    a.total_hydrogens = explicit_h[i] + implicit;

    if (a.element == 1) {
      a.hybridization = Hybridization::s;
    } else if (n_triple[i] > 0 || n_double[i] >= 2) {
      a.hybridization = Hybridization::sp;
    } else if (n_double[i] == 1 || n_aromatic[i] > 0) {
      a.hybridization = Hybridization::sp2;
    } else {
      const int steric = degree[i] + implicit;
      if (steric == 0) {
        a.hybridization = Hybridization::other;
      } else if ((a.element == 5 || a.element == 13) && steric == 3) {
        a.hybridization = Hybridization::sp2;
      } else if (steric <= 4) {
        a.hybridization = Hybridization::sp3;
      } else if (steric == 5) {
        a.hybridization = Hybridization::sp3d;
      } else if (steric == 6) {
        a.hybridization = Hybridization::sp3d2;
      } else {
        a.hybridization = Hybridization::other;
      }
    }
  }
}

void filter_atoms(MolecularSystem& system, const std::vector<bool>& keep) {
  std::vector<std::size_t> remap(system.atoms.size(), SIZE_MAX);
  std::vector<Atom> atoms;
  std::size_t n_ligand = 0;
  for (std::size_t i = 0; i < system.atoms.size(); ++i) {
    if (!keep[i]) continue;
    remap[i] = atoms.size();
    atoms.push_back(std::move(system.atoms[i]));
    if (i < system.n_ligand) ++n_ligand;
  }
  std::vector<Bond> bonds;
  for (const Bond& b : system.bonds)
    if (remap[b.i] != SIZE_MAX && remap[b.j] != SIZE_MAX)
      bonds.push_back({remap[b.i], remap[b.j], b.order});
  system.atoms = std::move(atoms);
  system.bonds = std::move(bonds);
  system.n_ligand = n_ligand;
}

void remove_hydrogens(MolecularSystem& system) {
  std::vector<bool> keep(system.atoms.size(), true);
  for (std::size_t i = 0; i < system.atoms.size(); ++i)
    if (system.atoms[i].element == 1) keep[i] = false;
  for (const Bond& b : system.bonds) {
    const bool hi = system.atoms[b.i].element == 1, hj = system.atoms[b.j].element == 1;
    if (hi && !hj) {
      ++system.atoms[b.j].implicit_hydrogens;
      --system.atoms[b.j].degree;
    } else if (hj && !hi) {
      ++system.atoms[b.i].implicit_hydrogens;
      --system.atoms[b.i].degree;
    }
  }
  filter_atoms(system, keep);
}

}  // namespace detail
}  // namespace sgc::chem
