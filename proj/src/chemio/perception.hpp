#pragma once

#include "sgc/chemio.hpp"

namespace sgc::chem::detail {

/// Demotes aromatic-typed bonds that do not close a ring made only of
/// aromatic-typed bonds to single bonds.
void perceive_aromaticity(MolecularSystem& system);

/// Fills degree, hydrogen counts, hybridization and the aromatic flag from
/// the bond table. Implicit hydrogens come from a default-valence model when
/// `implicit_from_valence` is set, otherwise they are left at zero.
void assign_atom_properties(MolecularSystem& system, bool implicit_from_valence);

/// Removes hydrogen atoms. Their count is kept on the heavy atoms as implicit
/// hydrogens; degree drops accordingly.
void remove_hydrogens(MolecularSystem& system);

/// Keeps atoms with keep[i] set, remapping bonds and ligand count.
void filter_atoms(MolecularSystem& system, const std::vector<bool>& keep);

}  // namespace sgc::chem::detail
