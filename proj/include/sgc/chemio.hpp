#pragma once

// Molecular file ingestion: MDL V2000 SDF, fixed-column PDB, label CSV, and
// per-atom featurization.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sgc::chem {

enum class Hybridization : std::uint8_t { s, sp, sp2, sp3, sp3d, sp3d2, other };
inline constexpr std::size_t kHybridizationCount = 7;

enum class BondOrder : std::uint8_t { single, double_, triple, aromatic };
inline constexpr std::size_t kBondOrderCount = 4;

using Vec3 = std::array<double, 3>;

struct Atom {
  int element = 6;  // atomic number
  int formal_charge = 0;
  Hybridization hybridization = Hybridization::other;
  bool is_aromatic = false;
  int degree = 0;
  int total_hydrogens = 0;
  int implicit_hydrogens = 0;
  int radical_electrons = 0;
  Vec3 position{0.0, 0.0, 0.0};
  std::string residue_name;  // PDB only
};

struct Bond {
  std::size_t i = 0;
  std::size_t j = 0;
  BondOrder order = BondOrder::single;
};

/// One sample. Ligand atoms occupy [0, n_ligand), protein atoms follow.
struct MolecularSystem {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::size_t n_ligand = 0;
  std::string sample_id;
  std::vector<std::optional<double>> labels;

  std::size_t size() const { return atoms.size(); }

  /// Throws sgc::Error when an invariant of the atom/bond tables is broken.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Elements

/// Atomic number for a symbol ("C", "Cl", case-insensitive). 0 if unknown.
int element_from_symbol(std::string_view symbol);
std::string element_symbol(int atomic_number);
/// Single-bond covalent radius in Å (Cordero et al. 2008 table).
double covalent_radius(int atomic_number);

// ---------------------------------------------------------------------------
// Parsing

struct ParseOptions {
  bool strip_hydrogens = false;
};

std::vector<MolecularSystem> parse_sdf(std::string_view text,
                                       const ParseOptions& options = {});

/// Writes V2000 records; aromatic bonds are emitted as bond type 4.
std::string write_sdf(const std::vector<MolecularSystem>& systems);

inline constexpr double kBondTolerance = 0.4;

/// Parses a complex. Atoms whose residue name equals `ligand_resname` form
/// the ligand block. Bonds are inferred within each block from covalent radii
/// (d <= r_a + r_b + kBondTolerance); CONECT pairs are always bonded.
MolecularSystem parse_pdb(std::string_view text, std::string_view ligand_resname,
                          const ParseOptions& options = {});

/// Parses every ATOM/HETATM record as protein (n_ligand = 0 in the result).
MolecularSystem parse_pdb_protein(std::string_view text,
                                  const ParseOptions& options = {});

/// Ligand atoms first, then protein atoms; bond indices are remapped.
MolecularSystem combine_complex(const MolecularSystem& ligand,
                                const MolecularSystem& protein);

/// Drops protein atoms farther than `cutoff` Å from every ligand atom.
MolecularSystem crop_pocket(const MolecularSystem& system, double cutoff);

// ---------------------------------------------------------------------------
// Labels

struct LabelTable {
  std::vector<std::string> tasks;
  std::map<std::string, std::vector<std::optional<double>>> rows;
};

LabelTable load_labels(std::string_view csv);

/// Minimal RFC-4180 reader. Returns rows of fields; `line_of_row` receives the
/// 1-based starting line number of each row when non-null.
std::vector<std::vector<std::string>> read_csv(std::string_view text,
                                               std::vector<std::size_t>* line_of_row = nullptr);

// ---------------------------------------------------------------------------
// Featurization

/// Ordered element vocabulary; one extra trailing slot collects all others.
struct ElementVocab {
  std::vector<int> elements;

  static ElementVocab from_symbols(const std::vector<std::string>& symbols);
  static ElementVocab default_vocab();
  std::vector<std::string> symbols() const;
  std::size_t slot(int atomic_number) const;
  std::size_t width() const { return elements.size() + 1; }
};

/// Row-major float matrix of atom features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Feature width: vocab one-hot (+other) | charge | hybridization one-hot (7) |
/// aromatic | degree | total H | implicit H | radical electrons.
std::size_t feature_width(const ElementVocab& vocab);

FeatureMatrix featurize(const MolecularSystem& system, const ElementVocab& vocab);

}  // namespace sgc::chem
