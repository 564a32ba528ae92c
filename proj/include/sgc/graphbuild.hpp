#pragma once

// Distance matrix and multi-edge-type adjacency tensor for one system, in the
// ligand-first block layout.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sgc/chemio.hpp"

namespace sgc::graph {

/// Half-open distance interval (lower, upper] in Å.
struct DistanceBin {
  double lower = 0.0;
  double upper = 0.0;
};

struct EdgeSchema {
  std::vector<chem::BondOrder> bond_types{chem::BondOrder::single, chem::BondOrder::double_,
                                          chem::BondOrder::triple, chem::BondOrder::aromatic};
  std::vector<DistanceBin> distance_bins{{0.0, 2.0}, {2.0, 2.5}, {2.5, 3.0}, {3.0, 4.5}};

  std::size_t n_bond_types() const { return bond_types.size(); }
  std::size_t n_edge_types() const { return bond_types.size() + distance_bins.size(); }

  /// Throws ConfigError unless bins are disjoint, increasing and finite.
  void validate() const;

  bool operator==(const EdgeSchema&) const;
};

inline bool operator==(const DistanceBin& a, const DistanceBin& b) {
  return a.lower == b.lower && a.upper == b.upper;
}

/// Practical bound for dense N x N x N_et storage.
inline constexpr std::size_t kMaxAtoms = 4000;

struct GraphTensors {
  chem::FeatureMatrix x;
  std::size_t n = 0;
  std::size_t n_edge_types = 0;
  std::size_t n_bond_types = 0;  // leading slices that encode bonds
  std::size_t n_ligand = 0;
  std::vector<std::uint8_t> adjacency;  // [i][j][e], row-major
  std::vector<float> distance;          // [i][j]

  std::uint8_t a(std::size_t i, std::size_t j, std::size_t e) const {
    return adjacency[(i * n + j) * n_edge_types + e];
  }
  float r(std::size_t i, std::size_t j) const { return distance[i * n + j]; }

  /// Neighbor pairs (i, j), i != j, of slice e in row-major order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges(std::size_t e) const;
};

std::vector<float> build_distance_matrix(const chem::MolecularSystem& system);

GraphTensors build_adjacency(const chem::MolecularSystem& system, const std::vector<float>& r,
                             const EdgeSchema& schema, chem::FeatureMatrix x);

/// featurize + distance matrix + adjacency in one call.
GraphTensors build_graph(const chem::MolecularSystem& system, const EdgeSchema& schema,
                         const chem::ElementVocab& vocab);

/// Copy retaining only the bond slices.
GraphTensors bond_only_view(const GraphTensors& g);

/// Restriction to the ligand block (rows and columns [0, n_ligand)).
GraphTensors ligand_block(const GraphTensors& g);

/// Binary cache: "SGC1", u32 N, f_in, N_et, n_bond_types, n_ligand, then
/// float32 x (row-major), bit-packed A ([i][j][e] order, LSB first), float32 R.
void write_graph(std::ostream& out, const GraphTensors& g);
GraphTensors read_graph(std::istream& in);

}  // namespace sgc::graph
