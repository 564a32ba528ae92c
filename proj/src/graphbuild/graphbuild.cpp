#include "sgc/graphbuild.hpp"

#include <cmath>

#include "sgc/error.hpp"

namespace sgc::graph {

void EdgeSchema::validate() const {
  for (std::size_t b = 0; b < distance_bins.size(); ++b) {
    const DistanceBin& bin = distance_bins[b];
    if (!std::isfinite(bin.lower) || !std::isfinite(bin.upper) || bin.lower < 0.0 ||
        bin.upper <= bin.lower)
      throw ConfigError("distance bin " + std::to_string(b) + " is empty or not finite");
    if (b > 0 && bin.lower < distance_bins[b - 1].upper)
      throw ConfigError("distance bins must be disjoint and increasing");
  }
  for (std::size_t i = 0; i < bond_types.size(); ++i)
    for (std::size_t j = i + 1; j < bond_types.size(); ++j)
      if (bond_types[i] == bond_types[j]) throw ConfigError("duplicate bond type in schema");
}

bool EdgeSchema::operator==(const EdgeSchema& o) const {
  return bond_types == o.bond_types && distance_bins == o.distance_bins;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> GraphTensors::edges(std::size_t e) const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j, e)) out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  return out;
}

std::vector<float> build_distance_matrix(const chem::MolecularSystem& system) {
  const std::size_t n = system.atoms.size();
  std::vector<float> r(n * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& p = system.atoms[i].position;
      const auto& q = system.atoms[j].position;
      const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      const auto d = static_cast<float>(std::sqrt(dx * dx + dy * dy + dz * dz));
      r[i * n + j] = d;
      r[j * n + i] = d;
    }
  return r;
}

GraphTensors build_adjacency(const chem::MolecularSystem& system, const std::vector<float>& r,
                             const EdgeSchema& schema, chem::FeatureMatrix x) {
  schema.validate();
  const std::size_t n = system.atoms.size();
  if (n > kMaxAtoms)
    throw ConfigError("system '" + system.sample_id + "' has " + std::to_string(n) +
                      " atoms; dense storage is limited to " + std::to_string(kMaxAtoms));
  if (r.size() != n * n) throw ShapeError("distance matrix does not match atom count");
  if (x.rows != n) throw ShapeError("feature matrix does not match atom count");

  GraphTensors g;
  g.x = std::move(x);
  g.n = n;
  g.n_bond_types = schema.n_bond_types();
  g.n_edge_types = schema.n_edge_types();
  g.n_ligand = system.n_ligand;
  g.distance = r;
  g.adjacency.assign(n * n * g.n_edge_types, 0);

  std::vector<std::uint8_t> bonded(n * n, 0);
  for (const chem::Bond& b : system.bonds) {
    bonded[b.i * n + b.j] = bonded[b.j * n + b.i] = 1;
    for (std::size_t e = 0; e < schema.bond_types.size(); ++e)
      if (schema.bond_types[e] == b.order) {
        g.adjacency[(b.i * n + b.j) * g.n_edge_types + e] = 1;
        g.adjacency[(b.j * n + b.i) * g.n_edge_types + e] = 1;
      }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || bonded[i * n + j]) continue;
      const double d = r[i * n + j];
      for (std::size_t b = 0; b < schema.distance_bins.size(); ++b) {
        const DistanceBin& bin = schema.distance_bins[b];
        if (d > bin.lower && d <= bin.upper) {
          g.adjacency[(i * n + j) * g.n_edge_types + g.n_bond_types + b] = 1;
          break;
        }
      }
    }
  return g;
}

GraphTensors build_graph(const chem::MolecularSystem& system, const EdgeSchema& schema,
                         const chem::ElementVocab& vocab) {
  return build_adjacency(system, build_distance_matrix(system), schema,
                         chem::featurize(system, vocab));
}

GraphTensors bond_only_view(const GraphTensors& g) {
  GraphTensors v;
  v.x = g.x;
  v.n = g.n;
  v.n_bond_types = g.n_bond_types;
  v.n_edge_types = g.n_bond_types;
  v.n_ligand = g.n_ligand;
  v.distance = g.distance;
  v.adjacency.resize(g.n * g.n * v.n_edge_types);
  for (std::size_t p = 0; p < g.n * g.n; ++p)
    for (std::size_t e = 0; e < v.n_edge_types; ++e)
      v.adjacency[p * v.n_edge_types + e] = g.adjacency[p * g.n_edge_types + e];
  return v;
}

GraphTensors ligand_block(const GraphTensors& g) {
  const std::size_t m = g.n_ligand;
  GraphTensors v;
  v.n = m;
  v.n_bond_types = g.n_bond_types;
  v.n_edge_types = g.n_edge_types;
  v.n_ligand = m;
  v.x.rows = m;
  v.x.cols = g.x.cols;
  v.x.data.assign(g.x.data.begin(), g.x.data.begin() + static_cast<std::ptrdiff_t>(m * g.x.cols));
  v.distance.resize(m * m);
  v.adjacency.resize(m * m * g.n_edge_types);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      v.distance[i * m + j] = g.distance[i * g.n + j];
      for (std::size_t e = 0; e < g.n_edge_types; ++e)
        v.adjacency[(i * m + j) * g.n_edge_types + e] = g.adjacency[(i * g.n + j) * g.n_edge_types + e];
    }
  return v;
}

}  // namespace sgc::graph
