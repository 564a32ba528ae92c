#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "sgc/error.hpp"
#include "sgc/graphbuild.hpp"

namespace sgc::graph {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr char kMagic[4] = {'S', 'G', 'C', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("truncated graph record");
  return v;
}

void get_bytes(std::istream& in, void* dst, std::size_t n) {
  if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
    throw IoError("truncated graph record");
}

}  // namespace

void write_graph(std::ostream& out, const GraphTensors& g) {
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(g.n));
  put_u32(out, static_cast<std::uint32_t>(g.x.cols));
  put_u32(out, static_cast<std::uint32_t>(g.n_edge_types));
  put_u32(out, static_cast<std::uint32_t>(g.n_bond_types));
  put_u32(out, static_cast<std::uint32_t>(g.n_ligand));
  out.write(reinterpret_cast<const char*>(g.x.data.data()),
            static_cast<std::streamsize>(g.x.data.size() * sizeof(float)));
  std::vector<std::uint8_t> packed((g.adjacency.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < g.adjacency.size(); ++k)
    if (g.adjacency[k]) packed[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  out.write(reinterpret_cast<const char*>(g.distance.data()),
            static_cast<std::streamsize>(g.distance.size() * sizeof(float)));
  if (!out) throw IoError("failed writing graph record");
}

GraphTensors read_graph(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad graph record magic");
  GraphTensors g;
  g.n = get_u32(in);
  g.x.rows = g.n;
  g.x.cols = get_u32(in);
  g.n_edge_types = get_u32(in);
  g.n_bond_types = get_u32(in);
  g.n_ligand = get_u32(in);
  if (g.n > kMaxAtoms || g.n_bond_types > g.n_edge_types || g.n_ligand > g.n)
    throw IoError("graph record header out of range");
  g.x.data.resize(g.n * g.x.cols);
  get_bytes(in, g.x.data.data(), g.x.data.size() * sizeof(float));
  g.adjacency.assign(g.n * g.n * g.n_edge_types, 0);
  std::vector<std::uint8_t> packed((g.adjacency.size() + 7) / 8);
  get_bytes(in, packed.data(), packed.size());
  for (std::size_t k = 0; k < g.adjacency.size(); ++k)
    g.adjacency[k] = (packed[k / 8] >> (k % 8)) & 1u;
  g.distance.resize(g.n * g.n);
  get_bytes(in, g.distance.data(), g.distance.size() * sizeof(float));
  return g;
}

}  // namespace sgc::graph
