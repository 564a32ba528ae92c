#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "sgc/diffcore.hpp"
#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void get_bytes(std::istream& in, void* dst, std::size_t n) {
  if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
    throw IoError("truncated checkpoint");
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  get_bytes(in, &v, sizeof v);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 28)) throw IoError("checkpoint string length out of range");
  std::string s(n, '\0');
  get_bytes(in, s.data(), n);
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterSet& params) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_string(out, metadata);
  put_u32(out, static_cast<std::uint32_t>(params.items().size()));
  std::vector<float> buf;
  for (const auto& p : params.items()) {
    put_string(out, p.name);
    const Tensor& t = p.var.value();
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    buf.assign(t.data().begin(), t.data().end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.metadata = get_string(in);
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t r = 0; r < count; ++r) {
    std::string name = get_string(in);
    const std::uint32_t rank = get_u32(in);
    if (rank == 0 || rank > 2) throw IoError("checkpoint tensor '" + name + "' has rank " +
                                             std::to_string(rank));
    std::size_t rows = 1, cols = get_u32(in);
    if (rank == 2) {
      rows = cols;
      cols = get_u32(in);
    }
    if (rows * cols > (1u << 28)) throw IoError("checkpoint tensor too large");
    std::vector<float> buf(rows * cols);
    get_bytes(in, buf.data(), buf.size() * sizeof(float));
    ck.tensors.emplace_back(std::move(name),
                            Tensor(rows, cols, std::vector<Real>(buf.begin(), buf.end())));
  }
  return ck;
}

void load_parameters(ParameterSet& params, const Checkpoint& checkpoint) {
  if (checkpoint.tensors.size() != params.items().size())
    throw ConfigError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                      " tensors, model expects " + std::to_string(params.items().size()));
  for (const auto& [name, t] : checkpoint.tensors) {
    ad::Var v = params.get(name);
    if (!v.value().same_shape(t))
      throw ConfigError("checkpoint tensor '" + name + "' has shape " + t.shape_string() +
                        ", model expects " + v.value().shape_string());
    v.mutable_value() = t;
  }
}

}  // namespace sgc::inline SGC_PRECISION_TAG
