#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

namespace sgc::inline SGC_PRECISION_TAG {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr char kMagic[4] = {'S', 'G', 'D', 'S'};
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
    throw IoError("truncated dataset file");
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  get_bytes(in, &v, sizeof v);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 28)) throw IoError("dataset string length out of range");
  std::string s(n, '\0');
  get_bytes(in, s.data(), n);
  return s;
}

}  // namespace

std::size_t Dataset::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].id == id) return i;
  throw ConfigError("sample '" + id + "' not in dataset");
}

Dataset Dataset::subset(const std::vector<std::string>& ids) const {
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < samples.size(); ++i) where.emplace(samples[i].id, i);
  Dataset out;
  out.task_names = task_names;
  out.schema = schema;
  out.element_vocab = element_vocab;
  out.samples.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = where.find(id);
    if (it == where.end()) throw ConfigError("sample '" + id + "' not in dataset");
    out.samples.push_back(samples[it->second]);
  }
  return out;
}

Dataset Dataset::without_labels(const std::vector<std::string>& ids) const {
  const std::set<std::string> drop(ids.begin(), ids.end());
  Dataset out = *this;
  for (auto& s : out.samples)
    if (drop.count(s.id)) s.labels.assign(s.labels.size(), std::nullopt);
  return out;
}

Dataset build_dataset(const std::vector<chem::MolecularSystem>& systems,
                      const chem::LabelTable* labels, const graph::EdgeSchema& schema,
                      const std::vector<std::string>& element_vocab) {
  schema.validate();
  const auto vocab = chem::ElementVocab::from_symbols(element_vocab);
  Dataset d;
  d.schema = schema;
  d.element_vocab = vocab.symbols();
  if (labels) d.task_names = labels->tasks;
  std::set<std::string> seen;
  for (const auto& sys : systems) {
    if (!seen.insert(sys.sample_id).second)
      throw ConfigError("duplicate sample id '" + sys.sample_id + "'");
    Sample s;
    s.id = sys.sample_id;
    s.graph = graph::build_graph(sys, schema, vocab);
    s.labels.assign(d.task_names.size(), std::nullopt);
    if (labels) {
      auto it = labels->rows.find(sys.sample_id);
      if (it != labels->rows.end()) s.labels = it->second;
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  const nlohmann::json meta{{"tasks", d.task_names},
                            {"schema", schema_to_json(d.schema)},
                            {"element_vocab", d.element_vocab}};
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_string(out, meta.dump());
  put_u32(out, static_cast<std::uint32_t>(d.samples.size()));
  for (const auto& s : d.samples) {
    put_string(out, s.id);
    for (std::size_t t = 0; t < d.task_count(); ++t) {
      const double v = t < s.labels.size() && s.labels[t]
                           ? *s.labels[t]
                           : std::numeric_limits<double>::quiet_NaN();
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    graph::write_graph(out, s.graph);
  }
  if (!out) throw IoError("failed writing dataset");
}

Dataset read_dataset(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a dataset file (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw IoError("unsupported dataset version " + std::to_string(version));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(get_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt dataset metadata: ") + e.what());
  }
  Dataset d;
  d.task_names = meta.at("tasks").get<std::vector<std::string>>();
  d.schema = schema_from_json(meta.at("schema"));
  d.element_vocab = meta.at("element_vocab").get<std::vector<std::string>>();
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    s.id = get_string(in);
    for (std::size_t t = 0; t < d.task_count(); ++t) {
      double v;
      get_bytes(in, &v, sizeof v);
      s.labels.push_back(std::isnan(v) ? std::nullopt : std::optional<double>(v));
    }
    s.graph = graph::read_graph(in);
    d.samples.push_back(std::move(s));
  }
  return d;
}

void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset(out, d);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

}  // namespace sgc::inline SGC_PRECISION_TAG
