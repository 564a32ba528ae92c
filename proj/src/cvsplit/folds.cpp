#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "sgc/chemio.hpp"
#include "sgc/cvsplit.hpp"
#include "sgc/error.hpp"
#include "sgc/random.hpp"

namespace sgc::split {

std::string to_string(Fold fold) {
  switch (fold) {
    case Fold::train: return "train";
    case Fold::valid: return "valid";
    case Fold::test: return "test";
  }
  return "?";
}

Fold parse_fold(const std::string& s) {
  if (s == "train") return Fold::train;
  if (s == "valid" || s == "validation") return Fold::valid;
  if (s == "test") return Fold::test;
  throw ConfigError("unknown fold '" + s + "' (expected train, valid or test)");
}

std::size_t FoldAssignment::count(Fold f) const {
  return static_cast<std::size_t>(std::count(folds.begin(), folds.end(), f));
}

void validate_fractions(const Fractions& f) {
  double s = 0.0;
  for (double x : f) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-6) throw ConfigError("fractions must sum to 1");
}

Fractions parse_fractions(const std::string& s) {
  Fractions f{};
  std::stringstream in(s);
  std::string item;
  std::size_t k = 0;
  while (std::getline(in, item, ',')) {
    if (k == 3) throw ConfigError("expected three fractions, got more: '" + s + "'");
    try {
      std::size_t used = 0;
      f[k] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad fraction '" + item + "'");
    }
    ++k;
  }
  if (k != 3) throw ConfigError("expected three fractions 'train,valid,test', got '" + s + "'");
  validate_fractions(f);
  return f;
}

namespace {

void set_achieved(FoldAssignment& a) {
  const double n = static_cast<double>(a.folds.size());
  for (int f = 0; f < 3; ++f)
    a.achieved[f] = n > 0 ? static_cast<double>(a.count(static_cast<Fold>(f))) / n : 0.0;
}

void check_unique(const std::vector<std::string>& ids) {
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ConfigError("duplicate sample id '" + id + "'");
}

}  // namespace

FoldAssignment assign_folds(const std::vector<std::string>& ids,
                            const std::vector<std::size_t>& cluster_labels,
                            const Fractions& fractions, std::uint64_t seed) {
  validate_fractions(fractions);
  if (ids.size() != cluster_labels.size()) throw ConfigError("one cluster label per sample required");
  check_unique(ids);

  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t s = 0; s < ids.size(); ++s) members[cluster_labels[s]].push_back(s);
  std::vector<std::pair<std::size_t, const std::vector<std::size_t>*>> clusters;
  for (const auto& [label, m] : members) clusters.emplace_back(label, &m);
  std::stable_sort(clusters.begin(), clusters.end(), [](const auto& x, const auto& y) {
    return x.second->size() > y.second->size();
  });

  FoldAssignment a;
  a.ids = ids;
  a.folds.assign(ids.size(), Fold::train);
  a.method = "agglomerative";
  a.target = fractions;
  a.cluster_count = clusters.size();

  const double n = static_cast<double>(ids.size());
  const double cap = *std::max_element(fractions.begin(), fractions.end()) * n;
  std::array<double, 3> achieved{0, 0, 0};
  Rng rng(seed);
  for (const auto& [label, m] : clusters) {
    Fold fold = Fold::train;
    if (static_cast<double>(m->size()) > cap) {
      a.warnings.push_back("cluster " + std::to_string(label) + " holds " +
                           std::to_string(m->size()) + " of " + std::to_string(ids.size()) +
                           " samples, more than the largest fold target; assigned to train");
    } else {
      double best = -std::numeric_limits<double>::infinity();
      std::vector<int> tied;
      for (int f = 0; f < 3; ++f) {
        const double shortfall = fractions[f] * n - achieved[f];
        if (shortfall > best) {
          best = shortfall;
          tied = {f};
        } else if (shortfall == best) {
          tied.push_back(f);
        }
      }
      fold = static_cast<Fold>(tied.size() == 1 ? tied[0] : tied[rng.below(tied.size())]);
    }
    achieved[static_cast<int>(fold)] += static_cast<double>(m->size());
    for (std::size_t s : *m) a.folds[s] = fold;
  }
  set_achieved(a);
  return a;
}

FoldAssignment random_split(const std::vector<std::string>& ids, const Fractions& fractions,
                            std::uint64_t seed) {
  validate_fractions(fractions);
  check_unique(ids);
  const std::size_t n = ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  auto quota = [&](double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
  };
  std::size_t n_valid = quota(fractions[1]);
  std::size_t n_test = quota(fractions[2]);
  if (n_valid + n_test > n) n_test = n - std::min(n, n_valid);
  if (n_valid > n) n_valid = n;
  const std::size_t n_train = n - n_valid - n_test;

  FoldAssignment a;
  a.ids = ids;
  a.folds.assign(n, Fold::train);
  a.method = "random";
  a.target = fractions;
  a.cluster_count = n;
  for (std::size_t r = 0; r < n; ++r)
    a.folds[order[r]] = r < n_train ? Fold::train : r < n_train + n_valid ? Fold::valid : Fold::test;
  set_achieved(a);
  return a;
}

std::string write_folds_csv(const FoldAssignment& a) {
  std::string out = "sample_id,fold\n";
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    const std::string& id = a.ids[i];
    if (id.find_first_of(",\"\n\r") != std::string::npos) {
      std::string q = "\"";
      for (char c : id) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      out += q + "\"";
    } else {
      out += id;
    }
    out += "," + to_string(a.folds[i]) + "\n";
  }
  return out;
}

FoldAssignment parse_folds_csv(std::string_view text) {
  std::vector<std::size_t> lines;
  const auto rows = chem::read_csv(text, &lines);
  if (rows.empty()) throw ParseError("empty folds file");
  if (rows[0].size() < 2 || rows[0][0] != "sample_id" || rows[0][1] != "fold")
    throw ParseError("folds header must be 'sample_id,fold'", lines[0]);
  FoldAssignment a;
  a.method = "file";
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw ParseError("expected 2 fields", lines[r]);
    if (rows[r][0].empty()) throw ParseError("empty sample id", lines[r]);
    if (!seen.insert(rows[r][0]).second)
      throw ParseError("duplicate sample id '" + rows[r][0] + "'", lines[r]);
    try {
      a.folds.push_back(parse_fold(rows[r][1]));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lines[r]);
    }
    a.ids.push_back(rows[r][0]);
  }
  a.cluster_count = 0;
  set_achieved(a);
  a.target = a.achieved;
  return a;
}

DistanceMatrix parse_distance_matrix(std::string_view csv_text) {
  std::vector<std::size_t> lines;
  const auto rows = chem::read_csv(csv_text, &lines);
  if (rows.empty()) throw ParseError("empty distance matrix");
  const std::size_t n = rows[0].size() - 1;
  if (rows[0].size() < 2) throw ParseError("distance header needs at least one id", lines[0]);
  if (rows.size() != n + 1)
    throw ParseError("distance matrix has " + std::to_string(rows.size() - 1) + " rows for " +
                     std::to_string(n) + " columns");
  DistanceMatrix d;
  d.ids.assign(rows[0].begin() + 1, rows[0].end());
  d.values.assign(n * n, 0.0);
  for (std::size_t r = 1; r <= n; ++r) {
    const auto& row = rows[r];
    if (row.size() != n + 1) throw ParseError("expected " + std::to_string(n + 1) + " fields", lines[r]);
    if (row[0] != d.ids[r - 1])
      throw ParseError("row id '" + row[0] + "' does not match column id '" + d.ids[r - 1] + "'",
                       lines[r]);
    for (std::size_t c = 0; c < n; ++c) {
      const std::string& cell = row[c + 1];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError("non-numeric distance '" + cell + "'", lines[r]);
      d.values[(r - 1) * n + c] = v;
    }
  }
  check_unique(d.ids);
  d.validate();
  return d;
}

}  // namespace sgc::split
