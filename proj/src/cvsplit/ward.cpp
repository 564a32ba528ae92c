#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sgc/cvsplit.hpp"
#include "sgc/error.hpp"

namespace sgc::split {

void DistanceMatrix::validate() const {
  const std::size_t n = ids.size();
  if (values.size() != n * n) throw ConfigError("distance matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if ((*this)(i, i) != 0.0) throw ConfigError("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = (*this)(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("distance between '" + ids[i] + "' and '" + ids[j] +
                          "' outside [0, 1]");
      if (std::abs(v - (*this)(j, i)) > 1e-9)
        throw ConfigError("distance matrix is not symmetric at ('" + ids[i] + "', '" + ids[j] +
                          "')");
    }
  }
}

std::vector<Merge> ward_linkage(const DistanceMatrix& d) {
  d.validate();
  const std::size_t n = d.size();
  // Squared Lance-Williams distances between active clusters; slot = smallest member.
  std::vector<double> d2(n * n);
  for (std::size_t k = 0; k < n * n; ++k) d2[k] = d.values[k] * d.values[k];
  auto at = [&](std::size_t i, std::size_t j) -> double& { return d2[i * n + j]; };

  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Best partner c > r for each active row r.
  std::vector<std::size_t> best(n, kNone);
  std::vector<double> best_val(n, std::numeric_limits<double>::infinity());

  auto refresh = [&](std::size_t r) {
    best[r] = kNone;
    best_val[r] = std::numeric_limits<double>::infinity();
    for (std::size_t c = r + 1; c < n; ++c)
      if (active[c] && at(r, c) < best_val[r]) {
        best_val[r] = at(r, c);
        best[r] = c;
      }
  };
  for (std::size_t r = 0; r < n; ++r) refresh(r);

  std::vector<Merge> merges;
  merges.reserve(n ? n - 1 : 0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t i = kNone;
    for (std::size_t r = 0; r < n; ++r)
      if (active[r] && best[r] != kNone && (i == kNone || best_val[r] < best_val[i])) i = r;
    const std::size_t j = best[i];
    const double dij = at(i, j);
    const double ni = static_cast<double>(size[i]);
    const double nj = static_cast<double>(size[j]);

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((ni + nk) * at(k, i) + (nj + nk) * at(k, j) - nk * dij) / (ni + nj + nk);
      at(k, i) = at(i, k) = v;
    }
    merges.push_back({i, j, std::sqrt(std::max(0.0, dij)), size[i] + size[j]});
    size[i] += size[j];
    active[j] = false;

    refresh(i);
    for (std::size_t k = 0; k < i; ++k) {
      if (!active[k]) continue;
      if (best[k] == i || best[k] == j)
        refresh(k);
      else if (at(k, i) < best_val[k] || (at(k, i) == best_val[k] && i < best[k])) {
        best_val[k] = at(k, i);
        best[k] = i;
      }
    }
    for (std::size_t k = i + 1; k < j; ++k)
      if (active[k] && best[k] == j) refresh(k);
  }
  return merges;
}

namespace {

std::vector<std::size_t> labels_after(std::size_t n, const std::vector<Merge>& merges,
                                      std::size_t n_merges) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m < n_merges; ++m) parent[find(merges[m].b)] = find(merges[m].a);

  std::vector<std::size_t> label(n);
  std::vector<std::size_t> root_label(n, std::numeric_limits<std::size_t>::max());
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = find(s);
    if (root_label[r] == std::numeric_limits<std::size_t>::max()) root_label[r] = next++;
    label[s] = root_label[r];
  }
  return label;
}

}  // namespace

std::vector<std::size_t> cut_by_count(std::size_t n, const std::vector<Merge>& merges,
                                      std::size_t n_clusters) {
  if (n_clusters == 0 || n_clusters > n)
    throw ConfigError("n_clusters = " + std::to_string(n_clusters) + " must lie in [1, " +
                      std::to_string(n) + "]");
  return labels_after(n, merges, n - n_clusters);
}

std::vector<std::size_t> cut_by_threshold(std::size_t n, const std::vector<Merge>& merges,
                                          double max_height) {
  std::size_t count = 0;
  while (count < merges.size() && merges[count].height <= max_height) ++count;
  return labels_after(n, merges, count);
}

std::vector<std::size_t> ward_cluster(const DistanceMatrix& d, std::size_t n_clusters) {
  if (n_clusters == 0 || n_clusters > d.size())
    throw ConfigError("n_clusters = " + std::to_string(n_clusters) + " must lie in [1, " +
                      std::to_string(d.size()) + "]");
  return cut_by_count(d.size(), ward_linkage(d), n_clusters);
}

}  // namespace sgc::split
