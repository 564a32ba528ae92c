#include <algorithm>
#include <cctype>
#include <thread>

#include "sgc/cvsplit.hpp"
#include "sgc/error.hpp"

namespace sgc::split {
namespace {

constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYX";

std::string normalize(std::string_view s, const char* which) {
  if (s.empty()) throw ConfigError(std::string("empty sequence (") + which + ")");
  std::string out(s.size(), ' ');
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[i])));
    if (kAlphabet.find(c) == std::string_view::npos)
      throw ConfigError(std::string("illegal residue '") + s[i] + "' at position " +
                        std::to_string(i + 1) + " (" + which + ")");
    out[i] = c;
  }
  return out;
}

// Additive alignment statistics, ordered lexicographically.
struct Cell {
  int score = 0;
  int matches = 0;
  int length = 0;

  Cell plus(int ds, int dm) const { return {score + ds, matches + dm, length + 1}; }
  bool better_than(const Cell& o) const {
    if (score != o.score) return score > o.score;
    if (matches != o.matches) return matches > o.matches;
    return length < o.length;
  }
};

}  // namespace

double sequence_identity(std::string_view a_in, std::string_view b_in) {
  const std::string a = normalize(a_in, "first");
  const std::string b = normalize(b_in, "second");
  const std::size_t m = b.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 1; j <= m; ++j) prev[j] = prev[j - 1].plus(-1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = prev[0].plus(-1, 0);
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = a[i - 1] == b[j - 1];
      Cell best = prev[j - 1].plus(match ? 1 : 0, match ? 1 : 0);
      const Cell up = prev[j].plus(-1, 0);
      const Cell left = cur[j - 1].plus(-1, 0);
      if (up.better_than(best)) best = up;
      if (left.better_than(best)) best = left;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[m];
  return static_cast<double>(end.matches) / static_cast<double>(end.length);
}

DistanceMatrix sequence_distance_matrix(const std::vector<std::string>& ids,
                                        const std::vector<std::string>& sequences,
                                        unsigned threads) {
  if (ids.size() != sequences.size())
    throw ConfigError("sequence count differs from id count");
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) normalize(sequences[i], ids[i].c_str());

  DistanceMatrix d;
  d.ids = ids;
  d.values.assign(n * n, 0.0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));

  // Row i is owned by worker i % threads; each pair is computed once.
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += threads)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dist = 1.0 - sequence_identity(sequences[i], sequences[j]);
        d.values[i * n + j] = dist;
        d.values[j * n + i] = dist;
      }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return d;
}

}  // namespace sgc::split
