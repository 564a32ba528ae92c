#pragma once

// Fold construction: random split and the homology split (Ward clustering of
// a protein distance matrix followed by cluster-to-fold packing).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sgc::split {

enum class Fold { train, valid, test };

std::string to_string(Fold fold);
Fold parse_fold(const std::string& s);

/// Square symmetric matrix with zero diagonal and entries in [0, 1].
struct DistanceMatrix {
  std::vector<std::string> ids;
  std::vector<double> values;  // row-major n x n

  std::size_t size() const { return ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * ids.size() + j]; }
  /// Throws ConfigError when the invariants fail.
  void validate() const;
};

/// CSV with a header row of ids (first cell ignored) and one row per id.
DistanceMatrix parse_distance_matrix(std::string_view csv_text);

/// Global alignment identity: match +1, mismatch 0, gap -1. Among alignments
/// of maximal score the one with most matches, then shortest length, is
/// used; identity = matches / alignment length. Lowercase input is accepted.
double sequence_identity(std::string_view a, std::string_view b);

/// 1 - identity for every pair. Pairs are spread over `threads` workers
/// (0 = hardware concurrency).
DistanceMatrix sequence_distance_matrix(const std::vector<std::string>& ids,
                                        const std::vector<std::string>& sequences,
                                        unsigned threads = 0);

struct Merge {
  std::size_t a = 0;  // smallest member index of each merged cluster
  std::size_t b = 0;
  double height = 0.0;  // Ward distance, sqrt of the Lance-Williams value
  std::size_t size = 0;
};

/// Full Ward agglomeration: N - 1 merges in order. Ties go to the pair with
/// the smallest (min-index, max-index) where a cluster is named by its
/// smallest member.
std::vector<Merge> ward_linkage(const DistanceMatrix& d);

/// Labels 0..k-1 numbered by first appearance in sample order.
std::vector<std::size_t> cut_by_count(std::size_t n, const std::vector<Merge>& merges,
                                      std::size_t n_clusters);
std::vector<std::size_t> cut_by_threshold(std::size_t n, const std::vector<Merge>& merges,
                                          double max_height);

/// Ward clustering into exactly `n_clusters` groups. Throws ConfigError when
/// n_clusters is 0 or exceeds N.
std::vector<std::size_t> ward_cluster(const DistanceMatrix& d, std::size_t n_clusters);

using Fractions = std::array<double, 3>;  // train, valid, test

struct FoldAssignment {
  std::vector<std::string> ids;  // input order
  std::vector<Fold> folds;
  std::string method;
  Fractions target{};
  Fractions achieved{};
  std::size_t cluster_count = 0;
  std::vector<std::string> warnings;

  std::size_t count(Fold f) const;
};

/// Throws ConfigError unless all fractions are >= 0 and sum to 1 (1e-6).
void validate_fractions(const Fractions& f);
Fractions parse_fractions(const std::string& s);

/// Largest clusters first, each to the fold with the largest shortfall
/// (target - achieved); ties between folds are broken by `seed`. A cluster
/// larger than max(fractions) * N goes to train with a warning.
FoldAssignment assign_folds(const std::vector<std::string>& ids,
                            const std::vector<std::size_t>& cluster_labels,
                            const Fractions& fractions, std::uint64_t seed);

/// Seeded shuffle, then [train | valid | test] with valid and test sizes
/// round(f * N) and the remainder in train.
FoldAssignment random_split(const std::vector<std::string>& ids, const Fractions& fractions,
                            std::uint64_t seed);

/// CSV "sample_id,fold".
std::string write_folds_csv(const FoldAssignment& a);
FoldAssignment parse_folds_csv(std::string_view text);

}  // namespace sgc::split
