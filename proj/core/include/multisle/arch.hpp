#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace multisle {

/// Pair of 1-based boundary indices, first < second.
using IndexPair = std::pair<int, int>;

/// Non-crossing pairing of n boundary points; unpaired points run to infinity.
///
/// Indices are 1-based and increase left to right along the real line.
/// `pairs` is kept sorted lexicographically, `infinity_lines` ascending.
struct ArchConfiguration {
  int n = 0;
  std::vector<IndexPair> pairs;
  std::vector<int> infinity_lines;

  int m() const noexcept { return static_cast<int>(pairs.size()); }

  /// Compact key used in reports, e.g. "(1,4)(2,3)" or "(1,2)|3".
  std::string key() const;

  friend bool operator==(const ArchConfiguration&, const ArchConfiguration&) = default;
  friend auto operator<=>(const ArchConfiguration&, const ArchConfiguration&) = default;
};

/// Sequence of ±1 steps; partial sums never negative.
struct DyckPath {
  std::vector<int> steps;

  friend bool operator==(const DyckPath&, const DyckPath&) = default;
};

/// Throws DomainError unless every ArchConfiguration invariant holds.
void validate(const ArchConfiguration& arch);

/// d_{n,m} = C(n,m) - C(n,m-1): number of arch_m configurations of n points.
std::uint64_t dimension(int n, int m);

/// All arch_m configurations of n points in lexicographic order of the pair list.
std::vector<ArchConfiguration> enumerate_arches(int n, int m);

DyckPath arch_to_dyck(const ArchConfiguration& arch);
ArchConfiguration dyck_to_arch(const DyckPath& path);

/// Assemble the pairing produced by an ordered collision log.
///
/// Each collision must join two indices that are adjacent among the
/// still-alive ones; survivors become infinity lines. Partial logs (the run
/// stopped at its capacity cap) are accepted.
ArchConfiguration classify_outcome(int n, const std::vector<IndexPair>& collisions);

}  // namespace multisle
