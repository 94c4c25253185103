#include "multisle/arch.hpp"

#include <algorithm>
#include <sstream>

#include "multisle/errors.hpp"

namespace multisle {

namespace {

void check_range(int n, int m) {
  if (n < 1) throw DomainError("arch: n must be positive, got " + std::to_string(n));
  if (m < 0 || 2 * m > n) {
    throw DomainError("arch: m must satisfy 0 <= m <= n/2, got n=" + std::to_string(n) +
                      " m=" + std::to_string(m));
  }
}

// Intermediate products of C(62,31) exceed 64 bits.
__extension__ using Wide = unsigned __int128;

Wide binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  Wide r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  return r;
}

// Left-to-right scan: each point opens a pair, closes the innermost open
// pair, or (with nothing open) runs to infinity.
void extend(int n, int m, int point, std::vector<int>& open, ArchConfiguration& current,
            std::vector<ArchConfiguration>& out) {
  const int remaining = n - point + 1;
  const int pairs_left = m - current.m() - static_cast<int>(open.size());
  if (point > n) {
    if (open.empty() && current.m() == m) {
      ArchConfiguration done = current;
      std::sort(done.pairs.begin(), done.pairs.end());
      out.push_back(std::move(done));
    }
    return;
  }
  if (static_cast<int>(open.size()) > remaining) return;

  if (!open.empty()) {
    const int opener = open.back();
    open.pop_back();
    current.pairs.emplace_back(opener, point);
    extend(n, m, point + 1, open, current, out);
    current.pairs.pop_back();
    open.push_back(opener);
  }
  if (pairs_left > 0) {
    open.push_back(point);
    extend(n, m, point + 1, open, current, out);
    open.pop_back();
  }
  if (open.empty()) {
    current.infinity_lines.push_back(point);
    extend(n, m, point + 1, open, current, out);
    current.infinity_lines.pop_back();
  }
}

}  // namespace

std::string ArchConfiguration::key() const {
  std::ostringstream os;
  for (const auto& [i, j] : pairs) os << '(' << i << ',' << j << ')';
  if (!infinity_lines.empty()) {
    os << '|';
    for (std::size_t k = 0; k < infinity_lines.size(); ++k) {
      if (k) os << ',';
      os << infinity_lines[k];
    }
  }
  return os.str();
}

void validate(const ArchConfiguration& arch) {
  if (arch.n < 1) throw DomainError("arch: n must be positive");
  std::vector<int> seen(static_cast<std::size_t>(arch.n) + 1, 0);
  auto mark = [&](int idx) {
    if (idx < 1 || idx > arch.n) throw DomainError("arch: index out of range");
    if (seen[static_cast<std::size_t>(idx)]++) throw DomainError("arch: index used twice");
  };
  for (const auto& [i, j] : arch.pairs) {
    if (i >= j) throw DomainError("arch: pair must satisfy i < j");
    mark(i);
    mark(j);
  }
  for (int k : arch.infinity_lines) mark(k);
  if (2 * arch.m() + static_cast<int>(arch.infinity_lines.size()) != arch.n) {
    throw DomainError("arch: pairs and infinity lines must partition 1..n");
  }
  for (const auto& [i, j] : arch.pairs) {
    for (const auto& [k, l] : arch.pairs) {
      if (i < k && k < j && j < l) throw DomainError("arch: crossing pairs");
    }
    for (int k : arch.infinity_lines) {
      if (i < k && k < j) throw DomainError("arch: infinity line enclosed by a pair");
    }
  }
}

std::uint64_t dimension(int n, int m) {
  check_range(n, m);
  if (n > 62) throw DomainError("arch: dimension overflows 64 bits for n > 62");
  return static_cast<std::uint64_t>(binomial(n, m) - binomial(n, m - 1));
}

std::vector<ArchConfiguration> enumerate_arches(int n, int m) {
  check_range(n, m);
  std::vector<ArchConfiguration> out;
  std::vector<int> open;
  ArchConfiguration current;
  current.n = n;
  extend(n, m, 1, open, current, out);
  std::sort(out.begin(), out.end(),
            [](const ArchConfiguration& a, const ArchConfiguration& b) { return a.pairs < b.pairs; });
  return out;
}

DyckPath arch_to_dyck(const ArchConfiguration& arch) {
  validate(arch);
  DyckPath path;
  path.steps.assign(static_cast<std::size_t>(arch.n), +1);
  for (const auto& [i, j] : arch.pairs) path.steps[static_cast<std::size_t>(j - 1)] = -1;
  return path;
}

ArchConfiguration dyck_to_arch(const DyckPath& path) {
  ArchConfiguration arch;
  arch.n = static_cast<int>(path.steps.size());
  if (arch.n < 1) throw DomainError("dyck: empty path");
  std::vector<int> open;
  for (int k = 1; k <= arch.n; ++k) {
    const int s = path.steps[static_cast<std::size_t>(k - 1)];
    if (s == +1) {
      open.push_back(k);
    } else if (s == -1) {
      if (open.empty()) throw DomainError("dyck: negative partial sum at step " + std::to_string(k));
      arch.pairs.emplace_back(open.back(), k);
      open.pop_back();
    } else {
      throw DomainError("dyck: steps must be +1 or -1");
    }
  }
  // Up-steps never closed are the infinity lines.
  arch.infinity_lines = std::move(open);
  std::sort(arch.pairs.begin(), arch.pairs.end());
  return arch;
}

ArchConfiguration classify_outcome(int n, const std::vector<IndexPair>& collisions) {
  if (n < 1) throw DomainError("classify: n must be positive");
  std::vector<int> alive;
  for (int k = 1; k <= n; ++k) alive.push_back(k);

  ArchConfiguration arch;
  arch.n = n;
  for (auto [a, b] : collisions) {
    if (a > b) std::swap(a, b);
    auto it = std::find(alive.begin(), alive.end(), a);
    if (it == alive.end() || std::next(it) == alive.end() || *std::next(it) != b) {
      throw InconsistencyError("classify: collision (" + std::to_string(a) + "," + std::to_string(b) +
                               ") does not join adjacent alive indices");
    }
    alive.erase(it, std::next(it, 2));
    arch.pairs.emplace_back(a, b);
  }
  std::sort(arch.pairs.begin(), arch.pairs.end());
  arch.infinity_lines = std::move(alive);
  return arch;
}

}  // namespace multisle
