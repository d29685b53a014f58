#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace attn_audit {

// Word-level, 0-based (source, target) pair.
struct AlignmentPair {
  std::size_t source = 0;
  std::size_t target = 0;

  friend auto operator<=>(const AlignmentPair&, const AlignmentPair&) = default;
};

// Ordered by (source, target); a set, so pairs are unique.
using AlignmentSet = std::set<AlignmentPair>;

// Parses whitespace-separated "i-j" items. Empty input gives an empty set.
AlignmentSet parse_pharaoh(std::string_view line);

// Items sorted by (source, target), single-space separated.
std::string serialize_pharaoh(const AlignmentSet& alignment);

// One AlignmentSet per line, line order preserved; ParseError names the line.
std::vector<AlignmentSet> read_pharaoh(std::istream& in);

// Swaps source and target in every pair.
AlignmentSet flip(const AlignmentSet& alignment);

enum class Symmetrization { intersection, union_ };

Symmetrization parse_symmetrization(std::string_view name);
std::string_view to_string(Symmetrization mode);

// `reverse` must already be flipped into (source, target) orientation.
AlignmentSet symmetrize(const AlignmentSet& forward, const AlignmentSet& reverse,
                        Symmetrization mode);

}  // namespace attn_audit
