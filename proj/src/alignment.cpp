#include "attn_audit/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <iterator>

#include "attn_audit/error.hpp"

namespace attn_audit {
namespace {

bool parse_index(std::string_view text, std::size_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

}  // namespace

AlignmentSet parse_pharaoh(std::string_view line) {
  AlignmentSet out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && is_space(line[pos])) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !is_space(line[end])) ++end;
    const std::string_view item = line.substr(pos, end - pos);
    pos = end;

    const auto dash = item.find('-');
    AlignmentPair pair;
    if (dash == std::string_view::npos || !parse_index(item.substr(0, dash), pair.source) ||
        !parse_index(item.substr(dash + 1), pair.target)) {
      throw ParseError(fmt::format("malformed alignment item '{}'", item));
    }
    out.insert(pair);
  }
  return out;
}

std::string serialize_pharaoh(const AlignmentSet& alignment) {
  std::string out;
  for (const auto& p : alignment) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}-{}", p.source, p.target);
  }
  return out;
}

std::vector<AlignmentSet> read_pharaoh(std::istream& in) {
  std::vector<AlignmentSet> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    try {
      out.push_back(parse_pharaoh(line));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), number);
    }
  }
  return out;
}

AlignmentSet flip(const AlignmentSet& alignment) {
  AlignmentSet out;
  for (const auto& p : alignment) out.insert({p.target, p.source});
  return out;
}

Symmetrization parse_symmetrization(std::string_view name) {
  if (name == "intersection") return Symmetrization::intersection;
  if (name == "union") return Symmetrization::union_;
  throw UsageError(fmt::format("unknown symmetrization '{}' (expected intersection|union)", name));
}

std::string_view to_string(Symmetrization mode) {
  return mode == Symmetrization::intersection ? "intersection" : "union";
}

AlignmentSet symmetrize(const AlignmentSet& forward, const AlignmentSet& reverse,
                        Symmetrization mode) {
  AlignmentSet out;
  if (mode == Symmetrization::intersection) {
    std::set_intersection(forward.begin(), forward.end(), reverse.begin(), reverse.end(),
                          std::inserter(out, out.end()));
  } else {
    std::set_union(forward.begin(), forward.end(), reverse.begin(), reverse.end(),
                   std::inserter(out, out.end()));
  }
  return out;
}

}  // namespace attn_audit
