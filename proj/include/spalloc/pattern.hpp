#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "spalloc/types.hpp"

namespace spalloc {

/// A set of AP indices. Stored as a bitset with trailing zero words trimmed,
/// so two patterns with the same members compare equal regardless of how
/// they were built. Ordering is by bitmask value.
class Pattern {
 public:
  Pattern() = default;
  Pattern(std::initializer_list<Index> members);

  static Pattern from_mask(std::uint64_t mask);
  static Pattern from_members(const std::vector<Index>& members);

  void insert(Index ap);
  void erase(Index ap);
  [[nodiscard]] bool contains(Index ap) const;

  [[nodiscard]] bool empty() const { return words_.empty(); }
  [[nodiscard]] Index size() const;
  [[nodiscard]] Index max_member() const;  // -1 when empty

  [[nodiscard]] bool is_subset_of(const Pattern& other) const;
  [[nodiscard]] bool intersects(const Pattern& other) const;

  Pattern& operator&=(const Pattern& other);
  Pattern& operator|=(const Pattern& other);
  Pattern& operator-=(const Pattern& other);
  friend Pattern operator&(Pattern a, const Pattern& b) { return a &= b; }
  friend Pattern operator|(Pattern a, const Pattern& b) { return a |= b; }
  friend Pattern operator-(Pattern a, const Pattern& b) { return a -= b; }

  /// Low 64 bits; only meaningful when max_member() < 64.
  [[nodiscard]] std::uint64_t mask() const { return words_.empty() ? 0 : words_.front(); }

  /// Visits members in increasing index order.
  template <typename F> void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        const int b = std::countr_zero(bits);
        f(static_cast<Index>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  [[nodiscard]] std::vector<Index> members() const;

  /// "{0,3,7}" with zero-based indices.
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;
  friend std::strong_ordering operator<=>(const Pattern& a, const Pattern& b);

  [[nodiscard]] std::size_t hash() const;

 private:
  void trim();
  std::vector<std::uint64_t> words_;
};

/// Maps bitmasks over a sorted member list (a neighborhood) to global
/// patterns and back. Bit b of a local mask refers to members[b].
class LocalIndexer {
 public:
  LocalIndexer() = default;
  explicit LocalIndexer(std::vector<Index> members);

  [[nodiscard]] Index size() const { return static_cast<Index>(members_.size()); }
  [[nodiscard]] std::uint32_t full_mask() const {
    return members_.empty() ? 0u : static_cast<std::uint32_t>((std::uint64_t{1} << members_.size()) - 1);
  }
  [[nodiscard]] const std::vector<Index>& members() const { return members_; }

  /// Bit position of `ap`, or -1 if it is not a member.
  [[nodiscard]] int position(Index ap) const;

  [[nodiscard]] Pattern to_pattern(std::uint32_t local) const;
  /// Restriction of a global pattern to the member list.
  [[nodiscard]] std::uint32_t to_local(const Pattern& global) const;
  /// Re-expresses a mask over `other`'s members as a mask over this list;
  /// members not present here are dropped.
  [[nodiscard]] std::uint32_t translate(std::uint32_t other_mask, const LocalIndexer& other) const;

 private:
  std::vector<Index> members_;
};

}  // namespace spalloc

template <> struct std::hash<spalloc::Pattern> {
  std::size_t operator()(const spalloc::Pattern& p) const noexcept { return p.hash(); }
};
