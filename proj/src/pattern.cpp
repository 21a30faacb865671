#include "spalloc/pattern.hpp"

#include <algorithm>
#include <sstream>

namespace spalloc {

Pattern::Pattern(std::initializer_list<Index> members) {
  for (Index m : members) insert(m);
}

Pattern Pattern::from_mask(std::uint64_t mask) {
  Pattern p;
  if (mask != 0) p.words_.push_back(mask);
  return p;
}

Pattern Pattern::from_members(const std::vector<Index>& members) {
  Pattern p;
  for (Index m : members) p.insert(m);
  return p;
}

void Pattern::insert(Index ap) {
  if (ap < 0) throw Error("pattern member must be non-negative");
  const auto w = static_cast<std::size_t>(ap / 64);
  if (words_.size() <= w) words_.resize(w + 1, 0);
  words_[w] |= std::uint64_t{1} << (ap % 64);
}

void Pattern::erase(Index ap) {
  const auto w = static_cast<std::size_t>(ap / 64);
  if (ap < 0 || w >= words_.size()) return;
  words_[w] &= ~(std::uint64_t{1} << (ap % 64));
  trim();
}

bool Pattern::contains(Index ap) const {
  const auto w = static_cast<std::size_t>(ap / 64);
  if (ap < 0 || w >= words_.size()) return false;
  return (words_[w] >> (ap % 64)) & 1u;
}

Index Pattern::size() const {
  Index n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

Index Pattern::max_member() const {
  if (words_.empty()) return -1;
  const auto top = words_.back();
  return static_cast<Index>((words_.size() - 1) * 64 + static_cast<std::size_t>(63 - std::countl_zero(top)));
}

bool Pattern::is_subset_of(const Pattern& other) const {
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const std::uint64_t o = w < other.words_.size() ? other.words_[w] : 0;
    if ((words_[w] & ~o) != 0) return false;
  }
  return true;
}

bool Pattern::intersects(const Pattern& other) const {
  const auto n = std::min(words_.size(), other.words_.size());
  for (std::size_t w = 0; w < n; ++w)
    if ((words_[w] & other.words_[w]) != 0) return true;
  return false;
}

Pattern& Pattern::operator&=(const Pattern& other) {
  if (words_.size() > other.words_.size()) words_.resize(other.words_.size());
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= other.words_[w];
  trim();
  return *this;
}

Pattern& Pattern::operator|=(const Pattern& other) {
  if (words_.size() < other.words_.size()) words_.resize(other.words_.size(), 0);
  for (std::size_t w = 0; w < other.words_.size(); ++w) words_[w] |= other.words_[w];
  return *this;
}

Pattern& Pattern::operator-=(const Pattern& other) {
  const auto n = std::min(words_.size(), other.words_.size());
  for (std::size_t w = 0; w < n; ++w) words_[w] &= ~other.words_[w];
  trim();
  return *this;
}

std::vector<Index> Pattern::members() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(size()));
  for_each([&](Index i) { out.push_back(i); });
  return out;
}

std::string Pattern::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for_each([&](Index i) {
    if (!first) os << ',';
    os << i;
    first = false;
  });
  os << '}';
  return os.str();
}

std::strong_ordering operator<=>(const Pattern& a, const Pattern& b) {
  if (a.words_.size() != b.words_.size()) return a.words_.size() <=> b.words_.size();
  for (std::size_t w = a.words_.size(); w-- > 0;) {
    if (a.words_[w] != b.words_[w]) return a.words_[w] <=> b.words_[w];
  }
  return std::strong_ordering::equal;
}

std::size_t Pattern::hash() const {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (auto w : words_) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

void Pattern::trim() {
  while (!words_.empty() && words_.back() == 0) words_.pop_back();
}

LocalIndexer::LocalIndexer(std::vector<Index> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.size() > 31) throw Error("local member list too large for 32-bit masks");
}

int LocalIndexer::position(Index ap) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), ap);
  if (it == members_.end() || *it != ap) return -1;
  return static_cast<int>(it - members_.begin());
}

Pattern LocalIndexer::to_pattern(std::uint32_t local) const {
  Pattern p;
  while (local != 0) {
    const int b = std::countr_zero(local);
    p.insert(members_[static_cast<std::size_t>(b)]);
    local &= local - 1;
  }
  return p;
}

std::uint32_t LocalIndexer::to_local(const Pattern& global) const {
  std::uint32_t m = 0;
  for (std::size_t b = 0; b < members_.size(); ++b)
    if (global.contains(members_[b])) m |= 1u << b;
  return m;
}

std::uint32_t LocalIndexer::translate(std::uint32_t other_mask, const LocalIndexer& other) const {
  std::uint32_t m = 0;
  while (other_mask != 0) {
    const int b = std::countr_zero(other_mask);
    const int p = position(other.members_[static_cast<std::size_t>(b)]);
    if (p >= 0) m |= 1u << p;
    other_mask &= other_mask - 1;
  }
  return m;
}

}  // namespace spalloc
