#pragma once

#include <pdbcu/types.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace pdbcu {

struct BlockRange {
  Index start = 0;
  Index width = 0;

  Index end() const { return start + width; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// Contiguous, ordered, disjoint blocks covering [0, total_dim).
class BlockPartition {
 public:
  BlockPartition() = default;

  explicit BlockPartition(std::vector<BlockRange> ranges) : ranges_(std::move(ranges)) {
    if (ranges_.empty()) throw StructuralError("partition: at least one block required");
    Index next = 0;
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      if (ranges_[i].width <= 0)
        throw StructuralError("partition: block " + std::to_string(i) + " is empty");
      if (ranges_[i].start != next)
        throw StructuralError("partition: block " + std::to_string(i) +
                              " is not contiguous with its predecessor");
      next = ranges_[i].end();
    }
    total_dim_ = next;
  }

  /// `count` blocks of near-equal width; the first (n mod count) blocks get one extra.
  static BlockPartition even(Index total_dim, Index count) {
    if (total_dim <= 0 || count <= 0 || count > total_dim)
      throw StructuralError("partition: need 1 <= count <= total_dim");
    std::vector<BlockRange> r;
    r.reserve(static_cast<std::size_t>(count));
    const Index base = total_dim / count;
    const Index extra = total_dim % count;
    Index start = 0;
    for (Index i = 0; i < count; ++i) {
      const Index w = base + (i < extra ? 1 : 0);
      r.push_back({start, w});
      start += w;
    }
    return BlockPartition(std::move(r));
  }

  /// Blocks of exactly `width`, the last block absorbing the remainder
  /// (so its width lies in [width, 2*width)).
  static BlockPartition fixed_width(Index total_dim, Index width) {
    if (total_dim <= 0 || width <= 0) throw StructuralError("partition: nonpositive size");
    const Index count = std::max<Index>(1, total_dim / width);
    std::vector<BlockRange> r;
    Index start = 0;
    for (Index i = 0; i < count; ++i) {
      const Index w = (i + 1 == count) ? total_dim - start : width;
      r.push_back({start, w});
      start += w;
    }
    return BlockPartition(std::move(r));
  }

  static BlockPartition coordinates(Index total_dim) { return even(total_dim, total_dim); }
  static BlockPartition single(Index total_dim) { return even(total_dim, 1); }

  Index total_dim() const { return total_dim_; }
  Index num_blocks() const { return static_cast<Index>(ranges_.size()); }
  const BlockRange& operator[](Index i) const { return ranges_[static_cast<std::size_t>(i)]; }
  const std::vector<BlockRange>& ranges() const { return ranges_; }

  auto segment(Vector& x, Index i) const {
    const auto& r = ranges_[static_cast<std::size_t>(i)];
    return x.segment(r.start, r.width);
  }
  auto segment(const Vector& x, Index i) const {
    return x.segment(ranges_[static_cast<std::size_t>(i)].start,
                     ranges_[static_cast<std::size_t>(i)].width);
  }

 private:
  std::vector<BlockRange> ranges_;
  Index total_dim_ = 0;
};

}  // namespace pdbcu
