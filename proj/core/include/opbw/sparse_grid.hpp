#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>

#include "opbw/types.hpp"

namespace opbw::detail {

/// Paged space-time grid of int32 cells, allocated on first touch. Pages hold
/// 4096 cells; their shape depends on the dimension so that a page covers a
/// roughly cubic chunk of space-time.
class SparseGrid {
 public:
  SparseGrid(int d, std::int32_t fill);

  std::int32_t get(const Site& s) const;
  std::int32_t& at(const Site& s);

  std::size_t page_count() const { return pages_.size(); }
  void clear();
  /// Drops every page lying entirely below time layer n.
  void forget_below(std::int32_t n);

 private:
  static constexpr int kBias = 1 << 11;  // spatial page coordinates are packed in 12 bits
  static constexpr std::int64_t kTimeBias = std::int64_t{1} << 15;  // 16 bits left for time when d = 4

  std::uint64_t page_key(const Site& s) const;
  std::size_t offset_in_page(const Site& s) const;
  std::int32_t* find_page(std::uint64_t key) const;

  int d_;
  int space_bits_;
  int time_bits_;
  std::int32_t fill_;
  std::unordered_map<std::uint64_t, std::unique_ptr<std::int32_t[]>> pages_;
  mutable std::uint64_t last_key_ = ~std::uint64_t{0};
  mutable std::int32_t* last_page_ = nullptr;
};

}  // namespace opbw::detail
