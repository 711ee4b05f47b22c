#include "opbw/sparse_grid.hpp"

#include <algorithm>

namespace opbw::detail {

namespace {
constexpr int kPageBits = 12;
constexpr int kSpaceBits[kMaxDim] = {6, 4, 3, 2};
}  // namespace

SparseGrid::SparseGrid(int d, std::int32_t fill) : d_(d), fill_(fill) {
  space_bits_ = kSpaceBits[d - 1];
  time_bits_ = kPageBits - d * space_bits_;
}

std::uint64_t SparseGrid::page_key(const Site& s) const {
  auto pack = [](std::int32_t v, int bits) {
    const std::int32_t page = v >> bits;  // arithmetic shift: floor division
    const std::int64_t biased = static_cast<std::int64_t>(page) + kBias;
    if (biased < 0 || biased >= 2 * kBias) throw ResourceError("sparse grid: coordinate out of addressable range");
    return static_cast<std::uint64_t>(biased);
  };
  // Time gets the 64 - 12d bits left above the spatial fields.
  const std::int64_t t = static_cast<std::int64_t>(s.n >> time_bits_) + kTimeBias;
  if (t < 0 || t >= 2 * kTimeBias) throw ResourceError("sparse grid: time out of addressable range");
  std::uint64_t key = static_cast<std::uint64_t>(t);
  for (int i = 0; i < d_; ++i) key = (key << 12) | pack(s.x[i], space_bits_);
  return key;
}

std::size_t SparseGrid::offset_in_page(const Site& s) const {
  std::size_t off = static_cast<std::size_t>(s.n & ((1 << time_bits_) - 1));
  for (int i = 0; i < d_; ++i) {
    off = (off << space_bits_) | static_cast<std::size_t>(s.x[i] & ((1 << space_bits_) - 1));
  }
  return off;
}

std::int32_t* SparseGrid::find_page(std::uint64_t key) const {
  if (key == last_key_) return last_page_;
  auto it = pages_.find(key);
  if (it == pages_.end()) return nullptr;
  last_key_ = key;
  last_page_ = it->second.get();
  return last_page_;
}

std::int32_t SparseGrid::get(const Site& s) const {
  const std::int32_t* page = find_page(page_key(s));
  return page ? page[offset_in_page(s)] : fill_;
}

std::int32_t& SparseGrid::at(const Site& s) {
  const std::uint64_t key = page_key(s);
  std::int32_t* page = find_page(key);
  if (!page) {
    auto fresh = std::make_unique<std::int32_t[]>(std::size_t{1} << kPageBits);
    std::fill_n(fresh.get(), std::size_t{1} << kPageBits, fill_);
    page = fresh.get();
    pages_.emplace(key, std::move(fresh));
    last_key_ = key;
    last_page_ = page;
  }
  return page[offset_in_page(s)];
}

void SparseGrid::clear() {
  pages_.clear();
  last_key_ = ~std::uint64_t{0};
  last_page_ = nullptr;
}

void SparseGrid::forget_below(std::int32_t n) {
  const int shift = 12 * d_;
  for (auto it = pages_.begin(); it != pages_.end();) {
    const std::int64_t page_t = static_cast<std::int64_t>(it->first >> shift) - kTimeBias;
    if ((page_t + 1) * (std::int64_t{1} << time_bits_) <= n) {
      it = pages_.erase(it);
    } else {
      ++it;
    }
  }
  last_key_ = ~std::uint64_t{0};
  last_page_ = nullptr;
}

}  // namespace opbw::detail
