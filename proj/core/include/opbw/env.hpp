#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "opbw/config.hpp"
#include "opbw/counter_rng.hpp"
#include "opbw/types.hpp"

namespace opbw {

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = rng::mix64(static_cast<std::uint64_t>(s.n) + rng::kGolden);
    for (auto v : s.x) h = rng::combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
    return static_cast<std::size_t>(h);
  }
};

inline constexpr std::size_t kMaxNeighbors = 81;  // 3^kMaxDim

/// An ordering of the neighbourhood, as indices into SimConfig::offsets.
struct Permutation {
  std::array<std::uint8_t, kMaxNeighbors> order{};
  std::uint8_t size = 0;

  std::uint8_t operator[](std::size_t i) const { return order[i]; }
  const std::uint8_t* begin() const { return order.data(); }
  const std::uint8_t* end() const { return order.data() + size; }
};

/// The random environment: Bernoulli field ω, permutation fields ω̃ (one per
/// walker family, selected by `field`), and optional capacities K. All three
/// are pure functions of (seed, site); ω can additionally be materialised as a
/// bit-packed box, which then becomes the source of truth for ω.
///
/// The box is x in [-L, L]^d, n in [0, H]. Checked accessors throw QueryError
/// outside it; the *_unchecked variants evaluate the hash anywhere and are
/// used on hot paths whose callers guarantee cone sufficiency.
class Environment {
 public:
  Environment(const SimConfig& config, std::uint64_t seed);

  const SimConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return config_.d; }
  std::int32_t horizon() const { return config_.horizon; }
  std::int32_t half_width() const { return config_.half_width; }

  bool in_box(const Site& s) const;
  void check_in_box(const Site& s, const char* what) const;

  bool omega(const Site& s) const {
    check_in_box(s, "omega");
    return omega_unchecked(s);
  }
  bool omega_unchecked(const Site& s) const {
    if (!omega_override_.empty()) {
      if (auto it = omega_override_.find(s); it != omega_override_.end()) return it->second;
    }
    // Outside the stored box the hash is still the definition of ω.
    if (bits_ && in_box(s)) return bit_at(s);
    return hashed_omega(s);
  }

  std::int32_t capacity(const Site& s) const;
  bool constant_capacity() const { return constant_capacity_; }

  /// ω̃ at s for walker family `field`; requires s.n < H.
  Permutation permutation(const Site& s, int field = 0) const;

  /// Index (into offsets) of the first element of the permutation at s whose
  /// successor satisfies `accept`, or -1. Generates the permutation lazily.
  template <class Accept>
  int first_in_permutation(const Site& s, int field, Accept&& accept) const;

  /// {(x + u, n + 1) : u in offsets}, in canonical offset order.
  std::vector<Site> neighborhood(const Site& s) const;
  Site successor(const Site& s, std::size_t offset_index) const {
    return Site{s.x + config_.offsets[offset_index], s.n + 1};
  }

  // Materialisation -------------------------------------------------------
  bool materialized() const { return bits_ != nullptr; }
  /// Stores ω for every box site in a bit-packed array. Throws ResourceError
  /// naming the limiting dimension if the box is not addressable.
  void materialize();
  std::uint64_t box_site_count() const;
  std::uint64_t box_index(const Site& s) const;
  const std::vector<std::uint64_t>& bits() const;
  double open_fraction() const;

  // Fixtures ---------------------------------------------------------------
  void set_omega(const Site& s, bool open) { omega_override_[s] = open; }
  void set_permutation(const Site& s, int field, std::vector<std::uint8_t> order);
  void set_capacity(const Site& s, std::int32_t k) { capacity_override_[s] = k; }
  /// False for environments reconstructed from a dump (no permutation field).
  bool has_seed() const { return has_seed_; }

  // Binary dump: "OPBW", u16 version, u16 d, u32 L, u32 H, then the box in
  // row-major (n, x_1, ..., x_d) order, bit-packed LSB first, little-endian.
  void write_dump(std::ostream& out) const;
  static Environment read_dump(std::istream& in);

 private:
  bool hashed_omega(const Site& s) const {
    if (all_open_) return true;
    return rng::site_key(seed_, rng::Tag::kOmega, s, config_.d) < threshold_;
  }
  bool bit_at(const Site& s) const {
    const std::uint64_t i = box_index(s);
    return ((*bits_)[i >> 6] >> (i & 63)) & 1U;
  }
  std::uint64_t permutation_key(const Site& s, int field) const;

  SimConfig config_;
  std::uint64_t seed_ = 0;
  std::uint64_t threshold_ = 0;
  bool all_open_ = false;
  bool constant_capacity_ = true;
  bool has_seed_ = true;
  std::int32_t width_ = 0;  // 2L + 1
  std::shared_ptr<const std::vector<std::uint64_t>> bits_;
  std::unordered_map<Site, bool, SiteHash> omega_override_;
  std::unordered_map<Site, std::int32_t, SiteHash> capacity_override_;
  std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> permutation_override_;
};

/// Environment of replica `replica_id`: seed = derive_seed(base_seed, replica_id),
/// ω materialised over the box.
Environment generate_environment(const SimConfig& config, std::uint64_t replica_id);

/// Same law and seed derivation, ω evaluated on demand (no box storage).
Environment lazy_environment(const SimConfig& config, std::uint64_t replica_id);

std::vector<Site> neighborhood(const Site& s, const SimConfig& config);

// ---------------------------------------------------------------------------

template <class Accept>
int Environment::first_in_permutation(const Site& s, int field, Accept&& accept) const {
  const std::size_t m = config_.offsets.size();
  if (!permutation_override_.empty()) {
    if (auto it = permutation_override_.find(permutation_key(s, field)); it != permutation_override_.end()) {
      for (auto idx : it->second) {
        if (accept(static_cast<int>(idx))) return idx;
      }
      return -1;
    }
  }
  std::array<std::uint8_t, kMaxNeighbors> idx;
  for (std::size_t i = 0; i < m; ++i) idx[i] = static_cast<std::uint8_t>(i);
  rng::CounterStream stream(permutation_key(s, field));
  if (constant_capacity_) {
    // Fisher-Yates, one position at a time.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = (i + 1 < m) ? i + stream.below(m - i) : i;
      std::swap(idx[i], idx[j]);
      if (accept(static_cast<int>(idx[i]))) return idx[i];
    }
    return -1;
  }
  // Sequential weighted sampling without replacement, weights K(y, n + 1).
  std::array<std::int64_t, kMaxNeighbors> w;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = capacity(successor(s, i));
    total += w[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    auto r = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(total)));
    std::size_t j = i;
    while (r >= w[j]) {
      r -= w[j];
      ++j;
    }
    std::swap(idx[i], idx[j]);
    std::swap(w[i], w[j]);
    total -= w[i];
    if (accept(static_cast<int>(idx[i]))) return idx[i];
  }
  return -1;
}

}  // namespace opbw
