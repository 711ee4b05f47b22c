#include "opbw/env.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace opbw {

namespace {

constexpr char kMagic[4] = {'O', 'P', 'B', 'W'};
constexpr std::uint16_t kDumpVersion = 1;
// 2^36 bits = 8 GiB; anything larger is refused rather than attempted.
constexpr std::uint64_t kMaxBoxBits = std::uint64_t{1} << 36;

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw Error("environment dump: truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

Environment::Environment(const SimConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed) {
  threshold_ = rng::bernoulli_threshold(config_.p);
  all_open_ = config_.p >= 1.0;
  constant_capacity_ = config_.capacity.is_constant();
  width_ = 2 * config_.half_width + 1;
}

bool Environment::in_box(const Site& s) const {
  if (s.n < 0 || s.n > config_.horizon) return false;
  for (int i = 0; i < config_.d; ++i) {
    if (s.x[i] < -config_.half_width || s.x[i] > config_.half_width) return false;
  }
  return true;
}

void Environment::check_in_box(const Site& s, const char* what) const {
  if (!in_box(s)) {
    throw QueryError(std::string(what) + ": site " + to_string(s, config_.d) + " outside box (L = " +
                     std::to_string(config_.half_width) + ", H = " + std::to_string(config_.horizon) + ")");
  }
}

std::int32_t Environment::capacity(const Site& s) const {
  if (!capacity_override_.empty()) {
    if (auto it = capacity_override_.find(s); it != capacity_override_.end()) return it->second;
  }
  if (constant_capacity_) {
    rng::CounterStream unused(0);
    return config_.capacity.sample(unused);
  }
  rng::CounterStream stream(rng::site_key(seed_, rng::Tag::kCapacity, s, config_.d));
  return config_.capacity.sample(stream);
}

std::uint64_t Environment::permutation_key(const Site& s, int field) const {
  return rng::combine(rng::site_key(seed_, rng::Tag::kPermutation, s, config_.d),
                      static_cast<std::uint64_t>(field));
}

Permutation Environment::permutation(const Site& s, int field) const {
  check_in_box(s, "permutation");
  if (s.n >= config_.horizon) {
    throw QueryError("permutation: site " + to_string(s, config_.d) + " has no successor layer inside the horizon");
  }
  if (!has_seed_ && permutation_override_.empty()) {
    throw QueryError("permutation: environment was loaded from a dump and carries no permutation field");
  }
  Permutation perm;
  // Record the order in which elements are revealed; accepting nothing walks
  // the whole permutation.
  first_in_permutation(s, field, [&](int idx) {
    perm.order[perm.size++] = static_cast<std::uint8_t>(idx);
    return false;
  });
  return perm;
}

void Environment::set_permutation(const Site& s, int field, std::vector<std::uint8_t> order) {
  if (order.size() != config_.offsets.size()) {
    throw ConfigError("set_permutation: order must list every neighbour exactly once");
  }
  permutation_override_[permutation_key(s, field)] = std::move(order);
}

std::vector<Site> Environment::neighborhood(const Site& s) const {
  return opbw::neighborhood(s, config_);
}

std::vector<Site> neighborhood(const Site& s, const SimConfig& config) {
  if (s.n >= config.horizon) {
    throw QueryError("neighborhood: site " + to_string(s, config.d) + " has no successor layer inside the horizon");
  }
  std::vector<Site> out;
  out.reserve(config.offsets.size());
  for (const auto& u : config.offsets) out.push_back(Site{s.x + u, s.n + 1});
  return out;
}

std::uint64_t Environment::box_site_count() const {
  std::uint64_t count = static_cast<std::uint64_t>(config_.horizon) + 1;
  for (int i = 0; i < config_.d; ++i) count *= static_cast<std::uint64_t>(width_);
  return count;
}

std::uint64_t Environment::box_index(const Site& s) const {
  std::uint64_t idx = static_cast<std::uint64_t>(s.n);
  for (int i = 0; i < config_.d; ++i) {
    idx = idx * static_cast<std::uint64_t>(width_) + static_cast<std::uint64_t>(s.x[i] + config_.half_width);
  }
  return idx;
}

void Environment::materialize() {
  if (bits_) return;
  // Check each factor so the error can name what to shrink.
  const double spatial = std::pow(static_cast<double>(width_), config_.d);
  const double layers = static_cast<double>(config_.horizon) + 1.0;
  if (spatial > static_cast<double>(kMaxBoxBits)) {
    throw ResourceError("environment box too large: spatial extent (2L+1)^d = " + std::to_string(spatial) +
                        " sites per layer; reduce half-width L or dimension d");
  }
  if (spatial * layers > static_cast<double>(kMaxBoxBits)) {
    throw ResourceError("environment box too large: " + std::to_string(spatial * layers) +
                        " sites; reduce horizon H (or half-width L)");
  }
  const std::uint64_t count = box_site_count();
  auto bits = std::make_shared<std::vector<std::uint64_t>>((count + 63) / 64, 0);
  Site s;
  // Row-major walk over the box; x_d fastest.
  std::uint64_t idx = 0;
  for (s.n = 0; s.n <= config_.horizon; ++s.n) {
    for (int i = 0; i < config_.d; ++i) s.x[i] = -config_.half_width;
    const std::uint64_t per_layer = count / (static_cast<std::uint64_t>(config_.horizon) + 1);
    for (std::uint64_t k = 0; k < per_layer; ++k, ++idx) {
      if (hashed_omega(s)) (*bits)[idx >> 6] |= std::uint64_t{1} << (idx & 63);
      for (int i = config_.d - 1; i >= 0; --i) {
        if (++s.x[i] <= config_.half_width) break;
        s.x[i] = -config_.half_width;
      }
    }
  }
  bits_ = std::move(bits);
}

const std::vector<std::uint64_t>& Environment::bits() const {
  if (!bits_) throw QueryError("environment is not materialised");
  return *bits_;
}

double Environment::open_fraction() const {
  const std::uint64_t count = box_site_count();
  std::uint64_t open = 0;
  if (bits_) {
    for (auto w : *bits_) open += static_cast<std::uint64_t>(std::popcount(w));
  } else {
    throw QueryError("open_fraction: environment is not materialised");
  }
  return static_cast<double>(open) / static_cast<double>(count);
}

void Environment::write_dump(std::ostream& out) const {
  const auto& words = bits();
  out.write(kMagic, 4);
  put_le<std::uint16_t>(out, kDumpVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(config_.d));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_.half_width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_.horizon));
  const std::uint64_t nbytes = (box_site_count() + 7) / 8;
  for (std::uint64_t b = 0; b < nbytes; ++b) {
    const auto byte = static_cast<char>((words[b >> 3] >> (8 * (b & 7))) & 0xFF);
    out.put(byte);
  }
  if (!out) throw Error("environment dump: write failed");
}

Environment Environment::read_dump(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw Error("environment dump: bad magic");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kDumpVersion) throw Error("environment dump: unsupported version " + std::to_string(version));
  SimConfig cfg;
  cfg.d = get_le<std::uint16_t>(in);
  cfg.half_width = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  cfg.horizon = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  if (cfg.d < 1 || cfg.d > kMaxDim) throw Error("environment dump: bad dimension");
  cfg.offsets = default_offsets(cfg.d);
  cfg.p = 1.0;
  cfg.steps = 1;
  cfg.slack = 0;
  Environment env(cfg, 0);
  env.has_seed_ = false;
  const std::uint64_t count = env.box_site_count();
  auto bits = std::make_shared<std::vector<std::uint64_t>>((count + 63) / 64, 0);
  const std::uint64_t nbytes = (count + 7) / 8;
  for (std::uint64_t b = 0; b < nbytes; ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw Error("environment dump: truncated payload");
    (*bits)[b >> 3] |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * (b & 7));
  }
  env.bits_ = std::move(bits);
  return env;
}

Environment generate_environment(const SimConfig& config, std::uint64_t replica_id) {
  Environment env = lazy_environment(config, replica_id);
  env.materialize();
  return env;
}

Environment lazy_environment(const SimConfig& config, std::uint64_t replica_id) {
  const SimConfig cfg = config.resolved();
  return Environment(cfg, rng::derive_seed(cfg.base_seed, replica_id));
}

}  // namespace opbw
