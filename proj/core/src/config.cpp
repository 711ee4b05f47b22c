#include "opbw/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace opbw {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) {
    throw ConfigError("config: cannot parse value '" + value + "' for key '" + key + "'");
  }
  return v;
}

}  // namespace

std::string to_string(const Coord& c, int d) {
  std::string s = "(";
  for (int i = 0; i < d; ++i) {
    if (i) s += ",";
    s += std::to_string(c[i]);
  }
  return s + ")";
}

std::string to_string(const Site& s, int d) {
  return "(" + to_string(s.x, d) + "," + std::to_string(s.n) + ")";
}

// ---------------------------------------------------------------------------
// CapacityLaw

CapacityLaw CapacityLaw::constant(std::int32_t value) {
  if (value < 1) throw ConfigError("capacity law: constant must be >= 1");
  CapacityLaw law;
  law.kind_ = Kind::kConstant;
  law.a_ = value;
  return law;
}

CapacityLaw CapacityLaw::uniform(std::int32_t lo, std::int32_t hi) {
  if (lo < 1 || hi < lo) throw ConfigError("capacity law: uniform needs 1 <= lo <= hi");
  CapacityLaw law;
  law.kind_ = Kind::kUniform;
  law.a_ = lo;
  law.b_ = hi;
  return law;
}

CapacityLaw CapacityLaw::geometric(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("capacity law: geometric needs q in (0,1]");
  CapacityLaw law;
  law.kind_ = Kind::kGeometric;
  law.q_ = q;
  return law;
}

CapacityLaw CapacityLaw::table(std::vector<std::pair<std::int32_t, double>> weights) {
  if (weights.empty()) throw ConfigError("capacity law: empty table");
  double total = 0.0;
  for (auto& [v, w] : weights) {
    if (v < 1 || !(w > 0.0)) throw ConfigError("capacity law: table needs values >= 1, weights > 0");
    total += w;
    w = total;
  }
  for (auto& entry : weights) entry.second /= total;
  CapacityLaw law;
  law.kind_ = Kind::kTable;
  law.table_ = std::move(weights);
  return law;
}

CapacityLaw CapacityLaw::parse(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw ConfigError("capacity law: empty spec");
  const std::string& kind = parts[0];
  if (kind == "const" && parts.size() == 2) {
    return constant(parse_number<std::int32_t>("capacity_law", parts[1]));
  }
  if (kind == "uniform" && parts.size() == 3) {
    return uniform(parse_number<std::int32_t>("capacity_law", parts[1]),
                   parse_number<std::int32_t>("capacity_law", parts[2]));
  }
  if (kind == "geometric" && parts.size() == 2) {
    return geometric(parse_number<double>("capacity_law", parts[1]));
  }
  if (kind == "table" && parts.size() == 2) {
    std::vector<std::pair<std::int32_t, double>> w;
    for (const auto& entry : split(parts[1], ',')) {
      const auto kv = split(entry, '=');
      if (kv.size() != 2) throw ConfigError("capacity law: bad table entry '" + entry + "'");
      w.emplace_back(parse_number<std::int32_t>("capacity_law", kv[0]),
                     parse_number<double>("capacity_law", kv[1]));
    }
    return table(std::move(w));
  }
  throw ConfigError("capacity law: cannot parse '" + spec + "'");
}

std::string CapacityLaw::to_string() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kConstant: os << "const:" << a_; break;
    case Kind::kUniform: os << "uniform:" << a_ << ":" << b_; break;
    case Kind::kGeometric: os << "geometric:" << q_; break;
    case Kind::kTable: {
      os << "table:";
      double prev = 0.0;
      for (std::size_t i = 0; i < table_.size(); ++i) {
        if (i) os << ",";
        os << table_[i].first << "=" << (table_[i].second - prev);
        prev = table_[i].second;
      }
      break;
    }
  }
  return os.str();
}

std::int32_t CapacityLaw::sample(rng::CounterStream& stream) const {
  switch (kind_) {
    case Kind::kConstant: return a_;
    case Kind::kUniform:
      return a_ + static_cast<std::int32_t>(stream.below(static_cast<std::uint64_t>(b_ - a_) + 1));
    case Kind::kGeometric: {
      if (q_ >= 1.0) return 1;
      const double u = 1.0 - stream.uniform();  // (0, 1]
      const double k = std::floor(std::log(u) / std::log1p(-q_));
      return static_cast<std::int32_t>(std::min(k, 1.0e9)) + 1;
    }
    case Kind::kTable: {
      const double u = stream.uniform();
      for (const auto& [v, cum] : table_) {
        if (u < cum) return v;
      }
      return table_.back().first;
    }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Neighbourhoods

std::vector<Coord> default_offsets(int d) {
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension d must be in [1, " + std::to_string(kMaxDim) + "]");
  std::vector<Coord> out;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= 3;
  for (std::size_t code = 0; code < count; ++code) {
    Coord u{};
    std::size_t c = code;
    for (int i = d - 1; i >= 0; --i) {
      u[i] = static_cast<std::int32_t>(c % 3) - 1;
      c /= 3;
    }
    out.push_back(u);
  }
  return out;
}

std::vector<Coord> pm1_offsets() {
  Coord a{}, b{};
  a[0] = -1;
  b[0] = 1;
  return {a, b};
}

std::vector<Coord> parse_offsets(const std::string& spec, int d) {
  const std::string s = trim(spec);
  if (s.empty() || s == "default") return default_offsets(d);
  if (s == "pm1") {
    if (d != 1) throw ConfigError("neighborhood 'pm1' is only defined for d = 1");
    return pm1_offsets();
  }
  std::vector<Coord> out;
  for (const auto& item : split(s, ';')) {
    std::string body = item;
    body.erase(std::remove(body.begin(), body.end(), '('), body.end());
    body.erase(std::remove(body.begin(), body.end(), ')'), body.end());
    const auto coords = split(body, ',');
    if (static_cast<int>(coords.size()) != d) {
      throw ConfigError("neighborhood: offset '" + item + "' does not have " + std::to_string(d) + " coordinates");
    }
    Coord u{};
    for (int i = 0; i < d; ++i) u[i] = parse_number<std::int32_t>("neighborhood", coords[i]);
    out.push_back(u);
  }
  return out;
}

std::string offsets_to_string(const std::vector<Coord>& offsets, int d) {
  std::string s;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    if (k) s += ";";
    for (int i = 0; i < d; ++i) {
      if (i) s += ",";
      s += std::to_string(offsets[k][i]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// SimConfig

std::int32_t SimConfig::radius() const {
  std::int32_t r = 0;
  for (const auto& u : offsets) r = std::max(r, sup_norm(u));
  return r;
}

SimConfig SimConfig::resolved() const {
  SimConfig c = *this;
  if (c.d < 1 || c.d > kMaxDim) {
    throw ConfigError("dimension d must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(c.d));
  }
  if (c.offsets.empty()) c.offsets = default_offsets(c.d);
  if (c.steps < 1) throw ConfigError("steps N must be >= 1");
  if (c.slack < 0) throw ConfigError("slack must be >= 0");
  if (c.horizon == 0) c.horizon = c.steps + c.slack;
  if (c.half_width == 0) {
    const std::int64_t l = static_cast<std::int64_t>(c.steps + c.horizon) * std::max(1, c.radius());
    if (l > (1 << 29)) throw ConfigError("derived half-width L overflows; reduce steps or horizon");
    c.half_width = static_cast<std::int32_t>(l);
  }
  c.validate();
  return c;
}

void SimConfig::validate() const {
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension d must be in [1, " + std::to_string(kMaxDim) + "]");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must be in (0,1], got " + std::to_string(p));
  if (horizon < 1) throw ConfigError("horizon H must be >= 1");
  if (half_width < 1) throw ConfigError("half-width L must be >= 1");
  if (steps < 1) throw ConfigError("steps N must be >= 1");
  if (offsets.empty()) throw ConfigError("neighborhood must be non-empty");
  std::set<Coord> seen;
  for (const auto& u : offsets) {
    for (int i = d; i < kMaxDim; ++i) {
      if (u[i] != 0) throw ConfigError("neighborhood offset has coordinates beyond dimension d");
    }
    if (!seen.insert(u).second) throw ConfigError("neighborhood offsets must be distinct: " + to_string(u, d));
  }
  for (const auto& u : offsets) {
    Coord neg{};
    for (int i = 0; i < kMaxDim; ++i) neg[i] = -u[i];
    if (!seen.count(neg)) {
      throw ConfigError("neighborhood must be symmetric: " + to_string(u, d) + " present but " +
                        to_string(neg, d) + " missing");
    }
  }
  const std::int64_t need = static_cast<std::int64_t>(steps + horizon) * radius();
  if (half_width < need) {
    throw ConfigError("cone sufficiency violated: half-width L = " + std::to_string(half_width) +
                      " < (N + H) * radius = " + std::to_string(need));
  }
}

std::map<std::string, std::string> SimConfig::to_map() const {
  std::ostringstream ps;
  ps.precision(17);
  ps << p;
  return {
      {"d", std::to_string(d)},
      {"p", ps.str()},
      {"neighborhood", offsets_to_string(offsets, d)},
      {"horizon", std::to_string(horizon)},
      {"half_width", std::to_string(half_width)},
      {"seed", std::to_string(base_seed)},
      {"capacity_law", capacity.to_string()},
      {"steps", std::to_string(steps)},
      {"slack", std::to_string(slack)},
  };
}

std::uint64_t SimConfig::fingerprint() const {
  std::uint64_t h = 0x6f70627700000001ULL;
  for (const auto& [k, v] : to_map()) {
    for (char ch : k + "=" + v) h = rng::combine(h, static_cast<unsigned char>(ch));
  }
  return h;
}

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "d") {
    cfg.d = parse_number<int>(key, value);
  } else if (key == "p") {
    cfg.p = parse_number<double>(key, value);
  } else if (key == "neighborhood") {
    cfg.offsets = parse_offsets(value, cfg.d);
  } else if (key == "horizon") {
    cfg.horizon = parse_number<std::int32_t>(key, value);
  } else if (key == "half_width") {
    cfg.half_width = parse_number<std::int32_t>(key, value);
  } else if (key == "seed") {
    cfg.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "capacity_law") {
    cfg.capacity = CapacityLaw::parse(value);
  } else if (key == "steps") {
    cfg.steps = parse_number<std::int32_t>(key, value);
  } else if (key == "slack") {
    cfg.slack = parse_number<std::int32_t>(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

SimConfig parse_config(std::istream& in, std::set<std::string>* keys) {
  SimConfig cfg;
  std::string line;
  std::string neighborhood;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (keys) keys->insert(key);
    // The neighbourhood depends on d, which may come later in the file.
    if (key == "neighborhood") {
      neighborhood = value;
      continue;
    }
    apply_setting(cfg, key, value);
  }
  if (!neighborhood.empty()) cfg.offsets = parse_offsets(neighborhood, cfg.d);
  return cfg;
}

SimConfig load_config(const std::string& path, std::set<std::string>* keys) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, keys);
}

}  // namespace opbw
