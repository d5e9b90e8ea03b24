#include "config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <qsync/errors.hpp>

namespace qsync::tools {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"system", {"freqs", "k", "T", "gamma_plus", "gamma_minus", "dims", "tail_target"}},
      {"integrator", {"dt", "t_final", "sample_stride", "renormalize"}},
      {"classical",
       {"members", "dt", "t_final", "sample_stride", "noise", "gammas", "noise_amp", "cross_coupling", "T"}},
      {"sample", {"count", "theta", "r_max", "s", "freqs"}},
      {"sweep",
       {"k_min", "k_max", "k_count", "dw_min", "dw_max", "dw_count", "t_obs", "dt", "tail_target",
        "classical_members", "classical_dt"}},
      {"bounds", {"n_modes", "kappas", "d_min", "d_max", "d_count", "T"}},
  };
  return keys;
}

[[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::Config, "[" + section + "] " + key + ": " + msg);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail(section, key, "not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail(section, key, "not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(section, key, "not a boolean: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : raw) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> to_doubles(const std::string& section, const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& item : split_list(raw)) out.push_back(to_double(section, key, item));
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  template <class F>
  void with(const std::string& section, const std::string& key, F&& f) const {
    if (auto v = get(section, key)) f(*v);
  }

 private:
  const pt::ptree& tree_;
};

std::vector<double> broadcast(const std::string& section, const std::string& key, std::vector<double> v,
                              std::size_t n) {
  if (v.size() == 1 && n > 1) v.assign(n, v.front());
  if (v.size() != n) fail(section, key, "expected " + std::to_string(n) + " values");
  return v;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v;
  if (count <= 0) return v;
  if (count == 1) return {lo};
  v.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return v;
}

std::vector<double> SweepGrid::k_values() const { return linspace(k_min, k_max, k_count); }
std::vector<double> SweepGrid::dw_values() const { return linspace(dw_min, dw_max, dw_count); }

SystemSpec RunConfig::resolved_system() const {
  SystemSpec s = system;
  if (dims_auto) s.dims = auto_dims(s.freqs, s.temperature, tail_target);
  return s;
}

RunConfig default_config() {
  RunConfig c;
  c.system.freqs = {6.283185307179586, 9.42477796076938};
  c.system.k = 1.0;
  c.system.temperature = 20.0;
  c.system.gamma_plus = {1e-3, 1e-3};
  c.system.dims = auto_dims(c.system.freqs, c.system.temperature, c.tail_target);
  c.classical = SLConfig::from_quantum(c.system);
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::Config, origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, child] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (child.empty()) throw Error(ErrorCode::Config, origin + ": key '" + section + "' outside any section");
      throw Error(ErrorCode::Config, origin + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : child) {
      if (!it->second.count(key)) fail(section, key, "unknown key");
    }
  }

  RunConfig c = default_config();
  c.text = text;
  const Reader r(tree);
  auto& sys = c.system;

  r.with("system", "freqs", [&](const std::string& v) { sys.freqs = to_doubles("system", "freqs", v); });
  const std::size_t n = sys.freqs.size();
  r.with("system", "k", [&](const std::string& v) { sys.k = to_double("system", "k", v); });
  r.with("system", "T", [&](const std::string& v) { sys.temperature = to_double("system", "T", v); });
  sys.gamma_plus = broadcast("system", "gamma_plus", sys.gamma_plus.size() == n ? sys.gamma_plus
                                                                                 : std::vector<double>{sys.gamma_plus.front()},
                             n);
  r.with("system", "gamma_plus", [&](const std::string& v) {
    sys.gamma_plus = broadcast("system", "gamma_plus", to_doubles("system", "gamma_plus", v), n);
  });
  r.with("system", "gamma_minus", [&](const std::string& v) {
    sys.gamma_minus = broadcast("system", "gamma_minus", to_doubles("system", "gamma_minus", v), n);
  });
  r.with("system", "tail_target", [&](const std::string& v) { c.tail_target = to_double("system", "tail_target", v); });
  c.dims_auto = true;
  r.with("system", "dims", [&](const std::string& v) {
    if (trim(v) == "auto") return;
    c.dims_auto = false;
    sys.dims.dims.clear();
    for (double d : broadcast("system", "dims", to_doubles("system", "dims", v), n)) {
      if (d != static_cast<double>(static_cast<Index>(d))) fail("system", "dims", "levels must be integers");
      sys.dims.dims.push_back(static_cast<Index>(d));
    }
  });
  try {
    if (c.dims_auto) sys.dims = auto_dims(sys.freqs, sys.temperature, c.tail_target);
    sys.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("[system] ") + e.what());
  }

  auto& in = c.integrator;
  r.with("integrator", "dt", [&](const std::string& v) { in.dt = to_double("integrator", "dt", v); });
  r.with("integrator", "t_final", [&](const std::string& v) { in.t_final = to_double("integrator", "t_final", v); });
  r.with("integrator", "sample_stride",
         [&](const std::string& v) { in.sample_stride = to_int("integrator", "sample_stride", v); });
  r.with("integrator", "renormalize",
         [&](const std::string& v) { in.renormalize = to_bool("integrator", "renormalize", v); });
  try {
    in.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("[integrator] ") + e.what());
  }

  auto& cl = c.classical;
  if (n == 2) {
    try {
      cl = SLConfig::from_quantum(sys);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, std::string("[classical] ") + e.what());
    }
  }
  r.with("classical", "members",
         [&](const std::string& v) { cl.members = static_cast<std::size_t>(to_int("classical", "members", v)); });
  r.with("classical", "dt", [&](const std::string& v) { cl.dt = to_double("classical", "dt", v); });
  r.with("classical", "t_final", [&](const std::string& v) { cl.t_final = to_double("classical", "t_final", v); });
  r.with("classical", "sample_stride",
         [&](const std::string& v) { cl.sample_stride = to_int("classical", "sample_stride", v); });
  r.with("classical", "T", [&](const std::string& v) { cl.temperature = to_double("classical", "T", v); });
  r.with("classical", "noise", [&](const std::string& v) {
    const auto s = trim(v);
    if (s == "complex") {
      cl.noise = NoiseKind::Complex;
    } else if (s == "real") {
      cl.noise = NoiseKind::Real;
    } else {
      fail("classical", "noise", "expected 'complex' or 'real'");
    }
  });
  r.with("classical", "gammas", [&](const std::string& v) {
    const auto g = broadcast("classical", "gammas", to_doubles("classical", "gammas", v), 2);
    cl.gammas = {g[0], g[1]};
    cl.noise_amp = {2.0 * std::sqrt(std::max(0.0, g[0])), 2.0 * std::sqrt(std::max(0.0, g[1]))};
  });
  r.with("classical", "noise_amp", [&](const std::string& v) {
    const auto a = broadcast("classical", "noise_amp", to_doubles("classical", "noise_amp", v), 2);
    cl.noise_amp = {a[0], a[1]};
  });
  r.with("classical", "cross_coupling",
         [&](const std::string& v) { cl.cross_coupling = to_bool("classical", "cross_coupling", v); });
  try {
    cl.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("[classical] ") + e.what());
  }

  auto& sp = c.sample;
  r.with("sample", "count",
         [&](const std::string& v) { sp.count = static_cast<std::size_t>(to_int("sample", "count", v)); });
  r.with("sample", "theta", [&](const std::string& v) { sp.theta = to_double("sample", "theta", v); });
  r.with("sample", "r_max", [&](const std::string& v) { sp.r_max = to_double("sample", "r_max", v); });
  r.with("sample", "s", [&](const std::string& v) { sp.s = to_double("sample", "s", v); });
  r.with("sample", "freqs", [&](const std::string& v) {
    c.sample_freqs = broadcast("sample", "freqs", to_doubles("sample", "freqs", v), 2);
  });
  for (double w : c.sample_freqs) {
    if (!(w > 0.0)) fail("sample", "freqs", "frequencies must be positive");
  }
  try {
    sp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("[sample] ") + e.what());
  }

  auto& sw = c.sweep;
  r.with("sweep", "k_min", [&](const std::string& v) { sw.k_min = to_double("sweep", "k_min", v); });
  r.with("sweep", "k_max", [&](const std::string& v) { sw.k_max = to_double("sweep", "k_max", v); });
  r.with("sweep", "k_count", [&](const std::string& v) { sw.k_count = static_cast<int>(to_int("sweep", "k_count", v)); });
  r.with("sweep", "dw_min", [&](const std::string& v) { sw.dw_min = to_double("sweep", "dw_min", v); });
  r.with("sweep", "dw_max", [&](const std::string& v) { sw.dw_max = to_double("sweep", "dw_max", v); });
  r.with("sweep", "dw_count",
         [&](const std::string& v) { sw.dw_count = static_cast<int>(to_int("sweep", "dw_count", v)); });
  r.with("sweep", "t_obs", [&](const std::string& v) { sw.t_obs = to_double("sweep", "t_obs", v); });
  r.with("sweep", "dt", [&](const std::string& v) { sw.dt = to_double("sweep", "dt", v); });
  r.with("sweep", "tail_target", [&](const std::string& v) { sw.tail_target = to_double("sweep", "tail_target", v); });
  r.with("sweep", "classical_members", [&](const std::string& v) {
    sw.classical_members = static_cast<std::size_t>(to_int("sweep", "classical_members", v));
  });
  r.with("sweep", "classical_dt", [&](const std::string& v) { sw.classical_dt = to_double("sweep", "classical_dt", v); });
  if (sw.k_count < 1 || sw.dw_count < 1) fail("sweep", "k_count/dw_count", "each axis needs at least one point");
  if (!(sw.t_obs > 0.0)) fail("sweep", "t_obs", "must be positive");
  if (sys.freqs.front() + std::min(sw.dw_min, sw.dw_max) <= 0.0) {
    fail("sweep", "dw_min", "second frequency would not be positive");
  }

  auto& bd = c.bounds;
  bd.temperature = sys.temperature;
  r.with("bounds", "n_modes", [&](const std::string& v) {
    bd.n_modes.clear();
    for (const auto& item : split_list(v)) bd.n_modes.push_back(static_cast<int>(to_int("bounds", "n_modes", item)));
  });
  r.with("bounds", "kappas", [&](const std::string& v) { bd.kappas = to_doubles("bounds", "kappas", v); });
  r.with("bounds", "d_min", [&](const std::string& v) { bd.d_min = to_double("bounds", "d_min", v); });
  r.with("bounds", "d_max", [&](const std::string& v) { bd.d_max = to_double("bounds", "d_max", v); });
  r.with("bounds", "d_count", [&](const std::string& v) { bd.d_count = static_cast<int>(to_int("bounds", "d_count", v)); });
  r.with("bounds", "T", [&](const std::string& v) { bd.temperature = to_double("bounds", "T", v); });
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace qsync::tools
