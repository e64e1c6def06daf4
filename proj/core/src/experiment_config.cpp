#include "mdflow/experiment_config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mdflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::vector<double> parse_list(const std::string& s, bool& ok) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  ok = true;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) ok = false;
    } catch (const std::exception&) {
      ok = false;
      return out;
    }
  }
  if (out.empty()) ok = false;
  return out;
}

/// Raw key/value view with error accumulation and consumption tracking.
class KvReader {
 public:
  KvReader(std::map<std::string, std::string> kv, std::vector<ConfigError>& errors)
      : kv_(std::move(kv)), errors_(&errors) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  std::optional<std::string> get_required_string(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      fail(key, "required key missing");
      return std::nullopt;
    }
    consumed_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    bool ok = false;
    const auto vals = parse_list(it->second, ok);
    if (!ok || vals.size() != 1) {
      fail(key, "expected a number, got '" + it->second + "'");
      return fallback;
    }
    return vals[0];
  }

  long long get_int(const std::string& key, long long fallback) {
    const double v = get_double(key, static_cast<double>(fallback));
    if (v != std::floor(v)) fail(key, "expected an integer");
    return static_cast<long long>(v);
  }

  std::optional<std::vector<double>> get_list(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    bool ok = false;
    auto vals = parse_list(it->second, ok);
    if (!ok) {
      fail(key, "expected a comma-separated number list, got '" + it->second + "'");
      return std::nullopt;
    }
    return vals;
  }

  std::optional<Mat> get_mat(const std::string& key, int rows, int cols) {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      fail(key, "required key missing");
      return std::nullopt;
    }
    consumed_.insert(key);
    Mat m(rows, cols);
    std::stringstream ss(it->second);
    std::string row;
    int r = 0;
    while (std::getline(ss, row, ';')) {
      bool ok = false;
      const auto vals = parse_list(row, ok);
      if (!ok || static_cast<int>(vals.size()) != cols || r >= rows) {
        fail(key, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " matrix as 'a,b;c,d'");
        return std::nullopt;
      }
      for (int c = 0; c < cols; ++c) m(r, c) = vals[static_cast<std::size_t>(c)];
      ++r;
    }
    if (r != rows) {
      fail(key, "expected " + std::to_string(rows) + " matrix rows");
      return std::nullopt;
    }
    return m;
  }

  void fail(const std::string& path, const std::string& message) {
    errors_->push_back({path, message});
  }

  void report_unknown_keys() {
    for (const auto& [key, value] : kv_)
      if (!consumed_.count(key)) fail(key, "unknown key");
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
  std::vector<ConfigError>* errors_;
};

std::optional<std::map<std::string, std::string>> parse_kv(const std::string& text,
                                                           std::vector<ConfigError>& errors) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back({"line " + std::to_string(lineno), "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      errors.push_back({"line " + std::to_string(lineno), "empty key or value"});
      continue;
    }
    if (kv.count(key)) {
      errors.push_back({key, "duplicate key"});
      continue;
    }
    kv[key] = value;
  }
  if (!errors.empty()) return std::nullopt;
  return kv;
}

/// Evaluates a quadratic coefficient table c0 + sum_i (cx_i x_i + cxx_i x_i^2).
/// Table layout: [c0, cx_1, cxx_1 (, cx_2, cxx_2)].
double eval_quadratic(const std::vector<double>& table, std::span<const double> x) {
  double v = table[0];
  for (std::size_t ax = 0; ax < x.size(); ++ax) {
    v += table[1 + 2 * ax] * x[ax] + table[2 + 2 * ax] * x[ax] * x[ax];
  }
  return v;
}

}  // namespace

ProblemSpec ExperimentConfig::build_problem() const {
  if (problem_kind == "lq_ball") {
    LQBallInstance inst;
    inst.state_dim = state_dim;
    inst.action_dim = n.cols;
    inst.noise_dim = m2.cols;
    inst.m1 = m1;
    inst.n = n;
    inst.m2 = m2;
    inst.m3 = m3;
    inst.radius = radius;
    inst.tau = tau;
    return make_lq_ball_problem(inst);
  }
  FiniteActionInstance inst;
  inst.state_dim = grid.dim;
  inst.actions = actions;
  inst.reference = a0;
  inst.tau = tau;
  const auto beta = beta_table;
  inst.drift = [beta](double, std::span<const double>, int action, std::span<double> out) {
    const auto& row = beta[static_cast<std::size_t>(action)];
    std::copy(row.begin(), row.end(), out.begin());
  };
  const auto phi = phi_table;
  inst.cost = [phi](double, std::span<const double> x, int action) {
    return eval_quadratic(phi[static_cast<std::size_t>(action)], x);
  };
  ProblemSpec spec = make_finite_action_problem(inst);
  const double s2 = sigma * sigma;
  spec.diffusion_sq = [s2](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), s2);
  };
  spec.ellipticity = s2;
  const auto g = g_table;
  spec.terminal_cost = [g](std::span<const double> x) { return eval_quadratic(g, x); };
  return spec;
}

ConfigResult validate_config_text(const std::string& text) {
  ConfigResult out;
  auto kv_or = parse_kv(text, out.errors);
  if (!kv_or) return out;
  KvReader kv(std::move(*kv_or), out.errors);
  ExperimentConfig cfg;

  // --- grid (parsed first; problem validation needs the dimension) ---
  const auto nx = kv.get_list("grid.nx");
  if (!nx) {
    kv.fail("grid.nx", "required key missing");
    return out;
  }
  const int dim = static_cast<int>(nx->size());
  if (dim != 1 && dim != 2) {
    kv.fail("grid.nx", "expected 1 or 2 entries");
    return out;
  }
  cfg.grid.dim = dim;
  for (int ax = 0; ax < dim; ++ax) {
    const double v = (*nx)[static_cast<std::size_t>(ax)];
    if (v != std::floor(v) || v < 3) kv.fail("grid.nx", "entries must be integers >= 3");
    cfg.grid.nx[static_cast<std::size_t>(ax)] = static_cast<int>(v);
  }
  const auto lo = kv.get_list("grid.lo");
  const auto hi = kv.get_list("grid.hi");
  if (!lo || static_cast<int>(lo->size()) != dim) kv.fail("grid.lo", "need one entry per axis");
  if (!hi || static_cast<int>(hi->size()) != dim) kv.fail("grid.hi", "need one entry per axis");
  if (lo && hi && static_cast<int>(lo->size()) == dim && static_cast<int>(hi->size()) == dim) {
    for (int ax = 0; ax < dim; ++ax) {
      cfg.grid.lo[static_cast<std::size_t>(ax)] = (*lo)[static_cast<std::size_t>(ax)];
      cfg.grid.hi[static_cast<std::size_t>(ax)] = (*hi)[static_cast<std::size_t>(ax)];
      if (!((*hi)[static_cast<std::size_t>(ax)] > (*lo)[static_cast<std::size_t>(ax)]))
        kv.fail("grid.hi", "must exceed grid.lo on every axis");
    }
  }
  cfg.grid.nt = static_cast<int>(kv.get_int("grid.nt", 0));
  if (cfg.grid.nt < 2) kv.fail("grid.nt", "need at least 2 time steps");
  cfg.grid.horizon = kv.get_double("grid.T", 0.0);
  if (!(cfg.grid.horizon > 0.0)) kv.fail("grid.T", "must be positive");

  // --- problem ---
  const auto kind = kv.get_required_string("problem.kind");
  if (!kind) return out;
  cfg.problem_kind = *kind;
  cfg.tau = kv.get_double("problem.tau", 0.0);
  if (cfg.tau < 0.0) kv.fail("problem.tau", "must be >= 0");

  int action_dim = 0;
  if (cfg.problem_kind == "lq_ball") {
    cfg.state_dim = dim;
    cfg.radius = kv.get_double("problem.radius", 1.0);
    if (!(cfg.radius > 0.0)) kv.fail("problem.radius", "must be positive");
    const auto m1 = kv.get_mat("problem.m1", dim, dim);
    const auto m3 = kv.get_mat("problem.m3", dim, dim);
    const auto m2 = kv.get_mat("problem.m2", dim, dim);
    // action dimension = ball dimension = columns of n; square by convention
    const auto nmat = kv.get_mat("problem.n", dim, dim);
    if (m1) cfg.m1 = *m1;
    if (m2) cfg.m2 = *m2;
    if (m3) cfg.m3 = *m3;
    if (nmat) cfg.n = *nmat;
    action_dim = dim;
  } else if (cfg.problem_kind == "finite_action") {
    if (!(cfg.tau > 0.0)) kv.fail("problem.tau", "finite_action requires tau > 0");
    cfg.actions = static_cast<int>(kv.get_int("problem.actions", 0));
    if (cfg.actions < 2) {
      kv.fail("problem.actions", "need at least 2 actions");
      return out;
    }
    action_dim = cfg.actions;
    const auto p = static_cast<std::size_t>(cfg.actions);
    if (const auto a0 = kv.get_list("problem.a0")) {
      cfg.a0 = *a0;
    } else {
      cfg.a0.assign(p, 1.0 / cfg.actions);
    }
    if (cfg.a0.size() != p) kv.fail("problem.a0", "need one weight per action");
    double sum = 0.0;
    bool positive = true;
    for (double w : cfg.a0) {
      sum += w;
      positive = positive && w > 0.0;
    }
    if (!positive) kv.fail("problem.a0", "weights must be strictly positive");
    if (std::abs(sum - 1.0) > 1e-12) kv.fail("problem.a0", "weights must sum to 1 (within 1e-12)");
    cfg.sigma = kv.get_double("problem.sigma", 0.0);
    if (!(cfg.sigma > 0.0)) kv.fail("problem.sigma", "must be positive");
    const std::size_t quad_len = 1 + 2 * static_cast<std::size_t>(dim);
    for (int i = 1; i <= cfg.actions; ++i) {
      const std::string bkey = "problem.beta." + std::to_string(i);
      const std::string pkey = "problem.phi." + std::to_string(i);
      const auto b = kv.get_list(bkey);
      if (!b || static_cast<int>(b->size()) != dim)
        kv.fail(bkey, "need one drift constant per state axis");
      else
        cfg.beta_table.push_back(*b);
      const auto ph = kv.get_list(pkey);
      if (!ph || ph->size() != quad_len)
        kv.fail(pkey, "need quadratic table c0,cx,cxx per axis (" + std::to_string(quad_len) +
                          " entries)");
      else
        cfg.phi_table.push_back(*ph);
    }
    const auto g = kv.get_list("problem.g");
    if (!g || g->size() != quad_len)
      kv.fail("problem.g", "need quadratic table c0,cx,cxx per axis");
    else
      cfg.g_table = *g;
  } else {
    kv.fail("problem.kind", "expected lq_ball or finite_action");
    return out;
  }

  // --- flow ---
  cfg.eta0 = kv.get_double("flow.eta0", 0.1);
  if (!(cfg.eta0 > 0.0)) kv.fail("flow.eta0", "must be positive");
  const double default_horizon = cfg.tau > 0.0 ? 10.0 / cfg.tau : 20.0;
  cfg.flow_horizon = kv.get_double("flow.S", default_horizon);
  if (!(cfg.flow_horizon > 0.0)) kv.fail("flow.S", "must be positive");
  cfg.probe.t = kv.get_double("flow.probe_t", 0.0);
  if (const auto px = kv.get_list("flow.probe_x")) {
    if (static_cast<int>(px->size()) != dim) {
      kv.fail("flow.probe", "probe_x needs one entry per axis");
    } else {
      for (int ax = 0; ax < dim; ++ax) cfg.probe.x[static_cast<std::size_t>(ax)] = (*px)[static_cast<std::size_t>(ax)];
    }
  } else {
    for (int ax = 0; ax < dim; ++ax)
      cfg.probe.x[static_cast<std::size_t>(ax)] =
          0.5 * (cfg.grid.lo[static_cast<std::size_t>(ax)] + cfg.grid.hi[static_cast<std::size_t>(ax)]);
  }
  for (int ax = 0; ax < dim; ++ax) {
    const auto a = static_cast<std::size_t>(ax);
    if (!(cfg.probe.x[a] > cfg.grid.lo[a] && cfg.probe.x[a] < cfg.grid.hi[a]))
      kv.fail("flow.probe", "probe point outside the domain");
  }
  if (cfg.probe.t < 0.0 || cfg.probe.t > cfg.grid.horizon)
    kv.fail("flow.probe", "probe time outside [0, T]");
  cfg.z0_mode = kv.get_string("flow.z0", "zero");
  if (cfg.z0_mode != "zero" && cfg.z0_mode != "random")
    kv.fail("flow.z0", "expected zero or random");
  cfg.z0_scale = kv.get_double("flow.z0_scale", 1.0);

  // --- scheme / certificates / misc ---
  const std::string mode = kv.get_string("scheme.mode", "implicit");
  if (mode == "implicit")
    cfg.scheme.mode = SchemeConfig::Mode::Implicit;
  else if (mode == "explicit")
    cfg.scheme.mode = SchemeConfig::Mode::Explicit;
  else
    kv.fail("scheme.mode", "expected implicit or explicit");
  cfg.scheme.tol = kv.get_double("scheme.tol", 1e-10);
  if (!(cfg.scheme.tol > 0.0)) kv.fail("scheme.tol", "must be positive");
  cfg.scheme.max_iters = static_cast<int>(kv.get_int("scheme.max_iters", 10000));
  cfg.scheme.cfl_safety = kv.get_double("scheme.cfl_safety", 0.9);
  if (!(cfg.scheme.cfl_safety > 0.0 && cfg.scheme.cfl_safety <= 1.0))
    kv.fail("scheme.cfl_safety", "must lie in (0, 1]");
  cfg.allowance = kv.get_double("cert.allowance", 0.1);
  if (cfg.allowance < 0.0) kv.fail("cert.allowance", "must be >= 0");
  cfg.clamp_eps = kv.get_double("cert.clamp", 1e-6);
  if (cfg.clamp_eps < 0.0) kv.fail("cert.clamp", "must be >= 0");
  const double seed = kv.get_double("seed", 0.0);
  if (seed < 0.0 || seed != std::floor(seed)) kv.fail("seed", "must be a nonnegative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);
  if (const auto snaps = kv.get_list("output.snapshot_s")) {
    cfg.snapshot_s = *snaps;
    std::sort(cfg.snapshot_s.begin(), cfg.snapshot_s.end());
  }

  (void)action_dim;
  kv.report_unknown_keys();
  if (!out.errors.empty()) return out;

  // Cross-field consistency that needs constructed objects.
  try {
    const Grid grid(cfg.grid);
    const ProblemSpec spec = cfg.build_problem();
    spec.validate_on(grid);
  } catch (const std::exception& e) {
    kv.fail("problem", e.what());
    return out;
  }

  out.config = std::move(cfg);
  return out;
}

ConfigResult validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigResult out;
    out.errors.push_back({"file", "cannot read config file: " + path});
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config_text(ss.str());
}

std::string ExperimentConfig::normalized_text() const {
  std::map<std::string, std::string> kv;
  const auto put_list = [&](const std::string& key, std::span<const double> vals) {
    std::string s;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) s += ",";
      s += fmt17(vals[i]);
    }
    kv[key] = s;
  };
  const auto put_mat = [&](const std::string& key, const Mat& m) {
    std::string s;
    for (int r = 0; r < m.rows; ++r) {
      if (r) s += ";";
      for (int c = 0; c < m.cols; ++c) {
        if (c) s += ",";
        s += fmt17(m(r, c));
      }
    }
    kv[key] = s;
  };

  kv["problem.kind"] = problem_kind;
  kv["problem.tau"] = fmt17(tau);
  if (problem_kind == "lq_ball") {
    kv["problem.radius"] = fmt17(radius);
    put_mat("problem.m1", m1);
    put_mat("problem.m2", m2);
    put_mat("problem.m3", m3);
    put_mat("problem.n", n);
  } else {
    kv["problem.actions"] = std::to_string(actions);
    put_list("problem.a0", a0);
    kv["problem.sigma"] = fmt17(sigma);
    for (int i = 0; i < actions; ++i) {
      put_list("problem.beta." + std::to_string(i + 1), beta_table[static_cast<std::size_t>(i)]);
      put_list("problem.phi." + std::to_string(i + 1), phi_table[static_cast<std::size_t>(i)]);
    }
    put_list("problem.g", g_table);
  }
  put_list("grid.lo", std::span<const double>(grid.lo.data(), static_cast<std::size_t>(grid.dim)));
  put_list("grid.hi", std::span<const double>(grid.hi.data(), static_cast<std::size_t>(grid.dim)));
  {
    std::string s;
    for (int ax = 0; ax < grid.dim; ++ax) {
      if (ax) s += ",";
      s += std::to_string(grid.nx[static_cast<std::size_t>(ax)]);
    }
    kv["grid.nx"] = s;
  }
  kv["grid.nt"] = std::to_string(grid.nt);
  kv["grid.T"] = fmt17(grid.horizon);
  kv["flow.eta0"] = fmt17(eta0);
  kv["flow.S"] = fmt17(flow_horizon);
  kv["flow.probe_t"] = fmt17(probe.t);
  put_list("flow.probe_x", std::span<const double>(probe.x.data(), static_cast<std::size_t>(grid.dim)));
  kv["flow.z0"] = z0_mode;
  kv["flow.z0_scale"] = fmt17(z0_scale);
  kv["scheme.mode"] = scheme.mode == SchemeConfig::Mode::Implicit ? "implicit" : "explicit";
  kv["scheme.tol"] = fmt17(scheme.tol);
  kv["scheme.max_iters"] = std::to_string(scheme.max_iters);
  kv["scheme.cfl_safety"] = fmt17(scheme.cfl_safety);
  kv["cert.allowance"] = fmt17(allowance);
  kv["cert.clamp"] = fmt17(clamp_eps);
  kv["seed"] = std::to_string(seed);
  if (!snapshot_s.empty()) put_list("output.snapshot_s", snapshot_s);

  std::string text;
  for (const auto& [key, value] : kv) text += key + " = " + value + "\n";
  return text;
}

}  // namespace mdflow
