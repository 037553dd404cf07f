#include "rbfmgn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rbfmgn/error.hpp"

namespace rbfmgn {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::Config, field + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where.empty() ? "config" : where, "expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) bad(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
  }
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

double get_real(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(join(where, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(join(where, key), "must be finite");
  return d;
}

double need_real(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) bad(join(where, key), "required");
  return get_real(obj, key, where, 0.0);
}

long long get_int(const json& obj, const std::string& key, const std::string& where, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(join(where, key), "expected an integer");
  return v.get<long long>();
}

long long need_int(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) bad(join(where, key), "required");
  return get_int(obj, key, where, 0);
}

std::string get_string(const json& obj, const std::string& key, const std::string& where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(join(where, key), "expected a string");
  return v.get<std::string>();
}

template <class F>
auto relabel(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Config) throw;
    bad(field, e.what());
  }
}

int positive_int(const json& obj, const std::string& key, const std::string& where, long long fallback, long long lo) {
  const long long v = get_int(obj, key, where, fallback);
  if (v < lo || v > 100000000) bad(join(where, key), "must be >= " + std::to_string(lo));
  return static_cast<int>(v);
}

Point2 parse_point(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) bad(field, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

DomainSpec parse_domain(const json& d) {
  const std::string where = "domain";
  check_keys(d, {"kind", "params", "vertices"}, where);
  if (!d.contains("kind")) bad("domain.kind", "required");
  const DomainKind kind = relabel("domain.kind", [&] { return domain_kind_from_string(get_string(d, "kind", where, "")); });
  DomainSpec spec;
  switch (kind) {
    case DomainKind::UnitSquare: spec = DomainSpec::unit_square(); break;
    case DomainKind::Amoeba: spec = DomainSpec::amoeba(); break;
    case DomainKind::Butterfly: spec = DomainSpec::butterfly(); break;
    case DomainKind::LShape: spec = DomainSpec::lshape(); break;
    case DomainKind::PolygonCustom: spec.kind = DomainKind::PolygonCustom; break;
  }
  if (d.contains("params")) {
    std::set<std::string> allowed;
    if (kind == DomainKind::Amoeba) allowed = {"center_x", "center_y"};
    if (kind == DomainKind::Butterfly) allowed = {"scale_x", "scale_y"};
    check_keys(d.at("params"), allowed, "domain.params");
    for (const auto& item : d.at("params").items()) spec.parameters[item.key()] = get_real(d.at("params"), item.key(), "domain.params", 0.0);
  }
  if (d.contains("vertices")) {
    if (kind != DomainKind::PolygonCustom) bad("domain.vertices", "only the polygon domain takes vertices");
    const json& v = d.at("vertices");
    if (!v.is_array()) bad("domain.vertices", "expected a list of [x, y]");
    std::vector<Point2> pts;
    for (std::size_t k = 0; k < v.size(); ++k) pts.push_back(parse_point(v[k], "domain.vertices[" + std::to_string(k) + "]"));
    spec = relabel("domain.vertices", [&] { return DomainSpec::polygon(std::move(pts)); });
  } else if (kind == DomainKind::PolygonCustom) {
    bad("domain.vertices", "required for the polygon domain");
  }
  return spec;
}

KernelKind parse_kernel(const std::string& name, const std::string& field) {
  return relabel(field, [&] { return kernel_kind_from_string(name); });
}

SweepConfig parse_sweep(const json& s) {
  const std::string where = "eval.sweep";
  check_keys(s, {"param", "values", "kernels"}, where);
  SweepConfig c;
  c.param = get_string(s, "param", where, "");
  static const std::set<std::string> params = {"tau", "lambda", "epsilon", "n", "m"};
  if (!params.count(c.param)) bad("eval.sweep.param", "expected one of tau, lambda, epsilon, n, m");
  if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty()) {
    bad("eval.sweep.values", "expected a non-empty list of numbers");
  }
  for (const json& v : s.at("values")) {
    if (!v.is_number()) bad("eval.sweep.values", "expected numbers");
    c.values.push_back(v.get<double>());
  }
  if (s.contains("kernels")) {
    if (!s.at("kernels").is_array()) bad("eval.sweep.kernels", "expected a list of kernel names");
    for (const json& k : s.at("kernels")) {
      if (!k.is_string()) bad("eval.sweep.kernels", "expected kernel names");
      c.kernels.push_back(parse_kernel(k.get<std::string>(), "eval.sweep.kernels"));
    }
  }
  return c;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"kind", "coefficient", "domain", "solution", "tau", "T_final", "n_interior", "n_boundary", "seed",
                    "rbf", "model", "train", "oracle", "initial", "eval"},
             "");
  RunConfig c;
  ProblemSpec& p = c.problem;
  if (!root.contains("kind")) bad("kind", "required");
  p.kind = relabel("kind", [&] { return pde_kind_from_string(get_string(root, "kind", "", "")); });
  p.coefficient = need_real(root, "coefficient", "");
  if (!root.contains("domain")) bad("domain", "required");
  p.domain = parse_domain(root.at("domain"));
  p.solution = root.contains("solution")
                   ? relabel("solution", [&] { return solution_from_string(get_string(root, "solution", "", "")); })
                   : default_solution(p.kind, p.domain.kind);
  p.tau = need_real(root, "tau", "");
  p.T_final = need_real(root, "T_final", "");
  if (!root.contains("n_interior")) bad("n_interior", "required");
  if (!root.contains("n_boundary")) bad("n_boundary", "required");
  c.n_interior = positive_int(root, "n_interior", "", 0, 1);
  c.n_boundary = positive_int(root, "n_boundary", "", 0, 3);
  const long long seed = need_int(root, "seed", "");
  if (seed < 0) bad("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);

  if (root.contains("initial")) {
    const json& ini = root.at("initial");
    check_keys(ini, {"amplitude", "center", "sharpness"}, "initial");
    if (p.kind != PdeKind::Wave) bad("initial", "only the wave problem takes an initial bump");
    p.initial_bump.amplitude = get_real(ini, "amplitude", "initial", p.initial_bump.amplitude);
    if (ini.contains("center")) p.initial_bump.center = parse_point(ini.at("center"), "initial.center");
    p.initial_bump.sharpness = get_real(ini, "sharpness", "initial", p.initial_bump.sharpness);
  }
  relabel("problem", [&] {
    validate(p);
    return 0;
  });

  if (root.contains("rbf")) {
    const json& r = root.at("rbf");
    check_keys(r, {"kind", "epsilon", "m", "poly_order"}, "rbf");
    c.rbf.kernel.kind = parse_kernel(get_string(r, "kind", "rbf", "ph3"), "rbf.kind");
    c.rbf.kernel.epsilon = get_real(r, "epsilon", "rbf", 1.0);
    c.rbf.m = positive_int(r, "m", "rbf", 15, 1);
    c.rbf.poly_order = positive_int(r, "poly_order", "rbf", 2, 0);
  }
  if (!(c.rbf.kernel.epsilon > 0.0)) bad("rbf.epsilon", "must be > 0");
  if (c.rbf.m < monomial_count(c.rbf.poly_order)) bad("rbf.m", "must be >= the number of monomials of poly_order");
  if (c.rbf.m > c.n_interior + c.n_boundary) bad("rbf.m", "exceeds the node count");

  int latent = 64, hidden = 64, blocks = 8;
  if (root.contains("model")) {
    const json& m = root.at("model");
    check_keys(m, {"latent_dim", "hidden", "blocks"}, "model");
    latent = positive_int(m, "latent_dim", "model", latent, 1);
    hidden = positive_int(m, "hidden", "model", hidden, 1);
    blocks = positive_int(m, "blocks", "model", blocks, 0);
  }
  c.model = model_config_for(p, latent, hidden, blocks);

  TrainConfig& t = c.train;
  t.T_train = p.T_final;
  t.T_eval = p.T_final;
  if (root.contains("train")) {
    const json& tr = root.at("train");
    check_keys(tr, {"iterations", "batch_size", "T_train", "T_eval", "lr", "checkpoint_every", "inverse"}, "train");
    t.iterations = positive_int(tr, "iterations", "train", t.iterations, 0);
    t.batch_size = positive_int(tr, "batch_size", "train", t.batch_size, 1);
    t.T_train = get_real(tr, "T_train", "train", t.T_train);
    t.T_eval = get_real(tr, "T_eval", "train", std::max(t.T_train, p.T_final));
    t.adam.lr = get_real(tr, "lr", "train", t.adam.lr);
    t.checkpoint_every = positive_int(tr, "checkpoint_every", "train", 0, 0);
    if (tr.contains("inverse")) {
      if (!tr.at("inverse").is_boolean()) bad("train.inverse", "expected true or false");
      t.inverse = tr.at("inverse").get<bool>();
    }
  }
  t.seed = c.seed;
  relabel("train", [&] {
    validate(t, p);
    return 0;
  });

  if (root.contains("oracle")) {
    const json& o = root.at("oracle");
    check_keys(o, {"substeps"}, "oracle");
    if (o.contains("substeps")) {
      const json& s = o.at("substeps");
      if (s.is_string() && s.get<std::string>() == "auto") {
        c.oracle_substeps = 0;
      } else if (s.is_number_integer() && s.get<long long>() >= 1 && s.get<long long>() <= 1000000) {
        c.oracle_substeps = s.get<int>();
      } else {
        bad("oracle.substeps", "expected \"auto\" or a positive integer");
      }
    }
  }

  if (root.contains("eval")) {
    const json& e = root.at("eval");
    check_keys(e, {"dump_times", "sweep"}, "eval");
    if (e.contains("dump_times")) {
      if (!e.at("dump_times").is_array()) bad("eval.dump_times", "expected a list of times");
      for (const json& v : e.at("dump_times")) {
        if (!v.is_number()) bad("eval.dump_times", "expected numbers");
        const double time = v.get<double>();
        if (time < 0.0 || time > t.T_eval + 1e-12) bad("eval.dump_times", "times must lie in [0, T_eval]");
        c.eval.dump_times.push_back(time);
      }
    }
    if (e.contains("sweep")) c.eval.sweep = parse_sweep(e.at("sweep"));
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const RunConfig& c) {
  const ProblemSpec& p = c.problem;
  json domain = {{"kind", to_string(p.domain.kind)}};
  if (!p.domain.parameters.empty()) domain["params"] = p.domain.parameters;
  if (p.domain.kind == DomainKind::PolygonCustom) {
    json v = json::array();
    for (const Point2& q : p.domain.vertices) v.push_back({q.x, q.y});
    domain["vertices"] = v;
  }
  json root = {
      {"kind", to_string(p.kind)},
      {"coefficient", p.coefficient},
      {"domain", domain},
      {"solution", to_string(p.solution)},
      {"tau", p.tau},
      {"T_final", p.T_final},
      {"n_interior", c.n_interior},
      {"n_boundary", c.n_boundary},
      {"seed", c.seed},
      {"rbf",
       {{"kind", to_string(c.rbf.kernel.kind)}, {"epsilon", c.rbf.kernel.epsilon}, {"m", c.rbf.m},
        {"poly_order", c.rbf.poly_order}}},
      {"model", {{"latent_dim", c.model.latent_dim}, {"hidden", c.model.hidden}, {"blocks", c.model.blocks}}},
      {"train",
       {{"iterations", c.train.iterations}, {"batch_size", c.train.batch_size}, {"T_train", c.train.T_train},
        {"T_eval", c.train.T_eval}, {"lr", c.train.adam.lr}, {"checkpoint_every", c.train.checkpoint_every},
        {"inverse", c.train.inverse}}},
  };
  if (c.oracle_substeps == 0) {
    root["oracle"] = {{"substeps", "auto"}};
  } else {
    root["oracle"] = {{"substeps", c.oracle_substeps}};
  }
  if (p.kind == PdeKind::Wave) {
    root["initial"] = {{"amplitude", p.initial_bump.amplitude},
                       {"center", {p.initial_bump.center.x, p.initial_bump.center.y}},
                       {"sharpness", p.initial_bump.sharpness}};
  }
  json eval = json::object();
  if (!c.eval.dump_times.empty()) eval["dump_times"] = c.eval.dump_times;
  if (c.eval.sweep) {
    json kernels = json::array();
    for (const KernelKind k : c.eval.sweep->kernels) kernels.push_back(to_string(k));
    eval["sweep"] = {{"param", c.eval.sweep->param}, {"values", c.eval.sweep->values}};
    if (!kernels.empty()) eval["sweep"]["kernels"] = kernels;
  }
  if (!eval.empty()) root["eval"] = eval;
  return root.dump(2);
}

RunConfig with_sweep_value(const RunConfig& base, const std::string& param, double value) {
  RunConfig c = base;
  if (param == "tau") {
    if (!(value > 0.0)) bad("eval.sweep.values", "tau must be > 0");
    // Horizons stay fixed in time; they must remain multiples of the new tau.
    c.problem.tau = value;
    relabel("eval.sweep.values", [&] {
      validate(c.problem);
      validate(c.train, c.problem);
      return 0;
    });
  } else if (param == "lambda") {
    c.problem.coefficient = value;
    relabel("eval.sweep.values", [&] {
      validate(c.problem);
      return 0;
    });
  } else if (param == "epsilon") {
    if (!(value > 0.0)) bad("eval.sweep.values", "epsilon must be > 0");
    c.rbf.kernel.epsilon = value;
  } else if (param == "n") {
    const double total = base.n_interior + base.n_boundary;
    const int n = static_cast<int>(std::lround(value));
    c.n_boundary = std::max(3, static_cast<int>(std::lround(n * base.n_boundary / total)));
    c.n_interior = n - c.n_boundary;
    if (c.n_interior < 1 || c.rbf.m > n) bad("eval.sweep.values", "node count too small");
  } else if (param == "m") {
    c.rbf.m = static_cast<int>(std::lround(value));
    if (c.rbf.m < monomial_count(c.rbf.poly_order) || c.rbf.m > c.n_interior + c.n_boundary) {
      bad("eval.sweep.values", "stencil size out of range");
    }
  } else {
    bad("eval.sweep.param", "unknown sweep parameter '" + param + "'");
  }
  return c;
}

Graph build_graph(const RunConfig& config) {
  const NodeSet nodes = sample_nodes(config.problem.domain, config.n_interior, config.n_boundary, config.seed);
  return triangulate(nodes, &config.problem.domain);
}

StencilSet build_stencils(const RunConfig& config, const NodeSet& nodes) {
  return build_stencil_set(nodes, config.rbf.m, config.rbf.kernel, config.rbf.poly_order);
}

Setup build_setup(const RunConfig& config) {
  Graph graph = build_graph(config);
  StencilSet stencils = build_stencils(config, graph.nodes);
  const int levels = config.problem.levels_until(std::max(config.problem.T_final, config.train.T_eval));
  Setup s;
  s.problem = config.problem;
  s.graph = std::move(graph);
  s.stencils = std::move(stencils);
  s.topology = nn::make_topology(s.graph);
  if (s.problem.has_analytic()) {
    s.reference = reference_trajectory(s.problem, s.graph.nodes, s.stencils, levels);
  } else {
    s.reference.provenance = Provenance::Oracle;
    s.reference.snapshots = solve_direct(s.problem, s.graph.nodes, s.stencils, levels, config.oracle_substeps);
  }
  return s;
}

}  // namespace rbfmgn
