#include "rbfmgn/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rbfmgn/error.hpp"

namespace rbfmgn {

using json = nlohmann::json;
using nn::Tensor2;

namespace {

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorKind::Config, what); }

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    corrupt(std::string(what) + " is not valid JSON: " + e.what());
  }
}

// Throws a Config error for any missing key or wrong type instead of the
// library's own exception types.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    corrupt(std::string(what) + " is malformed: " + e.what());
  }
}

json tensor_rows(const Tensor2& t) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json bias_row(const Tensor2& b) {
  json row = json::array();
  for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(b(0, c));
  return row;
}

void read_weight(const json& w, Tensor2& into, const std::string& name) {
  if (!w.is_array() || static_cast<Eigen::Index>(w.size()) != into.rows()) corrupt(name + ": wrong row count");
  for (Eigen::Index r = 0; r < into.rows(); ++r) {
    const json& row = w[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != into.cols()) corrupt(name + ": wrong column count");
    for (Eigen::Index c = 0; c < into.cols(); ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) corrupt(name + ": non-numeric entry");
      into(r, c) = v.get<double>();
    }
  }
}

void read_bias(const json& b, Tensor2& into, const std::string& name) {
  if (!b.is_array() || static_cast<Eigen::Index>(b.size()) != into.cols()) corrupt(name + ": wrong bias length");
  for (Eigen::Index c = 0; c < into.cols(); ++c) {
    if (!b[static_cast<std::size_t>(c)].is_number()) corrupt(name + ": non-numeric entry");
    into(0, c) = b[static_cast<std::size_t>(c)].get<double>();
  }
}

// Groups tensors "mlp.layer.w|b" into {mlp: {layers: [{w, b}]}}.
json mlps_to_json(const nn::ModelParams& model) {
  json out = json::object();
  nn::for_each_tensor(model, [&](const std::string& name, const Tensor2& t) {
    const std::size_t last = name.rfind('.');
    const std::size_t mid = name.rfind('.', last - 1);
    const std::string mlp = name.substr(0, mid);
    const std::size_t layer = std::stoul(name.substr(mid + 1, last - mid - 1));
    json& layers = out[mlp]["layers"];
    if (layers.is_null()) layers = json::array();
    while (layers.size() <= layer) layers.push_back(json::object());
    if (name.substr(last + 1) == "w") {
      layers[layer]["w"] = tensor_rows(t);
    } else {
      layers[layer]["b"] = bias_row(t);
    }
  });
  return out;
}

void mlps_from_json(const json& in, nn::ModelParams& model, const std::string& what) {
  if (!in.is_object()) corrupt(what + ": expected an object of MLPs");
  std::size_t expected = 0;
  nn::for_each_tensor(model, [&](const std::string& name, Tensor2& t) {
    const std::size_t last = name.rfind('.');
    const std::size_t mid = name.rfind('.', last - 1);
    const std::string mlp = name.substr(0, mid);
    const std::size_t layer = std::stoul(name.substr(mid + 1, last - mid - 1));
    if (!in.contains(mlp) || !in.at(mlp).contains("layers") || !in.at(mlp).at("layers").is_array() ||
        in.at(mlp).at("layers").size() <= layer) {
      corrupt(what + ": missing " + mlp + " layer " + std::to_string(layer));
    }
    const json& l = in.at(mlp).at("layers")[layer];
    if (name.substr(last + 1) == "w") {
      if (!l.contains("w")) corrupt(what + ": missing weights of " + mlp);
      read_weight(l.at("w"), t, what + "." + name);
    } else {
      if (!l.contains("b")) corrupt(what + ": missing bias of " + mlp);
      read_bias(l.at("b"), t, what + "." + name);
    }
    if (layer == 0 && name.substr(last + 1) == "w") ++expected;
  });
  if (in.size() != expected) corrupt(what + ": unexpected MLP entries");
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string graph_to_json(const Graph& g) {
  json nodes = json::array(), boundary = json::array(), edges = json::array(), tris = json::array();
  for (const Point2& p : g.nodes.coords) nodes.push_back({p.x, p.y});
  for (const std::uint8_t b : g.nodes.boundary_mask) boundary.push_back(static_cast<int>(b));
  for (const Edge& e : g.edges) edges.push_back({e.from, e.to});
  for (const Triangle& t : g.triangles) tris.push_back({t[0], t[1], t[2]});
  return json{{"nodes", nodes}, {"boundary", boundary}, {"edges", edges}, {"triangles", tris}}.dump();
}

Graph graph_from_json(const std::string& text) {
  const json j = parse(text, "graph");
  return guarded("graph", [&] {
    std::vector<Point2> interior, bnd;
    const json& nodes = j.at("nodes");
    const json& mask = j.at("boundary");
    if (nodes.size() != mask.size()) corrupt("graph: nodes and boundary flags differ in length");
    Graph g;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      g.nodes.coords.push_back({nodes[i].at(0).get<double>(), nodes[i].at(1).get<double>()});
      const int b = mask[i].get<int>();
      g.nodes.boundary_mask.push_back(static_cast<std::uint8_t>(b != 0));
      (b != 0 ? g.nodes.n_b : g.nodes.n_c) += 1;
    }
    for (int i = 0; i < g.nodes.size(); ++i) {
      if (g.nodes.is_boundary(i) != (i >= g.nodes.n_c)) corrupt("graph: interior nodes must precede boundary nodes");
    }
    const int n = g.nodes.size();
    for (const json& e : j.at("edges")) {
      const Edge edge{e.at(0).get<int>(), e.at(1).get<int>()};
      if (edge.from < 0 || edge.from >= n || edge.to < 0 || edge.to >= n) corrupt("graph: edge index out of range");
      g.edges.push_back(edge);
    }
    for (const json& t : j.at("triangles")) {
      const Triangle tri{t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()};
      for (const int v : tri) {
        if (v < 0 || v >= n) corrupt("graph: triangle index out of range");
      }
      g.triangles.push_back(tri);
    }
    return g;
  });
}

std::string graph_hash(const Graph& graph) { return hex64(fnv1a(graph_to_json(graph))); }

std::string stencils_to_json(const StencilSet& s) {
  json list = json::array();
  for (const Stencil& st : s.stencils) {
    list.push_back({{"center", st.center}, {"neighbors", st.neighbors}, {"weights", st.weights}});
  }
  return json{{"m", s.m},
              {"kernel", {{"kind", to_string(s.kernel.kind)}, {"epsilon", s.kernel.epsilon}}},
              {"poly_order", s.poly_order},
              {"stencils", list}}
      .dump();
}

StencilSet stencils_from_json(const std::string& text) {
  const json j = parse(text, "stencils");
  return guarded("stencils", [&] {
    StencilSet s;
    s.m = j.at("m").get<int>();
    s.kernel.kind = kernel_kind_from_string(j.at("kernel").at("kind").get<std::string>());
    s.kernel.epsilon = j.at("kernel").at("epsilon").get<double>();
    s.poly_order = j.at("poly_order").get<int>();
    for (const json& st : j.at("stencils")) {
      Stencil x;
      x.center = st.at("center").get<int>();
      x.neighbors = st.at("neighbors").get<std::vector<int>>();
      x.weights = st.at("weights").get<std::vector<double>>();
      if (static_cast<int>(x.neighbors.size()) != s.m || x.weights.size() != x.neighbors.size()) {
        corrupt("stencils: stencil " + std::to_string(x.center) + " does not have m entries");
      }
      s.stencils.push_back(std::move(x));
    }
    return s;
  });
}

std::string checkpoint_to_json(const Checkpoint& c) {
  const nn::ModelConfig& mc = c.model.config;
  json adam = {{"t", c.adam.t},
               {"lr", c.adam.config.lr},
               {"beta1", c.adam.config.beta1},
               {"beta2", c.adam.config.beta2},
               {"epsilon", c.adam.config.epsilon},
               {"m", mlps_to_json(c.adam.m)},
               {"v", mlps_to_json(c.adam.v)}};
  return json{{"latent_dim", mc.latent_dim},
              {"hidden", mc.hidden},
              {"hidden_layers", mc.hidden_layers},
              {"blocks", mc.blocks},
              {"node_features", mc.node_features},
              {"edge_features", mc.edge_features},
              {"mlps", mlps_to_json(c.model)},
              {"adam", adam},
              {"seed", c.seed},
              {"graph_hash", c.graph_hash}}
      .dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = parse(text, "checkpoint");
  return guarded("checkpoint", [&] {
    nn::ModelConfig mc;
    mc.latent_dim = j.at("latent_dim").get<int>();
    mc.hidden = j.at("hidden").get<int>();
    mc.hidden_layers = j.at("hidden_layers").get<int>();
    mc.blocks = j.at("blocks").get<int>();
    mc.node_features = j.at("node_features").get<int>();
    mc.edge_features = j.at("edge_features").get<int>();
    if (mc.latent_dim < 1 || mc.latent_dim > 4096 || mc.hidden < 1 || mc.hidden > 4096 || mc.hidden_layers < 0 ||
        mc.hidden_layers > 64 || mc.blocks < 0 || mc.blocks > 256 || mc.node_features < 1 || mc.node_features > 64 ||
        mc.edge_features < 1 || mc.edge_features > 64) {
      corrupt("checkpoint: model dimensions out of range");
    }
    Checkpoint c;
    c.model = nn::zeros_like(nn::init_model(mc, 0));
    mlps_from_json(j.at("mlps"), c.model, "checkpoint.mlps");
    const json& a = j.at("adam");
    nn::AdamConfig ac;
    ac.lr = a.at("lr").get<double>();
    ac.beta1 = a.at("beta1").get<double>();
    ac.beta2 = a.at("beta2").get<double>();
    ac.epsilon = a.at("epsilon").get<double>();
    c.adam = nn::make_adam(c.model, ac);
    c.adam.t = a.at("t").get<long>();
    if (c.adam.t < 0) corrupt("checkpoint: negative Adam step");
    mlps_from_json(a.at("m"), c.adam.m, "checkpoint.adam.m");
    mlps_from_json(a.at("v"), c.adam.v, "checkpoint.adam.v");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.graph_hash = j.at("graph_hash").get<std::string>();
    return c;
  });
}

std::string system_to_json(const ResidualSystem& s) {
  json rows = json::array();
  for (int r = 0; r < s.A.rows(); ++r) {
    const auto b = static_cast<std::size_t>(s.A.row_ptr[static_cast<std::size_t>(r)]);
    const auto e = static_cast<std::size_t>(s.A.row_ptr[static_cast<std::size_t>(r) + 1]);
    rows.push_back({{"cols", std::vector<int>(s.A.cols.begin() + static_cast<long>(b), s.A.cols.begin() + static_cast<long>(e))},
                    {"vals", std::vector<double>(s.A.vals.begin() + static_cast<long>(b), s.A.vals.begin() + static_cast<long>(e))}});
  }
  return json{{"level", s.level}, {"time", s.time}, {"n_c", s.n_c}, {"n_b", s.n_b},
              {"rows", rows},   {"H", s.H},         {"F", s.F}}
      .dump();
}

std::string field_dump_to_json(double time, int level, const std::vector<FieldRecord>& records) {
  json list = json::array();
  for (const FieldRecord& r : records) {
    list.push_back({{"node", r.node},
                    {"x", r.x.x},
                    {"y", r.x.y},
                    {"pred", r.pred},
                    {"truth", r.truth},
                    {"abs_err", std::abs(r.pred - r.truth)}});
  }
  return json{{"time", time}, {"level", level}, {"records", list}}.dump();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace rbfmgn
