#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rbfmgn/assembly.hpp"
#include "rbfmgn/geometry.hpp"
#include "rbfmgn/nn/adam.hpp"
#include "rbfmgn/nn/model.hpp"
#include "rbfmgn/rbf_stencil.hpp"

namespace rbfmgn {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// {nodes:[[x,y],...], boundary:[0|1,...], edges:[[i,j],...], triangles:[[i,j,k],...]}
std::string graph_to_json(const Graph& graph);
Graph graph_from_json(const std::string& text);
/// Hash of the graph's canonical JSON form.
std::string graph_hash(const Graph& graph);

/// {m, kernel:{kind,epsilon}, poly_order, stencils:[{center, neighbors, weights}]}
std::string stencils_to_json(const StencilSet& stencils);
StencilSet stencils_from_json(const std::string& text);

struct Checkpoint {
  nn::ModelParams model;
  nn::AdamState adam;
  std::uint64_t seed = 0;
  std::string graph_hash;
};

/// {latent_dim, hidden, blocks, node_features, edge_features,
///  mlps:{name:{layers:[{w:[[..]], b:[..]}]}}, adam:{t, lr, m, v}, seed, graph_hash}
std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Rejects malformed or inconsistent documents with a Config error.
Checkpoint checkpoint_from_json(const std::string& text);

/// {level, time, n_c, n_b, rows:[{cols, vals}], H, F}
std::string system_to_json(const ResidualSystem& system);

struct FieldRecord {
  int node = 0;
  Point2 x;
  double pred = 0.0;
  double truth = 0.0;
};

/// {time, level, records:[{node, x, y, pred, truth, abs_err}]}
std::string field_dump_to_json(double time, int level, const std::vector<FieldRecord>& records);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename.
void write_file(const std::string& path, std::string_view contents);

}  // namespace rbfmgn
