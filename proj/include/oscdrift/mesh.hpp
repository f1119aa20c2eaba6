#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "oscdrift/potential.hpp"

namespace oscdrift {

enum class NodeTag : std::uint8_t { Uniform, Graded, Boundary };

const char* to_string(NodeTag tag) noexcept;

/// One mesh interval. Elements never straddle a potential piece; `t0`, `t1`
/// are local piece coordinates and `length` = (t1 - t0) * piece width, which
/// stays exact even where absolute node positions lose digits near a and b.
struct Element {
  std::size_t piece = 0;
  double t0 = 0.0;
  double t1 = 1.0;
  double length = 0.0;
  double piece_lo = 0.0;     // absolute start of the piece
  double piece_width = 0.0;  // exact piece width
};

struct Mesh {
  std::vector<double> nodes;  // strictly increasing, nodes[0] = 0, nodes.back() = 1
  std::vector<NodeTag> tags;
  std::vector<Element> elements;  // elements[i] spans [nodes[i], nodes[i+1]]

  std::size_t size() const noexcept { return nodes.size(); }
  double min_spacing() const;
  /// Index of the node equal to r; throws InvalidParams if r is not a node.
  std::size_t index_of(double r) const;
};

struct MeshOptions {
  int p_min = 8;                   // interior nodes per piece
  std::size_t cap = 2'000'000;     // node budget
  std::size_t base_intervals = 0;  // uniform spacing 1/base_intervals; 0 picks min(cap-1, 4000)
  std::vector<double> extra_breaks;  // coefficient kinks etc. to align with nodes
};

/// Piece-resolving mesh. Every piece boundary is a node; each piece gets
/// max(p_min + 1, ceil(width * base_intervals)) uniform elements. When the
/// budget is exceeded the base spacing is coarsened before giving up with
/// CapExceeded.
Mesh build_mesh(const PiecewisePotential& m, const MeshOptions& options = {});
Mesh build_mesh(const PiecewisePotential& m, int p_min, std::size_t cap);

/// Bisects every element.
Mesh refine(const Mesh& mesh, std::size_t cap = 2'000'000);

/// Nodes and elements inside [lo, hi]; both ends must already be nodes.
Mesh submesh(const Mesh& mesh, double lo, double hi);

void write_mesh_csv(std::ostream& out, const Mesh& mesh);

}  // namespace oscdrift
