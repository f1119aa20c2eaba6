#include "oscdrift/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "oscdrift/errors.hpp"

namespace oscdrift {

namespace {

struct Segment {
  std::size_t piece;
  double t0, t1;
  double width;  // absolute length of the segment
};

std::vector<Segment> segments(const PiecewisePotential& m, const std::vector<double>& extra) {
  std::vector<double> breaks = extra;
  std::sort(breaks.begin(), breaks.end());
  std::vector<Segment> out;
  const auto pieces = m.pieces();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    double t = 0.0;
    for (double r : breaks) {
      if (!(r > p.lo && r < p.hi)) continue;
      const double tr = (r - p.lo) / p.width;
      if (tr <= t || tr >= 1.0) continue;
      out.push_back({i, t, tr, (tr - t) * p.width});
      t = tr;
    }
    out.push_back({i, t, 1.0, (1.0 - t) * p.width});
  }
  return out;
}

std::size_t element_count(const Segment& s, int p_min, double base) {
  const double uniform = std::ceil(s.width * base);
  return std::max(static_cast<std::size_t>(p_min + 1), static_cast<std::size_t>(uniform));
}

std::size_t total_nodes(const std::vector<Segment>& segs, int p_min, double base) {
  std::size_t n = 1;
  for (const Segment& s : segs) n += element_count(s, p_min, base);
  return n;
}

void check_increasing(const Mesh& mesh) {
  for (std::size_t i = 1; i < mesh.nodes.size(); ++i) {
    if (!(mesh.nodes[i] > mesh.nodes[i - 1])) {
      std::ostringstream msg;
      msg << "mesh nodes not strictly increasing at index " << i << " (r = " << mesh.nodes[i]
          << "); pieces are narrower than binary64 resolution, raise the truncation floors";
      throw Error(ErrorKind::InvalidParams, msg.str());
    }
  }
}

}  // namespace

const char* to_string(NodeTag tag) noexcept {
  switch (tag) {
    case NodeTag::Uniform: return "uniform";
    case NodeTag::Graded: return "graded";
    case NodeTag::Boundary: return "piece-boundary";
  }
  return "?";
}

double Mesh::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (const Element& e : elements) h = std::min(h, e.length);
  return h;
}

std::size_t Mesh::index_of(double r) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), r);
  if (it == nodes.end() || *it != r) {
    std::ostringstream msg;
    msg << "r = " << r << " is not a mesh node";
    throw Error(ErrorKind::InvalidParams, msg.str());
  }
  return static_cast<std::size_t>(it - nodes.begin());
}

Mesh build_mesh(const PiecewisePotential& m, const MeshOptions& options) {
  if (options.p_min < 2) throw Error(ErrorKind::InvalidParams, "p_min must be at least 2");
  if (options.cap < 3) throw Error(ErrorKind::CapExceeded, "node cap below 3");
  const std::vector<Segment> segs = segments(m, options.extra_breaks);

  double base = options.base_intervals > 0
                    ? static_cast<double>(options.base_intervals)
                    : static_cast<double>(std::min<std::size_t>(options.cap - 1, 4000));
  const std::size_t floor_nodes = total_nodes(segs, options.p_min, 0.0);
  if (floor_nodes > options.cap) {
    std::ostringstream msg;
    msg << "resolving " << segs.size() << " pieces with p_min = " << options.p_min << " needs "
        << floor_nodes << " nodes, cap is " << options.cap;
    throw Error(ErrorKind::CapExceeded, msg.str());
  }
  while (total_nodes(segs, options.p_min, base) > options.cap) base *= 0.9;

  Mesh mesh;
  const auto pieces = m.pieces();
  mesh.nodes.push_back(0.0);
  mesh.tags.push_back(NodeTag::Boundary);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& s = segs[k];
    const Piece& p = pieces[s.piece];
    const std::size_t count = element_count(s, options.p_min, base);
    const bool graded = count == static_cast<std::size_t>(options.p_min + 1) &&
                        std::ceil(s.width * base) < static_cast<double>(count);
    const double dt = (s.t1 - s.t0) / static_cast<double>(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double t0 = s.t0 + dt * static_cast<double>(j);
      const double t1 = j + 1 == count ? s.t1 : s.t0 + dt * static_cast<double>(j + 1);
      mesh.elements.push_back({s.piece, t0, t1, (t1 - t0) * p.width, p.lo, p.width});
      if (j + 1 == count) {
        mesh.nodes.push_back(t1 >= 1.0 ? p.hi : p.lo + t1 * p.width);
        mesh.tags.push_back(NodeTag::Boundary);
      } else {
        mesh.nodes.push_back(p.lo + t1 * p.width);
        mesh.tags.push_back(graded ? NodeTag::Graded : NodeTag::Uniform);
      }
    }
  }
  check_increasing(mesh);
  return mesh;
}

Mesh build_mesh(const PiecewisePotential& m, int p_min, std::size_t cap) {
  MeshOptions options;
  options.p_min = p_min;
  options.cap = cap;
  return build_mesh(m, options);
}

Mesh refine(const Mesh& mesh, std::size_t cap) {
  const std::size_t n = 2 * mesh.nodes.size() - 1;
  if (n > cap) {
    throw Error(ErrorKind::CapExceeded,
                "refinement needs " + std::to_string(n) + " nodes, cap is " + std::to_string(cap));
  }
  Mesh out;
  out.nodes.reserve(n);
  out.tags.reserve(n);
  out.elements.reserve(2 * mesh.elements.size());
  out.nodes.push_back(mesh.nodes.front());
  out.tags.push_back(mesh.tags.front());
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
    const Element& e = mesh.elements[i];
    const double tm = 0.5 * (e.t0 + e.t1);
    out.elements.push_back({e.piece, e.t0, tm, 0.5 * e.length, e.piece_lo, e.piece_width});
    out.elements.push_back({e.piece, tm, e.t1, 0.5 * e.length, e.piece_lo, e.piece_width});
    out.nodes.push_back(e.piece_lo + tm * e.piece_width);
    const NodeTag right = mesh.tags[i + 1];
    out.tags.push_back(right == NodeTag::Boundary ? mesh.tags[i] : right);
    out.nodes.push_back(mesh.nodes[i + 1]);
    out.tags.push_back(right);
  }
  // The inherited tag of a midpoint next to two boundaries would itself be Boundary.
  for (std::size_t i = 1; i + 1 < out.tags.size(); i += 2) {
    if (out.tags[i] == NodeTag::Boundary) out.tags[i] = NodeTag::Graded;
  }
  check_increasing(out);
  return out;
}

Mesh submesh(const Mesh& mesh, double lo, double hi) {
  const std::size_t i0 = mesh.index_of(lo);
  const std::size_t i1 = mesh.index_of(hi);
  if (i1 <= i0) throw Error(ErrorKind::InvalidParams, "submesh needs lo < hi");
  Mesh out;
  out.nodes.assign(mesh.nodes.begin() + static_cast<std::ptrdiff_t>(i0),
                   mesh.nodes.begin() + static_cast<std::ptrdiff_t>(i1 + 1));
  out.tags.assign(mesh.tags.begin() + static_cast<std::ptrdiff_t>(i0),
                  mesh.tags.begin() + static_cast<std::ptrdiff_t>(i1 + 1));
  out.elements.assign(mesh.elements.begin() + static_cast<std::ptrdiff_t>(i0),
                      mesh.elements.begin() + static_cast<std::ptrdiff_t>(i1));
  return out;
}

void write_mesh_csv(std::ostream& out, const Mesh& mesh) {
  out << "index,node,provenance\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << i << ',' << mesh.nodes[i] << ',' << to_string(mesh.tags[i]) << '\n';
  }
  out.precision(old);
}

}  // namespace oscdrift
