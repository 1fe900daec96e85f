#pragma once

// Upper half-space models H^m = {x^m > 0} with metric |dx|^2/(x^m)^2, the
// hyperbolic distance, tensor-product slab grids over truncated boxes
// [-X, X]^{m-1} x [delta, H], and the discrete Laplace-Beltrami and tension
// operators built from second-order central differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmdp/errors.hpp"

namespace hmdp {

// Source dimension m and target dimension n, both at least 2.
struct ModelDims {
  int m = 2;
  int n = 2;

  ModelDims() = default;
  ModelDims(int source, int target) : m(source), n(target) {
    if (m < 2 || n < 2)
      throw DomainError("model dimensions must satisfy m >= 2 and n >= 2, got m=" +
                        std::to_string(m) + " n=" + std::to_string(n));
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// A point of an upper half-space model; the last coordinate is the height.
class HalfSpacePoint {
 public:
  explicit HalfSpacePoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw DomainError("half-space point needs at least 2 coordinates");
    if (!(coords_.back() > 0.0) || !std::isfinite(coords_.back()))
      throw DomainError("half-space point must have positive last coordinate");
  }
  HalfSpacePoint(std::initializer_list<double> coords)
      : HalfSpacePoint(std::vector<double>(coords)) {}

  std::size_t dim() const { return coords_.size(); }
  double height() const { return coords_.back(); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

 private:
  std::vector<double> coords_;
};

// Distance in the upper half-space model from raw coordinates. Uses
// d = 2 asinh(|p - q| / (2 sqrt(p_last q_last))), which equals
// arccosh(1 + |p - q|^2 / (2 p_last q_last)) but keeps full relative
// accuracy for nearby points.
inline double hyperbolic_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw DomainError("hyperbolic_distance: dimension mismatch");
  if (p.empty() || !(p.back() > 0.0) || !(q.back() > 0.0))
    throw DomainError("hyperbolic_distance: last coordinate must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    sq += d * d;
  }
  return 2.0 * std::asinh(std::sqrt(sq) / (2.0 * std::sqrt(p.back() * q.back())));
}

inline double hyperbolic_distance(const HalfSpacePoint& p, const HalfSpacePoint& q) {
  return hyperbolic_distance(p.coords(), q.coords());
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

// Tensor-product grid on [-X, X]^{m-1} x [floor, H]. Axes 0..m-2 are lateral,
// axis m-1 is the height. Node coordinates are always recomputed as
// origin + index * spacing, so subgrids share bit-identical coordinates with
// their parent. Vertical index offsets record the position inside a parent.
class SlabGrid {
 public:
  SlabGrid() = default;

  static SlabGrid uniform(ModelDims dims, double lateral_extent, double floor_height,
                          double ceiling, std::size_t lateral_nodes, std::size_t vertical_nodes) {
    if (!(floor_height > 0.0)) throw DomainError("SlabGrid: floor delta must be > 0");
    if (!(ceiling > floor_height)) throw DomainError("SlabGrid: ceiling H must exceed floor");
    if (!(lateral_extent > 0.0)) throw DomainError("SlabGrid: lateral extent must be > 0");
    if (lateral_nodes < 2 || vertical_nodes < 2)
      throw DomainError("SlabGrid: need at least 2 nodes per axis");
    SlabGrid g;
    g.dims_ = dims;
    g.lateral_extent_ = lateral_extent;
    g.base_floor_ = floor_height;
    g.ceiling_ = ceiling;
    const auto m = static_cast<std::size_t>(dims.m);
    g.nodes_.assign(m, lateral_nodes);
    g.nodes_[m - 1] = vertical_nodes;
    g.spacing_.assign(m, 2.0 * lateral_extent / double(lateral_nodes - 1));
    g.spacing_[m - 1] = (ceiling - floor_height) / double(vertical_nodes - 1);
    g.finish();
    return g;
  }

  // Rebuilds a grid from serialized header fields.
  static SlabGrid from_parts(ModelDims dims, double lateral_extent, double base_floor,
                             double ceiling, std::vector<double> spacing,
                             std::vector<std::size_t> nodes, std::size_t vertical_offset) {
    const auto m = static_cast<std::size_t>(dims.m);
    if (spacing.size() != m || nodes.size() != m)
      throw DomainError("SlabGrid: header arity does not match m");
    for (std::size_t a = 0; a < m; ++a)
      if (!(spacing[a] > 0.0) || nodes[a] < 2) throw DomainError("SlabGrid: bad axis in header");
    if (!(base_floor > 0.0) || !(ceiling > base_floor)) throw DomainError("SlabGrid: bad heights");
    SlabGrid g;
    g.dims_ = dims;
    g.lateral_extent_ = lateral_extent;
    g.base_floor_ = base_floor;
    g.ceiling_ = ceiling;
    g.spacing_ = std::move(spacing);
    g.nodes_ = std::move(nodes);
    g.vertical_offset_ = vertical_offset;
    g.finish();
    return g;
  }

  // The part of this grid at vertical indices >= first_row.
  SlabGrid upper_part(std::size_t first_row) const {
    if (first_row + 2 > nodes_.back())
      throw DomainError("SlabGrid::upper_part: fewer than 2 rows would remain");
    SlabGrid g = *this;
    g.nodes_.back() -= first_row;
    g.vertical_offset_ += first_row;
    g.finish();
    return g;
  }

  const ModelDims& dims() const { return dims_; }
  int m() const { return dims_.m; }
  double lateral_extent() const { return lateral_extent_; }
  double base_floor() const { return base_floor_; }
  double ceiling() const { return ceiling_; }
  std::size_t vertical_offset() const { return vertical_offset_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  std::size_t node_count() const { return total_; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  double min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

  double coord(std::size_t axis, std::size_t i) const {
    if (axis + 1 == nodes_.size())
      return base_floor_ + double(i + vertical_offset_) * spacing_[axis];
    return -lateral_extent_ + double(i) * spacing_[axis];
  }
  double floor() const { return coord(nodes_.size() - 1, 0); }
  double top() const { return coord(nodes_.size() - 1, nodes_.back() - 1); }

  // Per-axis index of a linear node id (vertical axis fastest).
  std::vector<std::size_t> multi_index(std::size_t node) const {
    std::vector<std::size_t> idx(nodes_.size());
    for (std::size_t a = 0; a < nodes_.size(); ++a) idx[a] = (node / strides_[a]) % nodes_[a];
    return idx;
  }
  std::size_t linear_index(std::span<const std::size_t> idx) const {
    std::size_t k = 0;
    for (std::size_t a = 0; a < nodes_.size(); ++a) k += idx[a] * strides_[a];
    return k;
  }
  std::size_t row_of(std::size_t node) const { return node % nodes_.back(); }
  double height_of(std::size_t node) const { return coord(nodes_.size() - 1, row_of(node)); }

  void position(std::size_t node, std::span<double> x) const {
    for (std::size_t a = 0; a < nodes_.size(); ++a)
      x[a] = coord(a, (node / strides_[a]) % nodes_[a]);
  }
  std::vector<double> position(std::size_t node) const {
    std::vector<double> x(nodes_.size());
    position(node, x);
    return x;
  }

  // True when the node is at least `margin` nodes away from every face.
  bool is_interior(std::size_t node, std::size_t margin = 1) const {
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      const std::size_t i = (node / strides_[a]) % nodes_[a];
      if (i < margin || i + margin >= nodes_[a]) return false;
    }
    return true;
  }
  bool is_boundary(std::size_t node) const { return !is_interior(node, 1); }

  std::vector<std::size_t> interior_nodes(std::size_t margin = 1) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < total_; ++k)
      if (is_interior(k, margin)) out.push_back(k);
    return out;
  }

  // Same geometry up to the vertical window.
  bool same_lattice(const SlabGrid& o) const {
    return dims_ == o.dims_ && lateral_extent_ == o.lateral_extent_ &&
           base_floor_ == o.base_floor_ && spacing_ == o.spacing_;
  }
  friend bool operator==(const SlabGrid& a, const SlabGrid& b) {
    return a.same_lattice(b) && a.nodes_ == b.nodes_ && a.vertical_offset_ == b.vertical_offset_ &&
           a.ceiling_ == b.ceiling_;
  }

 private:
  void finish() {
    const std::size_t m = nodes_.size();
    strides_.assign(m, 1);
    for (std::size_t a = m - 1; a-- > 0;) strides_[a] = strides_[a + 1] * nodes_[a + 1];
    total_ = strides_[0] * nodes_[0];
  }

  ModelDims dims_;
  double lateral_extent_ = 1.0;
  double base_floor_ = 0.1;
  double ceiling_ = 1.0;
  std::vector<double> spacing_;
  std::vector<std::size_t> nodes_;
  std::vector<std::size_t> strides_;
  std::size_t vertical_offset_ = 0;
  std::size_t total_ = 0;
};

// One real per grid node.
struct ScalarField {
  SlabGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(SlabGrid g, double fill = 0.0)
      : grid(std::move(g)), values(grid.node_count(), fill) {}

  double& operator[](std::size_t node) { return values[node]; }
  double operator[](std::size_t node) const { return values[node]; }
};

// Grid-sampled map u: H^m -> H^n with n components per node (node-major).
class MapField {
 public:
  MapField() = default;
  MapField(SlabGrid grid, std::size_t components)
      : grid_(std::move(grid)), n_(components), values_(grid_.node_count() * n_, 0.0) {
    if (n_ != static_cast<std::size_t>(grid_.dims().n))
      throw DomainError("MapField: component count must equal target dimension n");
  }
  explicit MapField(SlabGrid grid) : MapField(grid, static_cast<std::size_t>(grid.dims().n)) {}

  const SlabGrid& grid() const { return grid_; }
  std::size_t components() const { return n_; }
  std::span<double> at(std::size_t node) { return {values_.data() + node * n_, n_}; }
  std::span<const double> at(std::size_t node) const { return {values_.data() + node * n_, n_}; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  // Throws unless every value is finite and the last component is positive.
  void validate() const {
    for (std::size_t k = 0; k < grid_.node_count(); ++k) {
      const auto v = at(k);
      for (double x : v)
        if (!std::isfinite(x)) throw NumericalError("MapField: non-finite value at node " + std::to_string(k));
      if (!(v[n_ - 1] > 0.0))
        throw NumericalError("MapField: last component not positive at node " + std::to_string(k));
    }
  }

  // Copy of the values restricted to a subgrid of the same lattice.
  MapField restricted_to(const SlabGrid& sub) const {
    if (!sub.same_lattice(grid_) || sub.nodes().back() + sub.vertical_offset() >
                                        grid_.nodes().back() + grid_.vertical_offset() ||
        sub.vertical_offset() < grid_.vertical_offset())
      throw DomainError("MapField::restricted_to: not a vertical window of this grid");
    for (std::size_t a = 0; a + 1 < sub.nodes().size(); ++a)
      if (sub.nodes()[a] != grid_.nodes()[a]) throw DomainError("MapField::restricted_to: lateral mismatch");
    MapField out(sub, n_);
    const std::size_t shift = sub.vertical_offset() - grid_.vertical_offset();
    for (std::size_t k = 0; k < sub.node_count(); ++k) {
      auto idx = sub.multi_index(k);
      idx.back() += shift;
      const auto src = at(grid_.linear_index(idx));
      std::copy(src.begin(), src.end(), out.at(k).begin());
    }
    return out;
  }

 private:
  SlabGrid grid_;
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// Tension vector (tau^1, ..., tau^n) on interior nodes; zero elsewhere.
struct TensionField {
  SlabGrid grid;
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<std::size_t> interior;

  std::span<const double> at(std::size_t node) const { return {values.data() + node * n, n}; }
};

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

namespace fd {

// One entry of a tensor-product difference stencil.
struct Tap {
  std::ptrdiff_t offset;  // linear node offset
  double weight;
};

// Second-order central stencil for the mixed partial whose axis multiplicities
// are `orders` (each 0..3): the tensor product of 1D stencils for d/dx, d2/dx2
// and d3/dx3. Requires a margin of 2 when any order is 3, else 1.
inline std::vector<Tap> central_stencil(const SlabGrid& g, std::span<const int> orders) {
  std::vector<Tap> taps{{0, 1.0}};
  for (std::size_t a = 0; a < orders.size(); ++a) {
    if (orders[a] == 0) continue;
    const double h = g.spacing()[a];
    std::vector<std::pair<int, double>> s;
    switch (orders[a]) {
      case 1: s = {{-1, -0.5 / h}, {1, 0.5 / h}}; break;
      case 2: s = {{-1, 1.0 / (h * h)}, {0, -2.0 / (h * h)}, {1, 1.0 / (h * h)}}; break;
      case 3: {
        const double h3 = h * h * h;
        s = {{-2, -0.5 / h3}, {-1, 1.0 / h3}, {1, -1.0 / h3}, {2, 0.5 / h3}};
        break;
      }
      default: throw DomainError("central_stencil: derivative order must be 0..3");
    }
    std::vector<Tap> next;
    const auto stride = static_cast<std::ptrdiff_t>(g.stride(a));
    for (const auto& t : taps)
      for (const auto& [off, w] : s) next.push_back({t.offset + off * stride, t.weight * w});
    taps = std::move(next);
  }
  return taps;
}

inline double apply(std::span<const Tap> taps, std::span<const double> values, std::size_t node,
                    std::size_t components = 1, std::size_t component = 0) {
  double acc = 0.0;
  for (const auto& t : taps)
    acc += t.weight * values[(static_cast<std::ptrdiff_t>(node) + t.offset) * std::ptrdiff_t(components) +
                             std::ptrdiff_t(component)];
  return acc;
}

}  // namespace fd

// Delta_{H^m} w = (x^m)^2 [Delta_0 w - ((m-2)/x^m) dw/dx^m] at interior nodes;
// boundary entries are left at 0.
inline ScalarField laplace_beltrami_scalar(const ScalarField& w) {
  const SlabGrid& g = w.grid;
  for (auto n : g.nodes())
    if (n < 3) throw DomainError("laplace_beltrami_scalar: need at least 3 nodes per axis");
  const std::size_t m = g.nodes().size();
  ScalarField out(g, 0.0);
  for (std::size_t k : g.interior_nodes()) {
    const double x = g.height_of(k);
    double lap = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const double h = g.spacing()[a];
      const std::size_t s = g.stride(a);
      lap += (w[k + s] - 2.0 * w[k] + w[k - s]) / (h * h);
    }
    const std::size_t sv = g.stride(m - 1);
    const double dz = (w[k + sv] - w[k - sv]) / (2.0 * g.spacing()[m - 1]);
    out[k] = x * x * (lap - (double(m) - 2.0) / x * dz);
  }
  return out;
}

// Below this height of the target the map is treated as having left H^n.
inline constexpr double kPositivityFloor = 1e-12;

namespace detail {

// Tension at one interior node. `grad` is scratch of size n*m.
inline void tension_at(const SlabGrid& g, std::span<const double> u, std::size_t n, std::size_t k,
                       std::span<double> grad, std::span<double> lap, std::span<double> tau) {
  const std::size_t m = g.nodes().size();
  const double* base = u.data();
  for (std::size_t s = 0; s < n; ++s) lap[s] = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double h = g.spacing()[a];
    const double inv2h = 0.5 / h;
    const double invh2 = 1.0 / (h * h);
    const std::size_t off = g.stride(a) * n;
    const double* c = base + k * n;
    for (std::size_t s = 0; s < n; ++s) {
      const double up = c[s + off];
      const double dn = c[s - off];
      grad[s * m + a] = (up - dn) * inv2h;
      lap[s] += (up - 2.0 * c[s] + dn) * invh2;
    }
  }
  const double x = g.height_of(k);
  const double yn = base[k * n + n - 1];
  if (!(yn >= kPositivityFloor))
    throw NumericalError("tension_field: target height " + std::to_string(yn) +
                         " below positivity floor at node " + std::to_string(k));
  const double metric_drift = (double(m) - 2.0) / x;
  const double* gn = &grad[(n - 1) * m];
  double energy_alpha = 0.0;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    const double* ga = &grad[s * m];
    double dot = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      dot += ga[a] * gn[a];
      energy_alpha += ga[a] * ga[a];
    }
    tau[s] = x * x * (lap[s] - metric_drift * ga[m - 1] - 2.0 / yn * dot);
  }
  double energy_n = 0.0;
  for (std::size_t a = 0; a < m; ++a) energy_n += gn[a] * gn[a];
  tau[n - 1] = x * x * (lap[n - 1] - metric_drift * gn[m - 1] + (energy_alpha - energy_n) / yn);
}

}  // namespace detail

// Tension field of a grid map with central differences at interior nodes.
// The n-th component uses d y^n / d x^m in the drift term.
inline TensionField tension_field(const MapField& u) {
  const SlabGrid& g = u.grid();
  for (auto nn : g.nodes())
    if (nn < 3) throw DomainError("tension_field: need at least 3 nodes per axis");
  const std::size_t n = u.components();
  const std::size_t m = g.nodes().size();
  TensionField t{g, n, std::vector<double>(g.node_count() * n, 0.0), g.interior_nodes()};
  std::vector<double> grad(n * m), lap(n);
  for (std::size_t k : t.interior)
    detail::tension_at(g, u.data(), n, k, grad, lap, std::span<double>(t.values.data() + k * n, n));
  return t;
}

// Squared target-metric norm sum_s (tau^s)^2 / (y^n)^2 on interior nodes.
inline ScalarField tension_norm(const TensionField& tau, const MapField& u) {
  if (!(tau.grid == u.grid()) || tau.n != u.components())
    throw DomainError("tension_norm: tension and map live on different grids");
  ScalarField out(tau.grid, 0.0);
  const std::size_t n = tau.n;
  for (std::size_t k : tau.interior) {
    const double yn = u.at(k)[n - 1];
    double s = 0.0;
    for (double t : tau.at(k)) s += t * t;
    out[k] = s / (yn * yn);
  }
  return out;
}

// Pointwise hyperbolic distance between two maps on the same grid.
inline ScalarField distance_field(const MapField& u, const MapField& v) {
  if (!(u.grid() == v.grid())) throw DomainError("distance_field: grid mismatch");
  ScalarField d(u.grid(), 0.0);
  for (std::size_t k = 0; k < d.values.size(); ++k) d[k] = hyperbolic_distance(u.at(k), v.at(k));
  return d;
}

}  // namespace hmdp
