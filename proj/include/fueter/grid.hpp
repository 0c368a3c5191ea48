#pragma once

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fueter/domain.hpp"

namespace fueter {

using Index4 = std::array<int, 4>;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SpMatC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using VecC = Eigen::VectorXcd;

/// Cell-centred lattice with n nodes per axis and equal spacing on every axis.
struct Grid4 {
  std::array<double, 4> lo{-1, -1, -1, -1};
  std::array<double, 4> hi{1, 1, 1, 1};
  int n = 8;

  Grid4() = default;
  Grid4(double lower, double upper, int nodes) : n(nodes) {
    lo.fill(lower);
    hi.fill(upper);
    validate();
  }
  Grid4(std::array<double, 4> lower, std::array<double, 4> upper, int nodes)
      : lo(lower), hi(upper), n(nodes) {
    validate();
  }

  void validate() const {
    if (n < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
    for (std::size_t j = 0; j < 4; ++j) {
      if (!(hi[j] > lo[j])) throw std::invalid_argument("grid bounds must satisfy lo < hi");
      if (std::abs((hi[j] - lo[j]) - (hi[0] - lo[0])) > 1e-12 * (hi[0] - lo[0]))
        throw std::invalid_argument("grid spacing must be identical on every axis");
    }
  }

  [[nodiscard]] double h() const { return (hi[0] - lo[0]) / n; }
  [[nodiscard]] double cell_volume() const { return std::pow(h(), 4); }
  [[nodiscard]] std::size_t node_count() const { return static_cast<std::size_t>(n) * n * n * n; }
  [[nodiscard]] Point4 coordinate(const Index4& i) const {
    Point4 x;
    for (std::size_t j = 0; j < 4; ++j) x[j] = lo[j] + (i[j] + 0.5) * h();
    return x;
  }
  [[nodiscard]] bool inside_box(const Index4& i) const {
    for (int v : i)
      if (v < 0 || v >= n) return false;
    return true;
  }
  [[nodiscard]] std::size_t linear(const Index4& i) const {
    return ((static_cast<std::size_t>(i[0]) * n + i[1]) * n + i[2]) * n + i[3];
  }
  friend bool operator==(const Grid4& a, const Grid4& b) {
    return a.lo == b.lo && a.hi == b.hi && a.n == b.n;
  }
};

enum class Stencil { Central, Forward, Backward, ForwardShort, BackwardShort };

/**
 * Nodes with r < 0 and the per-axis difference matrices acting on them:
 * central differences where both neighbours are masked, 3-point one-sided
 * stencils at mask edges and 2-point ones on segments only two nodes long.
 */
class GridMask {
 public:
  GridMask(const Grid4& grid, const DomainSpec& domain) : grid_(grid), domain_(domain) {
    lookup_.assign(grid.node_count(), -1);
    Index4 i{};
    for (i[0] = 0; i[0] < grid.n; ++i[0])
      for (i[1] = 0; i[1] < grid.n; ++i[1])
        for (i[2] = 0; i[2] < grid.n; ++i[2])
          for (i[3] = 0; i[3] < grid.n; ++i[3])
            if (domain.contains(grid.coordinate(i))) {
              lookup_[grid.linear(i)] = static_cast<int>(nodes_.size());
              nodes_.push_back(i);
            }
    if (nodes_.empty()) throw std::invalid_argument("mask is empty");
    build_stencils();
  }

  [[nodiscard]] const Grid4& grid() const { return grid_; }
  [[nodiscard]] const DomainSpec& domain() const { return domain_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Index4& node(std::size_t p) const { return nodes_[p]; }
  [[nodiscard]] Point4 coordinate(std::size_t p) const { return grid_.coordinate(nodes_[p]); }
  /// masked index of a lattice node, or -1
  [[nodiscard]] int find(const Index4& i) const {
    return grid_.inside_box(i) ? lookup_[grid_.linear(i)] : -1;
  }
  [[nodiscard]] const SpMat& difference(int axis) const {
    Polynomial::check_axis(axis);
    return diff_[static_cast<std::size_t>(axis - 1)];
  }
  [[nodiscard]] Stencil stencil(std::size_t p, int axis) const {
    return kinds_[static_cast<std::size_t>(axis - 1)][p];
  }
  /// every axis uses the central stencil at p
  [[nodiscard]] bool central(std::size_t p) const { return central_[p] != 0; }
  /// p and all its axis neighbours use central stencils on every axis
  [[nodiscard]] bool deep_interior(std::size_t p) const { return deep_[p] != 0; }
  /// at least one axis neighbour lies outside the mask
  [[nodiscard]] bool band(std::size_t p) const { return band_[p] != 0; }
  [[nodiscard]] std::size_t minimum_axis_count() const { return min_axis_count_; }

 private:
  void build_stencils() {
    const double h = grid_.h();
    const std::size_t N = nodes_.size();
    central_.assign(N, 1);
    band_.assign(N, 0);
    for (int axis = 0; axis < 4; ++axis) {
      auto& kinds = kinds_[static_cast<std::size_t>(axis)];
      kinds.assign(N, Stencil::Central);
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(3 * N);
      auto at = [&](const Index4& base, int off) {
        Index4 q = base;
        q[static_cast<std::size_t>(axis)] += off;
        return find(q);
      };
      for (std::size_t p = 0; p < N; ++p) {
        const Index4& i = nodes_[p];
        const int m1 = at(i, -1), p1 = at(i, 1);
        const int r = static_cast<int>(p);
        if (m1 < 0 || p1 < 0) band_[p] = 1;
        if (m1 >= 0 && p1 >= 0) {
          trip.emplace_back(r, p1, 0.5 / h);
          trip.emplace_back(r, m1, -0.5 / h);
          continue;
        }
        central_[p] = 0;
        const int p2 = at(i, 2), m2 = at(i, -2);
        if (p1 >= 0 && p2 >= 0) {
          kinds[p] = Stencil::Forward;
          trip.emplace_back(r, r, -1.5 / h);
          trip.emplace_back(r, p1, 2.0 / h);
          trip.emplace_back(r, p2, -0.5 / h);
        } else if (m1 >= 0 && m2 >= 0) {
          kinds[p] = Stencil::Backward;
          trip.emplace_back(r, r, 1.5 / h);
          trip.emplace_back(r, m1, -2.0 / h);
          trip.emplace_back(r, m2, 0.5 / h);
        } else if (p1 >= 0) {
          kinds[p] = Stencil::ForwardShort;
          trip.emplace_back(r, r, -1.0 / h);
          trip.emplace_back(r, p1, 1.0 / h);
        } else if (m1 >= 0) {
          kinds[p] = Stencil::BackwardShort;
          trip.emplace_back(r, r, 1.0 / h);
          trip.emplace_back(r, m1, -1.0 / h);
        } else {
          throw std::runtime_error("isolated masked node (" + std::to_string(i[0]) + "," +
                                   std::to_string(i[1]) + "," + std::to_string(i[2]) + "," +
                                   std::to_string(i[3]) + ") has no stencil along axis " +
                                   std::to_string(axis + 1));
        }
      }
      SpMat d(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
      d.setFromTriplets(trip.begin(), trip.end());
      d.makeCompressed();
      diff_[static_cast<std::size_t>(axis)] = std::move(d);
    }
    deep_.assign(N, 0);
    for (std::size_t p = 0; p < N; ++p) {
      if (!central_[p]) continue;
      bool ok = true;
      for (std::size_t axis = 0; axis < 4 && ok; ++axis)
        for (int off : {-1, 1}) {
          Index4 q = nodes_[p];
          q[axis] += off;
          const int s = find(q);
          if (s < 0 || !central_[static_cast<std::size_t>(s)]) ok = false;
        }
      deep_[p] = ok ? 1 : 0;
    }
    min_axis_count_ = static_cast<std::size_t>(grid_.n);
    for (std::size_t axis = 0; axis < 4; ++axis) {
      int lo = grid_.n, hi = -1;
      for (const auto& i : nodes_) {
        lo = std::min(lo, i[axis]);
        hi = std::max(hi, i[axis]);
      }
      min_axis_count_ = std::min(min_axis_count_, static_cast<std::size_t>(hi - lo + 1));
    }
  }

  Grid4 grid_;
  DomainSpec domain_;
  std::vector<Index4> nodes_;
  std::vector<int> lookup_;
  std::array<SpMat, 4> diff_;
  std::array<std::vector<Stencil>, 4> kinds_;
  std::vector<char> central_, deep_, band_;
  std::size_t min_axis_count_ = 0;
};

using MaskPtr = std::shared_ptr<const GridMask>;

[[nodiscard]] inline MaskPtr make_mask(const Grid4& grid, const DomainSpec& domain) {
  return std::make_shared<const GridMask>(grid, domain);
}

/// Complex scalar field on the masked nodes of a grid.
class GridField {
 public:
  GridField() = default;
  explicit GridField(MaskPtr mask) : mask_(std::move(mask)), v_(VecC::Zero(size_of(mask_))) {}
  GridField(MaskPtr mask, VecC values) : mask_(std::move(mask)), v_(std::move(values)) {
    if (static_cast<std::size_t>(v_.size()) != size_of(mask_))
      throw std::invalid_argument("grid field size does not match its mask");
  }

  template <class F>
  static GridField sample(MaskPtr mask, F&& f) {
    GridField out(mask);
    for (std::size_t p = 0; p < mask->size(); ++p)
      out.v_[static_cast<Eigen::Index>(p)] = f(mask->coordinate(p));
    return out;
  }

  [[nodiscard]] const MaskPtr& mask() const { return mask_; }
  [[nodiscard]] const VecC& values() const { return v_; }
  [[nodiscard]] VecC& values() { return v_; }
  cplx& operator[](std::size_t p) { return v_[static_cast<Eigen::Index>(p)]; }
  const cplx& operator[](std::size_t p) const { return v_[static_cast<Eigen::Index>(p)]; }

  GridField& operator+=(const GridField& o) {
    check_same(o);
    v_ += o.v_;
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    check_same(o);
    v_ -= o.v_;
    return *this;
  }
  GridField& operator*=(cplx s) {
    v_ *= s;
    return *this;
  }
  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator-(GridField a) { return a *= -1.0; }
  friend GridField operator*(GridField a, cplx s) { return a *= s; }
  friend GridField operator*(cplx s, GridField a) { return a *= s; }
  friend GridField operator*(GridField a, double s) { return a *= cplx(s); }
  friend GridField operator*(double s, GridField a) { return a *= cplx(s); }
  /// pointwise product
  friend GridField operator*(const GridField& a, const GridField& b) {
    a.check_same(b);
    return GridField(a.mask_, a.v_.cwiseProduct(b.v_));
  }

  void check_same(const GridField& o) const {
    if (mask_ != o.mask_ && (!mask_ || !o.mask_ || !(mask_->grid() == o.mask_->grid()) ||
                             mask_->size() != o.mask_->size()))
      throw std::invalid_argument("grid fields live on different grids");
  }

 private:
  static std::size_t size_of(const MaskPtr& m) { return m ? m->size() : 0; }
  MaskPtr mask_;
  VecC v_;
};

[[nodiscard]] inline double magnitude(const GridField& f) {
  return f.values().size() ? f.values().cwiseAbs().maxCoeff() : 0.0;
}

/// ∂/∂x_axis with the mask's stencils.
[[nodiscard]] inline GridField grid_diff(const GridField& f, int axis) {
  if (!f.mask()) throw std::invalid_argument("grid field has no mask");
  return GridField(f.mask(), f.mask()->difference(axis) * f.values());
}

/// e^{-φ}·h⁴ at every masked node.
[[nodiscard]] inline Eigen::VectorXd node_weights(const GridMask& mask, const Weight& w) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mask.size()));
  const double vol = mask.grid().cell_volume();
  for (std::size_t p = 0; p < mask.size(); ++p)
    out[static_cast<Eigen::Index>(p)] = std::exp(-w.value(mask.coordinate(p))) * vol;
  return out;
}

/// Midpoint rule for ∫_Ω a·conj(b)·e^{-φ}.
[[nodiscard]] inline cplx weighted_volume_ip(const GridField& a, const GridField& b,
                                             const Weight& w) {
  a.check_same(b);
  const Eigen::VectorXd nw = node_weights(*a.mask(), w);
  cplx s = 0.0;
  for (Eigen::Index p = 0; p < nw.size(); ++p) s += a.values()[p] * std::conj(b.values()[p]) * nw[p];
  return s;
}

}  // namespace fueter
