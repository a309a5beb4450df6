#pragma once

#include "sheafcoord/sheaf.hpp"

namespace sheafcoord {

/// (delta x)_e = F_{tail->e} x_tail - F_{head->e} x_head.
inline Cochain1 apply_coboundary(const CellularSheaf& sheaf, const Cochain0& x) {
  sheaf.require_valid();
  sheaf.require_conforms(x);
  Cochain1 y = sheaf.zero_cochain1();
  for (const auto& e : sheaf.graph().edges()) {
    y.block(e.id) = sheaf.map(e.id, Side::Tail) * x.block(e.tail) - sheaf.map(e.id, Side::Head) * x.block(e.head);
  }
  return y;
}

/// delta^T y: each edge pushes +F_tail^T y_e to its tail and -F_head^T y_e to its head.
inline Cochain0 apply_coboundary_transpose(const CellularSheaf& sheaf, const Cochain1& y) {
  sheaf.require_valid();
  sheaf.require_conforms(y);
  Cochain0 x = sheaf.zero_cochain0();
  for (const auto& e : sheaf.graph().edges()) {
    x.block(e.tail) += sheaf.map(e.id, Side::Tail).transpose() * y.block(e.id);
    x.block(e.head) -= sheaf.map(e.id, Side::Head).transpose() * y.block(e.id);
  }
  return x;
}

inline Matrix coboundary_dense(const CellularSheaf& sheaf) {
  sheaf.require_valid();
  const auto& vl = sheaf.vertex_layout();
  const auto& el = sheaf.edge_layout();
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(el.total()), static_cast<Eigen::Index>(vl.total()));
  for (const auto& e : sheaf.graph().edges()) {
    const auto r = static_cast<Eigen::Index>(el.offset(e.id));
    const auto m = static_cast<Eigen::Index>(el.dim(e.id));
    d.block(r, static_cast<Eigen::Index>(vl.offset(e.tail)), m, static_cast<Eigen::Index>(vl.dim(e.tail))) =
        sheaf.map(e.id, Side::Tail);
    d.block(r, static_cast<Eigen::Index>(vl.offset(e.head)), m, static_cast<Eigen::Index>(vl.dim(e.head))) =
        -sheaf.map(e.id, Side::Head);
  }
  return d;
}

/// L x = delta^T (delta x), evaluated edge by edge without forming L.
inline Cochain0 apply_laplacian(const CellularSheaf& sheaf, const Cochain0& x) {
  return apply_coboundary_transpose(sheaf, apply_coboundary(sheaf, x));
}

/// Sheaf Laplacian assembled from its blocks:
///   L_ii = sum_{e ni i} F_ie^T F_ie,   L_ij = -F_ie^T F_je  for e = {i, j}.
inline Matrix laplacian_dense(const CellularSheaf& sheaf) {
  sheaf.require_valid();
  const auto& vl = sheaf.vertex_layout();
  const auto n = static_cast<Eigen::Index>(vl.total());
  Matrix lap = Matrix::Zero(n, n);
  auto blk = [&](VertexId a, VertexId b) {
    return lap.block(static_cast<Eigen::Index>(vl.offset(a)), static_cast<Eigen::Index>(vl.offset(b)),
                     static_cast<Eigen::Index>(vl.dim(a)), static_cast<Eigen::Index>(vl.dim(b)));
  };
  for (const auto& e : sheaf.graph().edges()) {
    const Matrix& ft = sheaf.map(e.id, Side::Tail);
    const Matrix& fh = sheaf.map(e.id, Side::Head);
    blk(e.tail, e.tail) += ft.transpose() * ft;
    blk(e.head, e.head) += fh.transpose() * fh;
    blk(e.tail, e.head) -= ft.transpose() * fh;
    blk(e.head, e.tail) -= fh.transpose() * ft;
  }
  return lap;
}

/// ||delta x||^2, which equals x^T L x.
inline double dirichlet_energy(const CellularSheaf& sheaf, const Cochain0& x) {
  return apply_coboundary(sheaf, x).flat().squaredNorm();
}

}  // namespace sheafcoord
