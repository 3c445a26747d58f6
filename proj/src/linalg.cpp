#include "vclink/linalg.hpp"

#include "vclink/errors.hpp"

namespace vclink {

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw StructuralError("SymMatrix: matrix is not square");
  SymMatrix s(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) s.set(i, j, m(i, j));
  return s;
}

SymMatrix SymMatrix::identity(Eigen::Index n) {
  SymMatrix s(n);
  for (Eigen::Index i = 0; i < n; ++i) s.set(i, i, 1.0);
  return s;
}

Eigen::MatrixXd SymMatrix::dense() const {
  Eigen::MatrixXd m(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXd L = llt.matrixL();
  // LLT does not reject zero pivots reliably; insist on strictly positive diagonal.
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    if (!(L(i, i) > 0.0)) return std::nullopt;
  return L;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Eigen::VectorXd pack_lower(const Eigen::MatrixXd& lower) {
  const Eigen::Index n = lower.rows();
  Eigen::VectorXd v(n * (n + 1) / 2);
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) v(t++) = lower(i, j);
  return v;
}

Eigen::MatrixXd unpack_lower(const Eigen::Ref<const Eigen::VectorXd>& packed, Eigen::Index n) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) L(i, j) = packed(t++);
  return L;
}

}  // namespace vclink
