#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace vclink {

// Symmetric matrix stored as its packed lower triangle, so symmetry holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::Index n) : n_(n), lower_(static_cast<std::size_t>(n * (n + 1) / 2), 0.0) {}

  // Reads the lower triangle of a square matrix; throws StructuralError when not square.
  static SymMatrix from_dense(const Eigen::MatrixXd& m);
  static SymMatrix identity(Eigen::Index n);

  Eigen::Index dim() const noexcept { return n_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return lower_[offset(i, j)]; }
  void set(Eigen::Index i, Eigen::Index j, double v) { lower_[offset(i, j)] = v; }
  void add(Eigen::Index i, Eigen::Index j, double v) { lower_[offset(i, j)] += v; }

  Eigen::MatrixXd dense() const;

 private:
  std::size_t offset(Eigen::Index i, Eigen::Index j) const noexcept {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i * (i + 1) / 2 + j);
  }

  Eigen::Index n_ = 0;
  std::vector<double> lower_;
};

// Lower Cholesky factor, or nullopt when the matrix is not numerically positive definite.
std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& m);

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);

// Lower-triangular factor -> packed vector (row-major lower triangle) and back.
Eigen::VectorXd pack_lower(const Eigen::MatrixXd& lower);
Eigen::MatrixXd unpack_lower(const Eigen::Ref<const Eigen::VectorXd>& packed, Eigen::Index n);

}  // namespace vclink
