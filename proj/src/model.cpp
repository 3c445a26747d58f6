#include "vclink/model.hpp"

#include "vclink/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace vclink {

Dataset::Dataset(int k, std::vector<FamilyObservation> families) : k_(k), families_(std::move(families)) {
  if (k < 1) throw StructuralError("Dataset: trait count must be >= 1");
  for (std::size_t i = 0; i < families_.size(); ++i) {
    const auto& f = families_[i];
    if (!(f.pi >= 0.0 && f.pi <= 1.0))
      throw StructuralError("Dataset: family " + std::to_string(i) + " has pi outside [0,1]");
    if (!(f.phi >= 0.0 && f.phi <= 0.5))
      throw StructuralError("Dataset: family " + std::to_string(i) + " has phi outside [0,0.5]");
    if (f.y.size() != 2 * k)
      throw StructuralError("Dataset: family " + std::to_string(i) + " has " +
                            std::to_string(f.y.size()) + " trait values, expected " +
                            std::to_string(2 * k));
    if (!f.y.allFinite())
      throw StructuralError("Dataset: family " + std::to_string(i) + " has non-finite traits");
  }
}

namespace {

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) throw StructuralError(std::string(name) + " is not square");
  if (auto L = try_cholesky(M)) return *L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(M));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues()(0) < -1e-10 * scale)
    throw NumericDomainError(std::string(name) + " is not positive semidefinite");
  // Semidefinite: pivot-free factor from the eigen decomposition, re-triangularised by QR.
  Eigen::MatrixXd root = es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(root.transpose());
  Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::MatrixXd L = R.transpose();
  for (Eigen::Index j = 0; j < L.cols(); ++j)
    if (L(j, j) < 0) L.col(j) = -L.col(j);
  return L;
}

}  // namespace

ComponentParams ComponentParams::from_covariances(Eigen::VectorXd a, const Eigen::MatrixXd& G,
                                                  const Eigen::MatrixXd& E, Eigen::VectorXd mu) {
  const auto k = a.size();
  if (G.rows() != k || E.rows() != k || mu.size() != k)
    throw StructuralError("ComponentParams: dimension mismatch");
  ComponentParams p{std::move(a), psd_factor(G, "G"), psd_factor(E, "E"), std::move(mu)};
  p.normalize_sign();
  return p;
}

void ComponentParams::normalize_sign() {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != 0.0) {
      if (a(i) < 0.0) a = -a;
      break;
    }
  }
  a.array() += 0.0;  // -0 -> +0
}

int trait_count_for_theta_dim(int m) noexcept {
  for (int k = 1; theta_dim(k) <= m; ++k)
    if (theta_dim(k) == m) return k;
  return -1;
}

std::pair<int, int> theta_entry(int k, int index) {
  if (index < 0 || index >= theta_dim(k)) throw StructuralError("theta index out of range");
  if (index < k) return {index, index};
  int t = k;
  for (int p = 0; p < k; ++p)
    for (int q = p + 1; q < k; ++q, ++t)
      if (t == index) return {p, q};
  throw StructuralError("theta index out of range");
}

int theta_index(int k, int p, int q) {
  if (p > q) std::swap(p, q);
  if (p < 0 || q >= k) throw StructuralError("theta entry out of range");
  if (p == q) return p;
  // Offset of row p among the off-diagonal block, then column within the row.
  const int before = p * k - p * (p + 1) / 2;
  return k + before + (q - p - 1);
}

Eigen::VectorXd theta_map(const Eigen::VectorXd& a) {
  const int k = static_cast<int>(a.size());
  Eigen::VectorXd theta(theta_dim(k));
  for (int i = 0; i < k; ++i) theta(i) = a(i) * a(i);
  int t = k;
  for (int p = 0; p < k; ++p)
    for (int q = p + 1; q < k; ++q) theta(t++) = a(p) * a(q);
  return theta;
}

Eigen::MatrixXd theta_to_matrix(int k, const Eigen::VectorXd& theta) {
  if (theta.size() != theta_dim(k)) throw StructuralError("theta_to_matrix: dimension mismatch");
  Eigen::MatrixXd M(k, k);
  for (int i = 0; i < k; ++i) M(i, i) = theta(i);
  int t = k;
  for (int p = 0; p < k; ++p)
    for (int q = p + 1; q < k; ++q, ++t) M(p, q) = M(q, p) = theta(t);
  return M;
}

SymMatrix assemble_sigma(const Eigen::VectorXd& a, const SymMatrix& G, const SymMatrix& E,
                         double pi, double phi) {
  const Eigen::Index k = a.size();
  if (G.dim() != k || E.dim() != k) throw StructuralError("assemble_sigma: dimension mismatch");
  SymMatrix sigma(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double aij = a(i) * a(j);
      const double diag = aij + G(i, j) + E(i, j);
      const double off = pi * aij + 2.0 * phi * G(i, j);
      sigma.set(i, j, diag);
      sigma.set(k + i, k + j, diag);
      sigma.set(k + i, j, off);
      sigma.set(k + j, i, off);
    }
  }
  return sigma;
}

double loglik(const Dataset& data, const ComponentParams& params) {
  const int k = data.k();
  if (params.k() != k) throw StructuralError("loglik: parameter dimension mismatch");
  const auto G = SymMatrix::from_dense(params.G());
  const auto E = SymMatrix::from_dense(params.E());
  Eigen::VectorXd mu2(2 * k);
  mu2 << params.mu, params.mu;
  const double log2pi = std::log(2.0 * std::numbers::pi);

  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& fam = data[i];
    const Eigen::MatrixXd sigma = assemble_sigma(params.a, G, E, fam.pi, fam.phi).dense();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw NumericDomainError("loglik: covariance is not positive definite", i);
    const Eigen::MatrixXd L = llt.matrixL();
    double logdet = 0.0;
    for (int d = 0; d < 2 * k; ++d) {
      if (!(L(d, d) > 0.0)) throw NumericDomainError("loglik: covariance is singular", i);
      logdet += 2.0 * std::log(L(d, d));
    }
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(fam.y - mu2);
    total += -0.5 * (2 * k * log2pi + logdet + z.squaredNorm());
  }
  return total;
}

}  // namespace vclink
