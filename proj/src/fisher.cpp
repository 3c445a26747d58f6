#include "vclink/fisher.hpp"

#include "vclink/errors.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace vclink {

PiLaw sib_pair_pi_law() { return {{0.0, 0.25}, {0.5, 0.5}, {1.0, 0.25}}; }

void validate_pi_law(const PiLaw& law) {
  if (law.empty()) throw StructuralError("pi law is empty");
  double total = 0.0;
  for (const auto& atom : law) {
    if (!(atom.pi >= 0.0 && atom.pi <= 1.0)) throw StructuralError("pi law: pi outside [0,1]");
    if (!(atom.weight >= 0.0)) throw StructuralError("pi law: negative weight");
    total += atom.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw StructuralError("pi law: weights do not sum to 1");
}

std::string parameter_name(int k, int paramIndex) {
  const int m = theta_dim(k);
  if (paramIndex < 0 || paramIndex >= 3 * m) throw StructuralError("parameter index out of range");
  static constexpr char kBlock[] = {'a', 'g', 'e'};
  const auto [p, q] = theta_entry(k, paramIndex % m);
  std::ostringstream s;
  s << kBlock[paramIndex / m] << (p + 1);
  if (k >= 10) s << '_';
  s << (q + 1);
  return s.str();
}

SymMatrix dsigma(int k, int paramIndex, double pi, double phi) {
  const int m = theta_dim(k);
  if (paramIndex < 0 || paramIndex >= 3 * m) throw StructuralError("dsigma: parameter index out of range");
  const int block = paramIndex / m;
  const auto [p, q] = theta_entry(k, paramIndex % m);
  const double c = block == 0 ? pi : (block == 1 ? 2.0 * phi : 0.0);
  SymMatrix d(2 * k);
  d.set(p, q, 1.0);
  d.set(k + p, k + q, 1.0);
  if (c != 0.0) {
    d.set(k + p, q, c);
    d.set(k + q, p, c);
  }
  return d;
}

InfoMatrix fisher_info(const SymMatrix& G, const SymMatrix& E, const PiLaw& piLaw, double phi) {
  const int k = static_cast<int>(G.dim());
  if (E.dim() != k || k < 1) throw StructuralError("fisher_info: dimension mismatch");
  validate_pi_law(piLaw);
  const int m = theta_dim(k);
  const int P = 3 * m;
  const Eigen::MatrixXd sigma = assemble_sigma(Eigen::VectorXd::Zero(k), G, E, 0.0, phi).dense();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || !try_cholesky(sigma))
    throw NumericDomainError("fisher_info: null covariance is not positive definite");
  const Eigen::MatrixXd sigmaInv = llt.solve(Eigen::MatrixXd::Identity(2 * k, 2 * k));

  InfoMatrix info{k, Eigen::MatrixXd::Zero(P, P)};
  std::vector<Eigen::MatrixXd> products(static_cast<std::size_t>(P));
  for (const auto& atom : piLaw) {
    if (atom.weight == 0.0) continue;
    for (int i = 0; i < P; ++i)
      products[static_cast<std::size_t>(i)] = sigmaInv * dsigma(k, i, atom.pi, phi).dense();
    // Tr(P_i P_j) = sum of P_i .* P_j^T; filled on the lower triangle then mirrored.
    for (int i = 0; i < P; ++i) {
      const auto& Pi = products[static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j) {
        const double tr = Pi.cwiseProduct(products[static_cast<std::size_t>(j)].transpose()).sum();
        info.entries(i, j) += atom.weight * 0.5 * tr;
      }
    }
  }
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < i; ++j) info.entries(j, i) = info.entries(i, j);
  return info;
}

VMatrix extract_v(const InfoMatrix& info) {
  const Eigen::Index P = info.entries.rows();
  const int m = theta_dim(info.k);
  if (info.entries.cols() != P || P != 3 * m) throw StructuralError("extract_v: bad information shape");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info.entries);
  const double top = es.eigenvalues()(P - 1);
  const double bottom = es.eigenvalues()(0);
  if (!(top > 0.0) || bottom < 1e-10 * top) {
    const Eigen::VectorXd dir = es.eigenvectors().col(0);
    Eigen::Index worst = 0;
    dir.cwiseAbs().maxCoeff(&worst);
    std::ostringstream msg;
    msg << "Fisher information is singular: eigenvalue " << bottom << " vs " << top
        << ", near-null direction dominated by " << parameter_name(info.k, static_cast<int>(worst));
    throw NumericDomainError(msg.str());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(info.entries);
  if (llt.info() != Eigen::Success) throw NumericDomainError("Fisher information Cholesky failed");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(P, P));
  VMatrix v{info.k, symmetrized(inv.topLeftCorner(m, m))};
  if (!try_cholesky(v.entries)) throw NumericDomainError("V block is not positive definite");
  return v;
}

InfoMatrix empirical_fisher_info(const Dataset& data, const ComponentParams& nullFit) {
  const auto G = SymMatrix::from_dense(nullFit.G());
  const auto E = SymMatrix::from_dense(nullFit.E());
  // Empirical law of (pi, phi); information is linear in the law, so sum per-phi blocks.
  std::map<std::pair<double, double>, double> counts;
  for (const auto& f : data.families()) counts[{f.phi, f.pi}] += 1.0;
  const double n = static_cast<double>(data.size());
  const int m = theta_dim(data.k());
  InfoMatrix total{data.k(), Eigen::MatrixXd::Zero(3 * m, 3 * m)};
  for (auto it = counts.begin(); it != counts.end();) {
    const double phi = it->first.first;
    PiLaw law;
    double mass = 0.0;
    for (; it != counts.end() && it->first.first == phi; ++it) {
      law.push_back({it->first.second, it->second});
      mass += it->second;
    }
    for (auto& atom : law) atom.weight /= mass;
    total.entries += (mass / n) * fisher_info(G, E, law, phi).entries;
  }
  return total;
}

VMatrix estimate_v_from_data(const Dataset& data, const OptimizerSettings& settings) {
  return extract_v(empirical_fisher_info(data, fit(data, Restriction::null(), settings).params));
}

VMatrix known_parameter_v(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E, const PiLaw& piLaw,
                          double phi) {
  return extract_v(fisher_info(SymMatrix::from_dense(G), SymMatrix::from_dense(E), piLaw, phi));
}

}  // namespace vclink
