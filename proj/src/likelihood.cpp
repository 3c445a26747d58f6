#include "vclink/likelihood.hpp"

#include "vclink/errors.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace vclink {

PairLikelihood::PairLikelihood(const Dataset& data) : k_(data.k()), n_(static_cast<double>(data.size())) {
  if (data.empty()) throw StructuralError("PairLikelihood: empty dataset");
  const int k = k_;
  center_ = Eigen::VectorXd::Zero(k);
  for (const auto& f : data.families()) center_ += f.y.head(k) + f.y.tail(k);
  center_ /= 2.0 * n_;

  total_ = Eigen::MatrixXd::Zero(k, k);
  cross_ = Eigen::MatrixXd::Zero(k, k);
  std::map<std::pair<double, double>, std::size_t> index;
  const double r2 = std::numbers::sqrt2;
  for (const auto& f : data.families()) {
    const Eigen::VectorXd y1 = f.y.head(k) - center_;
    const Eigen::VectorXd y2 = f.y.tail(k) - center_;
    total_ += y1 * y1.transpose() + y2 * y2.transpose();
    cross_ += y1 * y2.transpose() + y2 * y1.transpose();

    auto [it, inserted] = index.try_emplace({f.pi, f.phi}, groups_.size());
    if (inserted)
      groups_.push_back({f.pi, f.phi, 0.0, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k),
                         Eigen::MatrixXd::Zero(k, k)});
    auto& g = groups_[it->second];
    const Eigen::VectorXd s = (y1 + y2) / r2;
    const Eigen::VectorXd d = (y1 - y2) / r2;
    g.n += 1.0;
    g.sumS += s;
    g.scatterS += s * s.transpose();
    g.scatterD += d * d.transpose();
  }
  total_ /= 2.0 * n_;
  cross_ /= 2.0 * n_;
}

namespace {

struct Factored {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd inverse;
  double logdet = 0.0;
};

bool factor(const Eigen::MatrixXd& M, Factored& out) {
  out.llt.compute(M);
  if (out.llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd& L = out.llt.matrixLLT();
  out.logdet = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return false;
    out.logdet += 2.0 * std::log(L(i, i));
  }
  out.inverse = out.llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  return std::isfinite(out.logdet);
}

}  // namespace

std::optional<double> PairLikelihood::profile(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                                              const Eigen::MatrixXd& E, Eigen::VectorXd* muHat,
                                              Gradient* grad) const {
  const int k = k_;
  const double r2 = std::numbers::sqrt2;
  std::vector<Factored> sums(groups_.size()), diffs(groups_.size());
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& grp = groups_[g];
    const Eigen::MatrixXd Ms = (1.0 + grp.pi) * A + (1.0 + 2.0 * grp.phi) * G + E;
    const Eigen::MatrixXd Md = (1.0 - grp.pi) * A + (1.0 - 2.0 * grp.phi) * G + E;
    if (!factor(Ms, sums[g]) || !factor(Md, diffs[g])) return std::nullopt;
    precision += 2.0 * grp.n * sums[g].inverse;
    rhs += r2 * sums[g].inverse * grp.sumS;
  }
  // Mean of the centred data; the caller sees it shifted back.
  const Eigen::VectorXd mu = precision.llt().solve(rhs);
  if (!mu.allFinite()) return std::nullopt;

  const double log2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  if (grad) {
    grad->dA = Eigen::MatrixXd::Zero(k, k);
    grad->dG = Eigen::MatrixXd::Zero(k, k);
    grad->dE = Eigen::MatrixXd::Zero(k, k);
  }
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& grp = groups_[g];
    const Eigen::MatrixXd ms = grp.sumS * mu.transpose();
    const Eigen::MatrixXd Qs =
        grp.scatterS - r2 * (ms + ms.transpose()) + 2.0 * grp.n * mu * mu.transpose();
    const Eigen::MatrixXd& Si = sums[g].inverse;
    const Eigen::MatrixXd& Di = diffs[g].inverse;
    ll += -0.5 * (grp.n * (2 * k * log2pi + sums[g].logdet + diffs[g].logdet) +
                  (Si.cwiseProduct(Qs)).sum() + (Di.cwiseProduct(grp.scatterD)).sum());
    if (grad) {
      const Eigen::MatrixXd Fs = -0.5 * (grp.n * Si - Si * Qs * Si);
      const Eigen::MatrixXd Fd = -0.5 * (grp.n * Di - Di * grp.scatterD * Di);
      grad->dA += (1.0 + grp.pi) * Fs + (1.0 - grp.pi) * Fd;
      grad->dG += (1.0 + 2.0 * grp.phi) * Fs + (1.0 - 2.0 * grp.phi) * Fd;
      grad->dE += Fs + Fd;
    }
  }
  if (!std::isfinite(ll)) return std::nullopt;
  if (muHat) *muHat = mu + center_;
  return ll;
}

}  // namespace vclink
