#include "isac/sensing.hpp"

#include <cmath>
#include <limits>

namespace isac {

namespace {

constexpr double kSingularRcond = 1e-12;

std::vector<int> all_indices(int M) {
  std::vector<int> v(M);
  for (int m = 0; m < M; ++m) v[m] = m;
  return v;
}

Vec2 sample_gaussian(const Vec2& mean, const Mat2& Q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Mat2> es(Q);
  const Vec2 z(normal(rng), normal(rng));
  const Vec2 scaled = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  return mean + es.eigenvectors() * scaled;
}

}  // namespace

FisherBlock FisherBlock::from_information(const Mat2& F, FisherKind kind, int bs) {
  FisherBlock b;
  b.F = 0.5 * (F + F.transpose());
  b.kind = kind;
  b.bs = bs;
  Eigen::SelfAdjointEigenSolver<Mat2> es(b.F);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmax > 0.0 && lmin > kSingularRcond * lmax) b.Q = b.F.inverse();
  return b;
}

double FisherBlock::trace_crb() const {
  return Q ? Q->trace() : std::numeric_limits<double>::infinity();
}

ResponseDerivatives response_and_derivatives(const std::vector<Vec2>& bs, const std::vector<std::vector<Complex>>& alpha,
                                             const Vec2& p, int N) {
  const int M = static_cast<int>(bs.size());
  std::vector<CVector> a(M), da(M);
  std::vector<Vec2> dtheta(M);
  for (int m = 0; m < M; ++m) {
    const Vec2 d = p - bs[m];
    const double r2 = d.squaredNorm();
    if (!(r2 > 0.0)) throw InvalidGeometry("response_and_derivatives: target colocated with a BS");
    const double theta = std::atan2(d.y(), d.x());
    a[m] = steering_vector(theta, N);
    da[m] = steering_derivative(theta, N);
    dtheta[m] = Vec2(-d.y() / r2, d.x() / r2);
  }
  ResponseDerivatives out;
  out.G.assign(M, std::vector<CMatrix>(M));
  out.dG.assign(M, std::vector<std::array<CMatrix, 2>>(M));
  for (int tx = 0; tx < M; ++tx) {
    for (int rx = 0; rx < M; ++rx) {
      const Complex g = alpha[tx][rx];
      out.G[tx][rx] = g * a[rx] * a[tx].adjoint();
      const CMatrix d_rx = g * da[rx] * a[tx].adjoint();
      const CMatrix d_tx = g * a[rx] * da[tx].adjoint();
      for (int j = 0; j < 2; ++j) out.dG[tx][rx][j] = d_rx * dtheta[rx](j) + d_tx * dtheta[tx](j);
    }
  }
  return out;
}

Mat2 FimOperator::apply(const std::vector<CMatrix>& S) const {
  Mat2 F = Mat2::Zero();
  for (size_t m = 0; m < coef.size() && m < S.size(); ++m) {
    const double f00 = (coef[m][0].cwiseProduct(S[m].transpose())).sum().real();
    const double f01 = (coef[m][1].cwiseProduct(S[m].transpose())).sum().real();
    const double f11 = (coef[m][2].cwiseProduct(S[m].transpose())).sum().real();
    F(0, 0) += f00;
    F(0, 1) += f01;
    F(1, 0) += f01;
    F(1, 1) += f11;
  }
  return F;
}

FimOperator fim_operator(const Scenario& sc, const std::vector<int>& transmitters, const std::vector<int>& receivers,
                         double power_scale) {
  const int M = sc.M(), N = sc.N();
  const auto txs = transmitters.empty() ? all_indices(M) : transmitters;
  const auto rxs = receivers.empty() ? all_indices(M) : receivers;
  const ResponseDerivatives rd =
      response_and_derivatives(sc.geometry.bs_positions, sc.channels.alpha_mm, sc.geometry.eve_position_est, N);
  const double factor = 2.0 * sc.config.L / sc.noise_sense_w * power_scale;
  FimOperator op;
  op.coef.assign(M, {CMatrix::Zero(N, N), CMatrix::Zero(N, N), CMatrix::Zero(N, N)});
  constexpr int kPairs[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (int tx : txs) {
    for (int rx : rxs) {
      const auto& d = rd.dG[tx][rx];
      for (int e = 0; e < 3; ++e) {
        // Re Tr(dG_j S dG_i^H) = Tr(herm(dG_i^H dG_j) S)
        const CMatrix C = d[kPairs[e][0]].adjoint() * d[kPairs[e][1]];
        op.coef[tx][e] += factor * 0.5 * (C + C.adjoint());
      }
    }
  }
  return op;
}

namespace {

std::vector<CMatrix> stage1_covariances(const BeamformingSolution& sol) {
  std::vector<CMatrix> S;
  for (int m = 0; m < sol.M(); ++m) S.push_back(sol.transmit_covariance(0, m));
  return S;
}

}  // namespace

FisherBlock centralized_fim(const BeamformingSolution& sol, const Scenario& sc) {
  return FisherBlock::from_information(fim_operator(sc, {}, {}).apply(stage1_covariances(sol)),
                                       FisherKind::centralized);
}

FisherBlock local_fim(const BeamformingSolution& sol, const Scenario& sc, int m) {
  return FisherBlock::from_information(fim_operator(sc, {}, {m}).apply(stage1_covariances(sol)), FisherKind::per_bs,
                                       m);
}

Mat2 transmitter_fim(const BeamformingSolution& sol, const Scenario& sc, int m) {
  return fim_operator(sc, {m}, {}).apply(stage1_covariances(sol));
}

FusionResult fuse_estimates(const std::vector<Vec2>& p_hat, const std::vector<Mat2>& Q) {
  if (p_hat.empty() || p_hat.size() != Q.size()) throw InvalidArgument("fuse_estimates: size mismatch");
  Mat2 info = Mat2::Zero();
  std::vector<Mat2> Qinv;
  for (const Mat2& q : Q) {
    Eigen::LLT<Mat2> llt(0.5 * (q + q.transpose()));
    if (llt.info() != Eigen::Success) throw SingularCovariance("fuse_estimates: covariance not positive definite");
    Qinv.push_back(llt.solve(Mat2::Identity()));
    info += Qinv.back();
  }
  FusionResult r;
  r.Q_fused = info.inverse();
  r.p_fused.setZero();
  for (size_t m = 0; m < Q.size(); ++m) {
    r.weights.push_back(r.Q_fused * Qinv[m]);
    r.p_fused += r.weights.back() * p_hat[m];
  }
  return r;
}

EstimationDraw simulate_estimation(const Scenario& sc, const BeamformingSolution& sol, SensingMode mode,
                                   std::mt19937_64& rng) {
  const Vec2& p = sc.geometry.eve_position_true;
  if (mode == SensingMode::centralized) {
    const FisherBlock fb = centralized_fim(sol, sc);
    if (fb.singular()) throw SingularCovariance("simulate_estimation: singular centralized FIM");
    return {sample_gaussian(p, *fb.Q, rng), *fb.Q};
  }
  std::vector<FisherBlock> local;
  Mat2 info = Mat2::Zero();
  bool all_invertible = true;
  for (int m = 0; m < sc.M(); ++m) {
    local.push_back(local_fim(sol, sc, m));
    info += local.back().F;
    all_invertible &= !local.back().singular();
  }
  if (all_invertible) {
    std::vector<Vec2> p_hat;
    std::vector<Mat2> Q;
    for (const auto& fb : local) {
      p_hat.push_back(sample_gaussian(p, *fb.Q, rng));
      Q.push_back(*fb.Q);
    }
    const FusionResult fr = fuse_estimates(p_hat, Q);
    return {fr.p_fused, fr.Q_fused};
  }
  // A BS that only sees its own angle has a rank-one FIM; fuse in information form.
  const FisherBlock fused = FisherBlock::from_information(info, FisherKind::fused);
  if (fused.singular()) throw SingularCovariance("simulate_estimation: singular fused FIM");
  return {sample_gaussian(p, *fused.Q, rng), *fused.Q};
}

}  // namespace isac
