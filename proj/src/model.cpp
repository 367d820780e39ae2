#include "isac/model.hpp"

#include <cmath>
#include <limits>

namespace isac {

NormalizedModel NormalizedModel::make(const Scenario& sc, double power_unit) {
  if (!(power_unit > 0.0)) throw InvalidArgument("NormalizedModel: power_unit must be positive");
  NormalizedModel mdl;
  mdl.M = sc.M();
  mdl.N = sc.N();
  mdl.K = sc.K();
  mdl.tau = sc.config.tau;
  mdl.power_unit = power_unit;
  mdl.p_max = sc.P_max_w / power_unit;
  mdl.rate_target = sc.config.R_info;
  mdl.leak_target = sc.config.R_leak;
  const double h_scale = std::sqrt(power_unit / sc.noise_user_w);
  mdl.g_scale = std::sqrt(power_unit / sc.noise_eve_w);

  mdl.h.assign(mdl.M, std::vector<std::vector<CVector>>(mdl.M, std::vector<CVector>(mdl.K)));
  for (int s = 0; s < mdl.M; ++s)
    for (int m = 0; m < mdl.M; ++m)
      for (int k = 0; k < mdl.K; ++k) mdl.h[s][m][k] = sc.channels.h[s][m][k] * h_scale;

  const UncertaintyModel um = UncertaintyModel::make(sc, sc.config.Q1);
  for (int m = 0; m < mdl.M; ++m) {
    mdl.g_bar.push_back(sc.channels.g_bar[m] * mdl.g_scale);
    mdl.beta1.push_back(um.beta_g[0][m] * mdl.g_scale);
    CrbCoupling c = um.coupling[m];
    c.a /= mdl.g_scale;
    c.b *= mdl.g_scale;
    mdl.coupling.push_back(c);
  }
  mdl.fim = fim_operator(sc, {}, {}, power_unit);
  for (int m = 0; m < mdl.M; ++m) mdl.fim_tx.push_back(fim_operator(sc, {m}, {}, power_unit));
  return mdl;
}

double NormalizedModel::stacked_beta1_sq() const {
  double s = 0.0;
  for (double b : beta1) s += b * b;
  return s;
}

std::vector<double> NormalizedModel::stage2_radii(const Mat2& F) const {
  const FisherBlock fb = FisherBlock::from_information(F, FisherKind::centralized);
  std::vector<double> r;
  for (const auto& c : coupling)
    r.push_back(std::isinf(c.a) ? c.b : fb.singular() ? std::numeric_limits<double>::infinity() : c.radius(fb.trace_crb()));
  return r;
}

namespace {

BeamformingSolution scaled(const BeamformingSolution& x, double s) {
  BeamformingSolution y = x;
  for (int i = 0; i < kStages; ++i) {
    for (auto& row : y.W[i])
      for (auto& W : row) W *= s;
    for (auto& R : y.R[i]) R *= s;
  }
  if (y.w) {
    for (auto& stage : *y.w)
      for (auto& row : stage)
        for (auto& w : row) w *= std::sqrt(s);
  }
  return y;
}

}  // namespace

BeamformingSolution NormalizedModel::to_watts(const BeamformingSolution& x) const { return scaled(x, power_unit); }
BeamformingSolution NormalizedModel::from_watts(const BeamformingSolution& w) const {
  return scaled(w, 1.0 / power_unit);
}

double interference_plus_noise(const BeamformingSolution& X, const NormalizedModel& mdl, int stage, int m, int k) {
  double z = 1.0;
  for (int s = 0; s < mdl.M; ++s) {
    const CVector& h = mdl.h[s][m][k];
    for (int kk = 0; kk < mdl.K; ++kk) {
      if (s == m && kk == k) continue;
      z += (h.adjoint() * X.W[stage][s][kk] * h)(0, 0).real();
    }
    z += (h.adjoint() * X.R[stage][s] * h)(0, 0).real();
  }
  return z;
}

double signal_power(const BeamformingSolution& X, const NormalizedModel& mdl, int stage, int m, int k) {
  const CVector& h = mdl.h[m][m][k];
  return (h.adjoint() * X.W[stage][m][k] * h)(0, 0).real();
}

LocalView::LocalView(const NormalizedModel& mdl, int m)
    : m_(m),
      M_(mdl.M),
      N_(mdl.N),
      K_(mdl.K),
      tau_(mdl.tau),
      p_max_(mdl.p_max),
      rate_target_(mdl.rate_target),
      leak_target_(mdl.leak_target),
      h_(mdl.h.at(m)),
      g_bar_(mdl.g_bar.at(m)),
      beta1_(mdl.beta1.at(m)),
      coupling_(mdl.coupling.at(m)),
      fim_tx_(mdl.fim_tx.at(m)) {}

}  // namespace isac
