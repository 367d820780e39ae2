#include "isac/audit.hpp"

#include <algorithm>
#include <limits>

#include "isac/sensing.hpp"

namespace isac {

BeamformingSolution covariances_from_vectors(const BeamformingSolution& sol) {
  if (!sol.w) throw InvalidArgument("covariances_from_vectors: no recovered beamformers");
  BeamformingSolution out = sol;
  for (int i = 0; i < kStages; ++i)
    for (size_t m = 0; m < out.W[i].size(); ++m)
      for (size_t k = 0; k < out.W[i][m].size(); ++k) {
        const CVector& w = (*sol.w)[i][m][k];
        out.W[i][m][k] = w * w.adjoint();
      }
  return out;
}

std::vector<double> central_stage2_radii(const BeamformingSolution& sol, const Scenario& sc) {
  const FisherBlock fb = centralized_fim(sol, sc);
  const UncertaintyModel um = UncertaintyModel::make(sc, sc.config.Q1);
  std::vector<double> r;
  for (const auto& c : um.coupling)
    r.push_back(std::isinf(c.a) ? c.b : fb.singular() ? std::numeric_limits<double>::infinity() : c.radius(fb.trace_crb()));
  return r;
}

AuditReport audit_solution(const BeamformingSolution& input, const Scenario& sc, const AuditOptions& opt) {
  const BeamformingSolution sol = opt.use_vectors ? covariances_from_vectors(input) : input;
  const int M = sc.M(), K = sc.K();
  AuditReport rep;

  const PowerBreakdown pb = total_power(sol, sc);
  for (double p : pb.per_bs) rep.max_power_ratio = std::max(rep.max_power_ratio, p / sc.P_max_w);
  rep.power_ok = rep.max_power_ratio <= 1.0 + opt.power_rel_tol;

  const UncertaintyModel um = UncertaintyModel::make(sc, sc.config.Q1);
  rep.radii[0] = um.beta_g[0];
  rep.radii[1] = opt.stage2_radii ? *opt.stage2_radii : central_stage2_radii(sol, sc);

  rep.min_rate_margin = std::numeric_limits<double>::infinity();
  rep.max_leak_excess = -std::numeric_limits<double>::infinity();
  rep.rate.assign(M, std::vector<double>(K));
  rep.leak.assign(M, std::vector<double>(K));
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      std::array<double, kStages> sinr{};
      for (int i = 0; i < kStages; ++i) sinr[i] = sinr_user(sol, sc, i, m, k);
      rep.rate[m][k] = achievable_rate_from_sinr(sinr, sc.config.tau);
      rep.min_rate_margin = std::min(rep.min_rate_margin, rep.rate[m][k] - sc.config.R_info);

      double leak = 0.0;
      for (int i = 0; i < kStages; ++i) {
        bool finite = true;
        for (double r : rep.radii[i]) finite &= std::isfinite(r);
        leak += sc.tau(i) * (finite ? worst_case_leakage_oracle(sol, sc.channels.g_bar, rep.radii[i],
                                                                 sc.noise_eve_w, i, m, k, opt.oracle)
                                    : std::numeric_limits<double>::infinity());
      }
      rep.leak[m][k] = leak;
      rep.max_leak_excess = std::max(rep.max_leak_excess, leak - sc.config.R_leak);
    }
  rep.rate_ok = rep.min_rate_margin >= -opt.rate_tol;
  rep.leak_ok = rep.max_leak_excess <= opt.leak_tol;
  return rep;
}

}  // namespace isac
