#pragma once

#include <array>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/scenario.hpp"
#include "isac/sensing.hpp"
#include "isac/uncertainty.hpp"

namespace isac {

/// Scenario data in optimizer units: covariances in `power_unit` watts and every
/// channel divided by the square root of its receiver noise, so that noise powers
/// are 1 and all SDP data are O(1).
struct NormalizedModel {
  int M = 0, N = 0, K = 0;
  std::array<double, kStages> tau{};
  double power_unit = 1e-3;  // watts per optimizer unit
  double p_max = 0.0;        // optimizer units
  double rate_target = 0.0;  // bits/s/Hz
  double leak_target = 0.0;  // bits/s/Hz
  double g_scale = 0.0;      // physical -> normalized eavesdropper channel

  std::vector<std::vector<std::vector<CVector>>> h;  // [src][m][k]
  std::vector<CVector> g_bar;                          // [m]
  std::vector<double> beta1;                           // stage-1 radius per BS
  std::vector<CrbCoupling> coupling;                   // radius_m(Tr Q) = b + sqrt(Tr Q) / a
  FimOperator fim;                                     // all transmitters and receivers
  std::vector<FimOperator> fim_tx;                     // transmitter view F_bar_m

  static NormalizedModel make(const Scenario& sc, double power_unit = 1e-3);

  double stacked_beta1_sq() const;
  /// Per-BS stage-2 radii implied by a Fisher information F (m^-2); +inf if singular.
  std::vector<double> stage2_radii(const Mat2& F) const;

  BeamformingSolution to_watts(const BeamformingSolution& x) const;
  BeamformingSolution from_watts(const BeamformingSolution& w) const;
};

/// Interference plus noise Z of user (m,k) in `stage` (optimizer units, unit noise).
double interference_plus_noise(const BeamformingSolution& X, const NormalizedModel& mdl, int stage, int m, int k);
/// Own-signal power h_mmk^H W_mk h_mmk.
double signal_power(const BeamformingSolution& X, const NormalizedModel& mdl, int stage, int m, int k);

/// Data BS m may use in the decentralized design: its own channels to every user,
/// its estimated eavesdropper channel and its transmitter-view FIM operator.
class LocalView {
 public:
  LocalView(const NormalizedModel& mdl, int m);

  int bs() const { return m_; }
  int M() const { return M_; }
  int N() const { return N_; }
  int K() const { return K_; }
  const std::array<double, kStages>& tau() const { return tau_; }
  double p_max() const { return p_max_; }
  double rate_target() const { return rate_target_; }
  double leak_target() const { return leak_target_; }
  /// Channel from this BS to user (victim, k).
  const CVector& h(int victim, int k) const { return h_[victim][k]; }
  const CVector& g_bar() const { return g_bar_; }
  double beta1() const { return beta1_; }
  const CrbCoupling& coupling() const { return coupling_; }
  const FimOperator& fim_tx() const { return fim_tx_; }

 private:
  int m_, M_, N_, K_;
  std::array<double, kStages> tau_;
  double p_max_, rate_target_, leak_target_;
  std::vector<std::vector<CVector>> h_;
  CVector g_bar_;
  double beta1_;
  CrbCoupling coupling_;
  FimOperator fim_tx_;
};

}  // namespace isac
