#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "isac/core.hpp"

namespace isac {

/// System constants. Powers and noise levels are in dBm as configured; the
/// Scenario converts them to watts once at build time.
struct SystemConfig {
  int M = 3;                 // base stations
  int N = 4;                 // antennas per BS
  int K = 2;                 // users per BS
  int L = 1024;              // sensing snapshots in stage 1
  double carrier_freq = 5e9;  // Hz
  std::array<double, kStages> tau{0.2, 0.8};
  double P_max = 20.0;  // dBm
  double R_info = 5.0;  // bits/s/Hz
  double R_leak = 0.5;  // bits/s/Hz
  double noise_user = -100.0;   // dBm
  double noise_eve = -100.0;    // dBm
  double noise_sense = -100.0;  // dBm
  double rician_kappa = 10.0;
  std::vector<double> beta_nlos{0.1, 0.1, 0.1};
  Mat2 Q1 = Mat2::Identity() * 0.25;  // m^2
  std::uint64_t rng_seed = 1;

  // Geometry, meters.
  std::vector<Vec2> bs_positions{{15.0, 22.5}, {-25.0, 25.0}, {15.0, -30.0}};
  Vec2 eve_position_true{0.0, 0.0};
  Vec2 eve_position_est{0.0, 0.0};

  // Channel-model knobs.
  double path_loss_exponent = 3.0;
  double rcs = 1.0;  // m^2
  std::array<double, 2> user_distance{5.0, 15.0};  // min/max BS-user distance, m

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  /// Paper default (M=3, N=4, K=2, L=1024).
  static SystemConfig full_default();
  /// Desk-scale default for CI (M=2, N=3, K=2, L=256).
  static SystemConfig desk_default();
};

struct Geometry {
  std::vector<Vec2> bs_positions;
  Vec2 eve_position_true;
  Vec2 eve_position_est;
  std::vector<double> d_bar;      // |q_m - p_bar|
  std::vector<double> theta_bar;  // angle of p_bar - q_m from the array axis (x-axis)
  std::vector<double> theta_true;
  std::vector<std::vector<Vec2>> user_positions;  // [m][k]

  /// Builds the derived distances and angles; throws InvalidGeometry when the
  /// eavesdropper estimate coincides with a BS.
  static Geometry make(std::vector<Vec2> bs, Vec2 eve_true, Vec2 eve_est);
};

/// Angle of `target - origin` measured from the x-axis, which is also the ULA
/// axis of every BS. The steering phase of antenna n is pi*n*cos(theta).
double angle_from_array_axis(const Vec2& origin, const Vec2& target);

struct ChannelSet {
  // h[m_src][m][k]: BS m_src -> user (m,k)
  std::vector<std::vector<std::vector<CVector>>> h;
  std::vector<CVector> g_bar;    // estimated BS m -> eavesdropper (LoS at theta_bar)
  std::vector<CVector> g_true;   // realized channel at the true angle with NLoS part
  std::vector<CVector> g_tilde;  // drawn NLoS components, |g_tilde_m| <= beta_nlos_m
  std::vector<Complex> alpha;    // path gain of g_m
  std::vector<std::vector<Complex>> alpha_mm;  // [m_tx][m_rx] round-trip gain
};

/// Immutable networked-ISAC world. All powers in watts.
struct Scenario {
  SystemConfig config;
  Geometry geometry;
  ChannelSet channels;
  double P_max_w = 0.0;
  double noise_user_w = 0.0;
  double noise_eve_w = 0.0;
  double noise_sense_w = 0.0;
  double wavelength = 0.0;

  int M() const { return config.M; }
  int N() const { return config.N; }
  int K() const { return config.K; }
  double tau(int stage) const { return config.tau[stage]; }
};

/// a(theta)_n = exp(j*pi*n*cos(theta)), n = 0..N-1.
CVector steering_vector(double theta, int N);
/// Elementwise d a / d theta.
CVector steering_derivative(double theta, int N);

/// Uniform draw from the complex N-ball of radius beta.
CVector sample_nlos_component(double beta, int N, std::mt19937_64& rng);

Scenario build_scenario(const SystemConfig& config);

// Config and scenario files (JSON).
SystemConfig config_from_json_text(const std::string& text, const SystemConfig& base = {});
SystemConfig load_config(const std::string& path, const SystemConfig& base = {});
std::string config_to_json_text(const SystemConfig& config);
/// Config plus base-16 dumps of every channel coefficient.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace isac
