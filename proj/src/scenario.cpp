#include "isac/scenario.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace isac {

namespace {

using json = nlohmann::json;
constexpr double kSpeedOfLight = 299792458.0;

CVector complex_gaussian(int N, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector v(N);
  for (int n = 0; n < N; ++n) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(n) = Complex(re, im);
  }
  return v;
}

Complex unit_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  return std::polar(1.0, phase(rng));
}

std::string hex_double(double v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return buf;
}

std::string hex_vector(const CVector& v) {
  std::string out;
  out.reserve(v.size() * 33);
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    if (n) out += ' ';
    out += hex_double(v(n).real());
    out += ':';
    out += hex_double(v(n).imag());
  }
  return out;
}

std::string hex_complex(Complex c) { return hex_double(c.real()) + ":" + hex_double(c.imag()); }

Vec2 vec2_from(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(key) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

void SystemConfig::validate() const {
  if (M < 1 || N < 1 || K < 1 || L < 1) throw ConfigError("M, N, K, L must all be >= 1");
  if (tau[0] <= 0.0 || tau[1] <= 0.0 || std::abs(tau[0] + tau[1] - 1.0) > 1e-12)
    throw ConfigError("tau must be positive and sum to 1");
  if (carrier_freq <= 0.0) throw ConfigError("carrier_freq must be positive");
  if (static_cast<int>(beta_nlos.size()) != M) throw ConfigError("beta_nlos must have M entries");
  for (double b : beta_nlos)
    if (b < 0.0) throw ConfigError("beta_nlos entries must be >= 0");
  if (static_cast<int>(bs_positions.size()) != M) throw ConfigError("bs_positions must have M entries");
  if (std::abs(Q1(0, 1) - Q1(1, 0)) > 1e-12 * (1.0 + Q1.norm())) throw ConfigError("Q1 must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat2> es(Q1);
  if (es.eigenvalues().minCoeff() < -1e-12) throw ConfigError("Q1 must be positive semidefinite");
  if (!(dbm_to_watts(noise_user) > 0.0 && dbm_to_watts(noise_eve) > 0.0 && dbm_to_watts(noise_sense) > 0.0))
    throw ConfigError("noise powers must be positive");
  if (R_info < 0.0 || R_leak < 0.0) throw ConfigError("rate requirements must be >= 0");
  if (user_distance[0] <= 0.0 || user_distance[1] < user_distance[0])
    throw ConfigError("user_distance must satisfy 0 < min <= max");
  if (rician_kappa < 0.0) throw ConfigError("rician_kappa must be >= 0");
  if (rcs <= 0.0) throw ConfigError("rcs must be positive");
}

SystemConfig SystemConfig::full_default() { return SystemConfig{}; }

SystemConfig SystemConfig::desk_default() {
  SystemConfig c;
  c.M = 2;
  c.N = 3;
  c.K = 2;
  c.L = 256;
  c.beta_nlos = {0.1, 0.1};
  c.bs_positions = {{15.0, 22.5}, {-25.0, 25.0}};
  return c;
}

double angle_from_array_axis(const Vec2& origin, const Vec2& target) {
  const Vec2 d = target - origin;
  return std::atan2(d.y(), d.x());
}

Geometry Geometry::make(std::vector<Vec2> bs, Vec2 eve_true, Vec2 eve_est) {
  Geometry g;
  g.bs_positions = std::move(bs);
  g.eve_position_true = eve_true;
  g.eve_position_est = eve_est;
  for (const Vec2& q : g.bs_positions) {
    const double d = (q - eve_est).norm();
    if (!(d > 0.0)) throw InvalidGeometry("eavesdropper estimate colocated with a BS");
    if (!((q - eve_true).norm() > 0.0)) throw InvalidGeometry("eavesdropper colocated with a BS");
    g.d_bar.push_back(d);
    g.theta_bar.push_back(angle_from_array_axis(q, eve_est));
    g.theta_true.push_back(angle_from_array_axis(q, eve_true));
  }
  return g;
}

CVector steering_vector(double theta, int N) {
  if (N < 1) throw InvalidArgument("steering_vector: N must be >= 1");
  CVector a(N);
  const double c = std::cos(theta);
  a(0) = Complex(1.0, 0.0);
  for (int n = 1; n < N; ++n) a(n) = std::polar(1.0, std::numbers::pi * n * c);
  return a;
}

CVector steering_derivative(double theta, int N) {
  CVector a = steering_vector(theta, N);
  const double s = std::sin(theta);
  for (int n = 0; n < N; ++n) a(n) *= Complex(0.0, -std::numbers::pi * n * s);
  return a;
}

CVector sample_nlos_component(double beta, int N, std::mt19937_64& rng) {
  if (beta < 0.0) throw InvalidArgument("sample_nlos_component: beta must be >= 0");
  if (beta == 0.0) return CVector::Zero(N);
  CVector dir = complex_gaussian(N, rng);
  const double norm = dir.norm();
  if (norm == 0.0) return CVector::Zero(N);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // radius law of the uniform distribution on the 2N-dimensional real ball
  const double radius = beta * std::pow(unif(rng), 1.0 / (2.0 * N));
  return dir * (std::min(radius, beta) / norm);
}

Scenario build_scenario(const SystemConfig& config) {
  config.validate();
  Scenario s;
  s.config = config;
  s.geometry = Geometry::make(config.bs_positions, config.eve_position_true, config.eve_position_est);
  s.P_max_w = dbm_to_watts(config.P_max);
  s.noise_user_w = dbm_to_watts(config.noise_user);
  s.noise_eve_w = dbm_to_watts(config.noise_eve);
  s.noise_sense_w = dbm_to_watts(config.noise_sense);
  s.wavelength = kSpeedOfLight / config.carrier_freq;

  const int M = config.M, N = config.N, K = config.K;
  const double lambda = s.wavelength;
  const double ref_gain = lambda / (4.0 * std::numbers::pi);  // free-space amplitude at 1 m
  std::mt19937_64 rng(config.rng_seed);

  // User drops around the serving BS.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  s.geometry.user_positions.assign(M, {});
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const double r = config.user_distance[0] + (config.user_distance[1] - config.user_distance[0]) * unif(rng);
      const double phi = 2.0 * std::numbers::pi * unif(rng);
      s.geometry.user_positions[m].push_back(config.bs_positions[m] + r * Vec2(std::cos(phi), std::sin(phi)));
    }
  }

  // Rayleigh fading with log-distance path loss.
  ChannelSet& ch = s.channels;
  ch.h.assign(M, std::vector<std::vector<CVector>>(M, std::vector<CVector>(K)));
  for (int src = 0; src < M; ++src) {
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < K; ++k) {
        const double d = (config.bs_positions[src] - s.geometry.user_positions[m][k]).norm();
        const double amp = ref_gain * std::pow(d, -0.5 * config.path_loss_exponent);
        ch.h[src][m][k] = amp * complex_gaussian(N, rng);
      }
    }
  }

  // Eavesdropper links: free-space-like 1/d magnitudes with random phase.
  const double kappa = config.rician_kappa;
  const double los_w = std::sqrt(kappa / (1.0 + kappa));
  const double nlos_w = std::sqrt(1.0 / (1.0 + kappa));
  for (int m = 0; m < M; ++m) {
    const Complex alpha = ref_gain / s.geometry.d_bar[m] * unit_phase(rng);
    ch.alpha.push_back(alpha);
    CVector g_tilde = sample_nlos_component(config.beta_nlos[m], N, rng);
    ch.g_bar.push_back(alpha * los_w * steering_vector(s.geometry.theta_bar[m], N));
    ch.g_true.push_back(alpha * (los_w * steering_vector(s.geometry.theta_true[m], N) + nlos_w * g_tilde));
    ch.g_tilde.push_back(std::move(g_tilde));
  }
  const double radar_gain = lambda * std::sqrt(config.rcs) / std::pow(4.0 * std::numbers::pi, 1.5);
  ch.alpha_mm.assign(M, std::vector<Complex>(M));
  for (int tx = 0; tx < M; ++tx)
    for (int rx = 0; rx < M; ++rx)
      ch.alpha_mm[tx][rx] = radar_gain / (s.geometry.d_bar[tx] * s.geometry.d_bar[rx]) * unit_phase(rng);
  return s;
}

SystemConfig config_from_json_text(const std::string& text, const SystemConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  SystemConfig c = base;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("M", c.M);
    get("N", c.N);
    get("K", c.K);
    get("L", c.L);
    get("carrier_freq", c.carrier_freq);
    get("P_max", c.P_max);
    get("R_info", c.R_info);
    get("R_leak", c.R_leak);
    get("noise_user", c.noise_user);
    get("noise_eve", c.noise_eve);
    get("noise_sense", c.noise_sense);
    get("rician_kappa", c.rician_kappa);
    get("rng_seed", c.rng_seed);
    get("path_loss_exponent", c.path_loss_exponent);
    get("rcs", c.rcs);
    if (j.contains("tau")) {
      const auto t = j.at("tau").get<std::vector<double>>();
      if (t.size() != 2) throw ConfigError("tau: expected two entries");
      c.tau = {t[0], t[1]};
    }
    if (j.contains("user_distance")) {
      const auto t = j.at("user_distance").get<std::vector<double>>();
      if (t.size() != 2) throw ConfigError("user_distance: expected [min, max]");
      c.user_distance = {t[0], t[1]};
    }
    if (j.contains("beta_nlos")) {
      if (j.at("beta_nlos").is_number())
        c.beta_nlos.assign(c.M, j.at("beta_nlos").get<double>());
      else
        c.beta_nlos = j.at("beta_nlos").get<std::vector<double>>();
    } else {
      c.beta_nlos.resize(c.M, c.beta_nlos.empty() ? 0.1 : c.beta_nlos.back());
    }
    if (j.contains("Q1")) {
      const auto q = j.at("Q1").get<std::vector<std::vector<double>>>();
      if (q.size() != 2 || q[0].size() != 2 || q[1].size() != 2) throw ConfigError("Q1: expected 2x2");
      c.Q1 << q[0][0], q[0][1], q[1][0], q[1][1];
    }
    if (j.contains("bs_positions")) {
      c.bs_positions.clear();
      for (const auto& p : j.at("bs_positions")) c.bs_positions.push_back(vec2_from(p, "bs_positions"));
    } else {
      c.bs_positions.resize(c.M);
    }
    if (j.contains("eve_position_true")) c.eve_position_true = vec2_from(j.at("eve_position_true"), "eve_position_true");
    c.eve_position_est = c.eve_position_true;
    if (j.contains("eve_position_est")) c.eve_position_est = vec2_from(j.at("eve_position_est"), "eve_position_est");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  c.validate();
  return c;
}

SystemConfig load_config(const std::string& path, const SystemConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str(), base);
}

namespace {

json config_json(const SystemConfig& c) {
  json j;
  j["M"] = c.M;
  j["N"] = c.N;
  j["K"] = c.K;
  j["L"] = c.L;
  j["carrier_freq"] = c.carrier_freq;
  j["tau"] = {c.tau[0], c.tau[1]};
  j["P_max"] = c.P_max;
  j["R_info"] = c.R_info;
  j["R_leak"] = c.R_leak;
  j["noise_user"] = c.noise_user;
  j["noise_eve"] = c.noise_eve;
  j["noise_sense"] = c.noise_sense;
  j["rician_kappa"] = c.rician_kappa;
  j["beta_nlos"] = c.beta_nlos;
  j["Q1"] = {{c.Q1(0, 0), c.Q1(0, 1)}, {c.Q1(1, 0), c.Q1(1, 1)}};
  j["rng_seed"] = c.rng_seed;
  j["bs_positions"] = json::array();
  for (const Vec2& p : c.bs_positions) j["bs_positions"].push_back(vec2_to(p));
  j["eve_position_true"] = vec2_to(c.eve_position_true);
  j["eve_position_est"] = vec2_to(c.eve_position_est);
  j["path_loss_exponent"] = c.path_loss_exponent;
  j["rcs"] = c.rcs;
  j["user_distance"] = {c.user_distance[0], c.user_distance[1]};
  return j;
}

}  // namespace

std::string config_to_json_text(const SystemConfig& config) { return config_json(config).dump(2); }

std::string serialize_scenario(const Scenario& s) {
  json j = config_json(s.config);
  json ch;
  const int M = s.M(), K = s.K();
  for (int src = 0; src < M; ++src)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k)
        ch["h"].push_back(hex_vector(s.channels.h[src][m][k]));
  for (int m = 0; m < M; ++m) {
    ch["g_bar"].push_back(hex_vector(s.channels.g_bar[m]));
    ch["g_true"].push_back(hex_vector(s.channels.g_true[m]));
    ch["alpha"].push_back(hex_complex(s.channels.alpha[m]));
    for (int rx = 0; rx < M; ++rx) ch["alpha_mm"].push_back(hex_complex(s.channels.alpha_mm[m][rx]));
  }
  j["channels"] = ch;
  return j.dump(2);
}

}  // namespace isac
