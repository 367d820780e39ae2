#include "isac/metrics.hpp"

#include <cmath>

#include <json.hpp>

namespace isac {

namespace {

double quad(const CMatrix& A, const CVector& x) { return (x.adjoint() * A * x)(0, 0).real(); }

}  // namespace

BeamformingSolution BeamformingSolution::zeros(int M, int N, int K) {
  BeamformingSolution s;
  for (int i = 0; i < kStages; ++i) {
    s.W[i].assign(M, std::vector<CMatrix>(K, CMatrix::Zero(N, N)));
    s.R[i].assign(M, CMatrix::Zero(N, N));
  }
  return s;
}

CMatrix BeamformingSolution::transmit_covariance(int stage, int m) const {
  CMatrix S = R[stage][m];
  for (const CMatrix& Wk : W[stage][m]) S += Wk;
  return S;
}

bool is_valid_solution(const BeamformingSolution& sol, double tol) {
  auto psd = [](const CMatrix& A) {
    if ((A - A.adjoint()).norm() > 1e-9 * (1.0 + A.norm())) return false;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(A);
    return es.eigenvalues().minCoeff() >= -1e-9 * (1.0 + A.norm());
  };
  for (int i = 0; i < kStages; ++i) {
    for (int m = 0; m < sol.M(); ++m) {
      if (!psd(sol.R[i][m])) return false;
      for (int k = 0; k < sol.K(); ++k) {
        const CMatrix& W = sol.W[i][m][k];
        if (!psd(W)) return false;
        if (sol.w) {
          const CVector& w = (*sol.w)[i][m][k];
          const double nw = W.norm();
          if (nw > 0.0 && (w * w.adjoint() - W).norm() / nw > tol) return false;
        }
      }
    }
  }
  return true;
}

double sinr_user(const BeamformingSolution& sol, const Scenario& sc, int stage, int m, int k) {
  const auto& h = sc.channels.h;
  const CVector& hmmk = h[m][m][k];
  const double signal = quad(sol.W[stage][m][k], hmmk);
  double interference = sc.noise_user_w;
  for (int src = 0; src < sc.M(); ++src) {
    const CVector& hs = h[src][m][k];
    for (int kk = 0; kk < sc.K(); ++kk) {
      if (src == m && kk == k) continue;
      interference += quad(sol.W[stage][src][kk], hs);
    }
    interference += quad(sol.R[stage][src], hs);
  }
  return std::max(signal, 0.0) / interference;
}

double sinr_user_vectors(const BeamformingSolution& sol, const Scenario& sc, int stage, int m, int k) {
  if (!sol.w) throw InvalidArgument("sinr_user_vectors: solution has no recovered beamformers");
  const auto& w = (*sol.w)[stage];
  const auto& h = sc.channels.h;
  const double signal = std::norm(h[m][m][k].dot(w[m][k]));
  double interference = sc.noise_user_w;
  for (int src = 0; src < sc.M(); ++src) {
    const CVector& hs = h[src][m][k];
    for (int kk = 0; kk < sc.K(); ++kk) {
      if (src == m && kk == k) continue;
      interference += std::norm(hs.dot(w[src][kk]));
    }
    interference += quad(sol.R[stage][src], hs);
  }
  return signal / interference;
}

double achievable_rate_from_sinr(const std::array<double, kStages>& sinr, const std::array<double, kStages>& tau) {
  double r = 0.0;
  for (int i = 0; i < kStages; ++i) r += tau[i] * std::log2(1.0 + sinr[i]);
  return r;
}

double achievable_rate(const BeamformingSolution& sol, const Scenario& sc, int m, int k) {
  return achievable_rate_from_sinr({sinr_user(sol, sc, 0, m, k), sinr_user(sol, sc, 1, m, k)}, sc.config.tau);
}

double leakage_ratio(const BeamformingSolution& sol, const std::vector<CVector>& g, double noise_eve, int stage,
                     int m, int k) {
  double denom = noise_eve;
  for (size_t src = 0; src < g.size(); ++src) denom += quad(sol.R[stage][src], g[src]);
  return std::max(quad(sol.W[stage][m][k], g[m]), 0.0) / denom;
}

double leakage_rate(const BeamformingSolution& sol, const std::vector<CVector>& g, double noise_eve, int stage,
                    int m, int k) {
  return std::log2(1.0 + leakage_ratio(sol, g, noise_eve, stage, m, k));
}

PowerBreakdown total_power(const BeamformingSolution& sol, const std::array<double, kStages>& tau) {
  PowerBreakdown p;
  p.per_bs.assign(sol.M(), 0.0);
  for (int i = 0; i < kStages; ++i) {
    for (int m = 0; m < sol.M(); ++m) {
      double stage_power = sol.R[i][m].trace().real();
      for (const CMatrix& W : sol.W[i][m]) stage_power += W.trace().real();
      p.per_bs[m] += tau[i] * stage_power;
    }
  }
  for (double v : p.per_bs) p.total += v;
  return p;
}

namespace {

using json = nlohmann::json;

json matrix_json(const CMatrix& A) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      re.push_back(A(r, c).real());
      im.push_back(A(r, c).imag());
    }
  return {{"rows", A.rows()}, {"cols", A.cols()}, {"re", re}, {"im", im}};
}

CMatrix matrix_from(const json& j) {
  const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
  const auto re = j.at("re").get<std::vector<double>>(), im = j.at("im").get<std::vector<double>>();
  if (re.size() != static_cast<size_t>(rows * cols) || im.size() != re.size())
    throw InvalidArgument("solution_from_json: matrix size mismatch");
  CMatrix A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) A(r, c) = Complex(re[r * cols + c], im[r * cols + c]);
  return A;
}

}  // namespace

std::string solution_to_json(const BeamformingSolution& sol) {
  json j;
  j["M"] = sol.M();
  j["N"] = sol.N();
  j["K"] = sol.K();
  for (int i = 0; i < kStages; ++i) {
    const std::string st = std::to_string(i);
    for (int m = 0; m < sol.M(); ++m) {
      j["R"][st].push_back(matrix_json(sol.R[i][m]));
      json ws = json::array();
      for (const auto& W : sol.W[i][m]) ws.push_back(matrix_json(W));
      j["W"][st].push_back(ws);
      if (sol.w) {
        json vs = json::array();
        for (const auto& w : (*sol.w)[i][m]) vs.push_back(matrix_json(w));
        j["w"][st].push_back(vs);
      }
    }
  }
  return j.dump();
}

BeamformingSolution solution_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int M = j.at("M").get<int>(), N = j.at("N").get<int>(), K = j.at("K").get<int>();
    BeamformingSolution sol = BeamformingSolution::zeros(M, N, K);
    if (j.contains("w")) sol.w.emplace();
    for (int i = 0; i < kStages; ++i) {
      const std::string st = std::to_string(i);
      if (sol.w) (*sol.w)[i].assign(M, std::vector<CVector>(K));
      for (int m = 0; m < M; ++m) {
        sol.R[i][m] = matrix_from(j.at("R").at(st).at(m));
        for (int k = 0; k < K; ++k) {
          sol.W[i][m][k] = matrix_from(j.at("W").at(st).at(m).at(k));
          if (sol.w) (*sol.w)[i][m][k] = matrix_from(j.at("w").at(st).at(m).at(k)).col(0);
        }
      }
    }
    return sol;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("solution_from_json: ") + e.what());
  }
}

}  // namespace isac
