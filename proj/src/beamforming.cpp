#include "mfda/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mfda {

void BeamformingProblem::validate() const {
  const int m = size();
  if (m == 0) throw ConfigError("h_bob", "empty channel");
  if (warden_channels.size() != thresholds_w.size())
    throw ConfigError("thresholds_w", "one threshold per warden channel is required");
  for (std::size_t i = 0; i < warden_channels.size(); ++i) {
    if (warden_channels[i].size() != m)
      throw ConfigError("warden_channels[" + std::to_string(i) + "]", "length differs from h_bob");
    const double t = thresholds_w[i];
    if (std::isnan(t) || t < 0.0) throw ConfigError("thresholds_w[" + std::to_string(i) + "]", "must be >= 0");
  }
  if (!(p_max_w >= 0.0) || !std::isfinite(p_max_w)) throw ConfigError("p_max_w", "must be finite and >= 0");
}

double beamforming_objective(const BeamformingProblem& problem, const Beamformer& w) {
  return received_power(problem.h_bob, w);
}

double max_constraint_ratio(const BeamformingProblem& problem, const Beamformer& w) {
  double ratio = problem.p_max_w > 0.0 ? w.power() / problem.p_max_w : 0.0;
  for (std::size_t i = 0; i < problem.warden_channels.size(); ++i) {
    const double t = problem.thresholds_w[i];
    if (t > 0.0 && std::isfinite(t)) ratio = std::max(ratio, received_power(problem.warden_channels[i], w) / t);
  }
  return ratio;
}

namespace {

// The problem in units where P_max = 1, ||h|| = 1 and every kept constraint
// reads |a_i z|^2 <= 1, restricted to the null space of the zero thresholds
// (z = basis * y).
struct Reduced {
  ComplexMatrix basis;    // M x d, orthonormal columns
  ComplexRowVector h;     // 1 x d
  ComplexMatrix a;        // k x d
  double h_norm2 = 0.0;   // ||h_bob||^2 before normalization
  double scale_w = 0.0;   // P_max * ||h_bob||^2

  int dim() const { return static_cast<int>(basis.cols()); }
  bool trivial() const { return dim() == 0 || h_norm2 == 0.0 || scale_w == 0.0 || h.squaredNorm() == 0.0; }
};

Reduced reduce(const BeamformingProblem& p) {
  p.validate();
  const int m = p.size();
  Reduced r;
  r.h_norm2 = p.h_bob.entries.squaredNorm();
  r.scale_w = p.p_max_w * r.h_norm2;

  std::vector<int> zero;
  std::vector<int> finite;
  for (std::size_t i = 0; i < p.thresholds_w.size(); ++i) {
    if (p.thresholds_w[i] == 0.0)
      zero.push_back(static_cast<int>(i));
    else if (std::isfinite(p.thresholds_w[i]))
      finite.push_back(static_cast<int>(i));
  }

  if (zero.empty()) {
    r.basis = ComplexMatrix::Identity(m, m);
  } else {
    ComplexMatrix z(static_cast<Eigen::Index>(zero.size()), m);
    for (std::size_t i = 0; i < zero.size(); ++i) {
      const auto& row = p.warden_channels[zero[i]].entries;
      const double n = row.norm();
      z.row(static_cast<Eigen::Index>(i)) = n > 0.0 ? ComplexRowVector(row / n) : row;
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(z, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-12 * std::max(1.0, sv(0))) ++rank;
    r.basis = svd.matrixV().rightCols(m - rank);
  }

  if (r.h_norm2 > 0.0) r.h = (p.h_bob.entries / std::sqrt(r.h_norm2)) * r.basis;
  r.a.resize(static_cast<Eigen::Index>(finite.size()), r.dim());
  for (std::size_t i = 0; i < finite.size(); ++i) {
    const double s = std::sqrt(p.p_max_w / p.thresholds_w[finite[i]]);
    r.a.row(static_cast<Eigen::Index>(i)) = s * (p.warden_channels[finite[i]].entries * r.basis);
  }
  return r;
}

Beamformer lift(const Reduced& r, const ComplexVector& y, double p_max) {
  Beamformer w;
  w.weights = std::sqrt(p_max) * (r.basis * y);
  return w;
}

// Scale w onto the boundary of the feasible set when it is outside it.
void clamp_to_feasible(const BeamformingProblem& p, Beamformer& w) {
  const double ratio = max_constraint_ratio(p, w);
  if (ratio > 1.0) w.weights /= std::sqrt(ratio);
}

constexpr double kRelativeGap = 1e-9;
constexpr double kAbsoluteGap = 1e-15;
constexpr double kBarrierGrowth = 10.0;
constexpr int kMaxNewtonSteps = 2000;

// Damped Newton on a self-concordant function: step 1 / (1 + lambda) outside
// the quadratic region, full step inside. `feasible` guards roundoff near the
// boundary by halving.
template <typename Oracle, typename Feasible>
int center(RealVector& x, Oracle&& oracle, Feasible&& feasible, int budget) {
  int steps = 0;
  RealVector g;
  RealMatrix h;
  double previous = std::numeric_limits<double>::infinity();
  while (steps < budget) {
    oracle(x, g, h);
    Eigen::LDLT<RealMatrix> ldlt(h);
    const RealVector dx = -ldlt.solve(g);
    const double lambda2 = -g.dot(dx);
    ++steps;
    if (!(lambda2 >= 0.0) || !dx.allFinite()) break;
    if (lambda2 <= 1e-12) break;
    // Roundoff floor: in the quadratic region lambda^2 must keep shrinking.
    if (lambda2 < 0.0625 && lambda2 > 0.5 * previous) break;
    previous = lambda2;
    const double lambda = std::sqrt(lambda2);
    double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
    RealVector trial = x + alpha * dx;
    int halvings = 0;
    while (!feasible(trial) && halvings < 60) {
      alpha *= 0.5;
      trial = x + alpha * dx;
      ++halvings;
    }
    if (halvings == 60) break;
    x = std::move(trial);
  }
  return steps;
}

// max Re(h z) s.t. ||z||^2 <= 1, |a_i z|^2 <= 1 in real coordinates
// v = [Re z; Im z].
struct SocpResult {
  ComplexVector z;
  int steps = 0;
  double gap = 0.0;
};

SocpResult socp_barrier(const Reduced& r) {
  const int d = r.dim();
  const int n = 2 * d;
  const int k = static_cast<int>(r.a.rows());
  const int constraints = k + 1;

  auto real_rows = [&](const ComplexRowVector& row, RealVector& u, RealVector& w) {
    u.resize(n);
    w.resize(n);
    u << row.real().transpose(), -row.imag().transpose();
    w << row.imag().transpose(), row.real().transpose();
  };
  RealVector c, c_im;
  real_rows(r.h, c, c_im);
  std::vector<RealVector> u(k), w(k);
  for (int i = 0; i < k; ++i) real_rows(r.a.row(i), u[i], w[i]);

  auto slack = [&](const RealVector& v, int i) {
    if (i == k) return 1.0 - v.squaredNorm();
    const double p = u[i].dot(v);
    const double q = w[i].dot(v);
    return 1.0 - p * p - q * q;
  };
  auto feasible = [&](const RealVector& v) {
    for (int i = 0; i <= k; ++i)
      if (!(slack(v, i) > 0.0)) return false;
    return true;
  };

  RealVector v = RealVector::Zero(n);
  double t = static_cast<double>(constraints);
  int steps = 0;
  double gap = constraints / t;
  while (true) {
    auto oracle = [&](const RealVector& x, RealVector& g, RealMatrix& h) {
      g = -t * c;
      h = RealMatrix::Zero(n, n);
      for (int i = 0; i <= k; ++i) {
        const double s = slack(x, i);
        RealVector grad_q;
        if (i == k) {
          grad_q = 2.0 * x;
          h.diagonal().array() += 2.0 / s;
        } else {
          const double p = u[i].dot(x);
          const double q = w[i].dot(x);
          grad_q = 2.0 * (p * u[i] + q * w[i]);
          h.noalias() += (2.0 / s) * (u[i] * u[i].transpose() + w[i] * w[i].transpose());
        }
        g += grad_q / s;
        h.noalias() += (grad_q * grad_q.transpose()) / (s * s);
      }
    };
    steps += center(v, oracle, feasible, kMaxNewtonSteps - steps);
    gap = constraints / t;
    const double value = c.dot(v);
    if (gap <= kRelativeGap * value || gap <= kAbsoluteGap) break;
    if (steps >= kMaxNewtonSteps) throw SolverError("socp: Newton budget exhausted", 0.0, gap);
    t *= kBarrierGrowth;
  }
  SocpResult out;
  out.z.resize(d);
  for (int i = 0; i < d; ++i) out.z(i) = Complex(v(i), v(d + i));
  out.steps = steps;
  out.gap = gap;
  return out;
}

// Dual of the relaxation, min y0 + sum y_i s.t. S(y) = y0 I + sum y_i a_i^H a_i
// - h^H h >= 0, y >= 0, followed by W = S^-1 / t.
struct SdpResult {
  ComplexMatrix w;
  double dual = 0.0;
  double gap = 0.0;
  int steps = 0;
};

SdpResult sdp_dual_barrier(const Reduced& r) {
  const int d = r.dim();
  const int k = static_cast<int>(r.a.rows());
  const int vars = k + 1;
  const ComplexMatrix hh = r.h.adjoint() * r.h;

  auto slack_matrix = [&](const RealVector& y) {
    ComplexMatrix s = -hh;
    s.diagonal().array() += y(0);
    for (int i = 0; i < k; ++i) s.noalias() += y(i + 1) * (r.a.row(i).adjoint() * r.a.row(i));
    return s;
  };
  auto feasible = [&](const RealVector& y) {
    if ((y.array() <= 0.0).any()) return false;
    Eigen::LLT<ComplexMatrix> llt(slack_matrix(y));
    return llt.info() == Eigen::Success;
  };

  RealVector y = RealVector::Ones(vars);
  y(0) = 2.0;
  double t = 1.0;
  int steps = 0;
  const double nu = static_cast<double>(d + vars);
  ComplexMatrix s_inv;
  while (true) {
    auto oracle = [&](const RealVector& x, RealVector& g, RealMatrix& h) {
      Eigen::LLT<ComplexMatrix> llt(slack_matrix(x));
      s_inv = llt.solve(ComplexMatrix::Identity(d, d));
      const ComplexMatrix sa = s_inv * r.a.adjoint();  // d x k
      const ComplexMatrix asa = r.a * sa;              // k x k
      g.resize(vars);
      h.resize(vars, vars);
      g(0) = t - s_inv.trace().real() - 1.0 / x(0);
      h(0, 0) = s_inv.squaredNorm() + 1.0 / (x(0) * x(0));
      for (int i = 0; i < k; ++i) {
        g(i + 1) = t - asa(i, i).real() - 1.0 / x(i + 1);
        h(0, i + 1) = h(i + 1, 0) = sa.col(i).squaredNorm();
        for (int j = 0; j <= i; ++j) h(i + 1, j + 1) = h(j + 1, i + 1) = std::norm(asa(i, j));
        h(i + 1, i + 1) += 1.0 / (x(i + 1) * x(i + 1));
      }
    };
    steps += center(y, oracle, feasible, kMaxNewtonSteps - steps);
    const double gap = nu / t;
    const double dual = y.sum();
    if (gap <= kRelativeGap * dual || gap <= kAbsoluteGap) {
      const ComplexMatrix s = slack_matrix(y);
      Eigen::LLT<ComplexMatrix> llt(s);
      // Two primal candidates, each scaled to feasibility: the central-path
      // point S^-1 / t, and the null vector of S, which the dual pins down far
      // more accurately once S is nearly singular.
      auto feasible_part = [&](ComplexMatrix w) {
        w = 0.5 * (w + w.adjoint()).eval();
        double ratio = w.trace().real();
        for (int i = 0; i < k; ++i) ratio = std::max(ratio, (r.a.row(i) * w * r.a.row(i).adjoint()).value().real());
        if (ratio > 1.0) w /= ratio;
        return w;
      };
      auto value = [&](const ComplexMatrix& w) { return (r.h * w * r.h.adjoint()).value().real(); };
      SdpResult out;
      out.w = feasible_part(llt.solve(ComplexMatrix::Identity(d, d)) / t);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(s);
      const ComplexVector u = eig.eigenvectors().col(0);
      ComplexMatrix rank_one = u * u.adjoint();
      double ratio = 1.0;
      for (int i = 0; i < k; ++i) ratio = std::max(ratio, std::norm((r.a.row(i) * u).value()));
      rank_one /= ratio;
      if (value(rank_one) > value(out.w)) out.w = rank_one;
      out.dual = dual;
      out.gap = gap;
      out.steps = steps;
      return out;
    }
    if (steps >= kMaxNewtonSteps) throw SolverError("sdr: Newton budget exhausted", 0.0, gap);
    t *= kBarrierGrowth;
  }
}

}  // namespace

SdrSolution solve_sdr(const BeamformingProblem& problem) {
  const Reduced r = reduce(problem);
  const int m = problem.size();
  SdrSolution out;
  out.diagnostics.method = "sdr-dual-barrier";
  out.covariance = ComplexMatrix::Zero(m, m);
  if (r.trivial()) {
    out.rank1 = true;
    return out;
  }
  const SdpResult sdp = sdp_dual_barrier(r);
  ComplexMatrix w = problem.p_max_w * (r.basis * sdp.w * r.basis.adjoint());
  w = 0.5 * (w + w.adjoint()).eval();

  // Rescale so every constraint holds exactly.
  double ratio = problem.p_max_w > 0.0 ? w.trace().real() / problem.p_max_w : 0.0;
  for (std::size_t i = 0; i < problem.warden_channels.size(); ++i) {
    const double t = problem.thresholds_w[i];
    if (!(t > 0.0) || !std::isfinite(t)) continue;
    const auto& g = problem.warden_channels[i].entries;
    ratio = std::max(ratio, (g * w * g.adjoint()).value().real() / t);
  }
  out.diagnostics.max_violation = std::max(0.0, ratio - 1.0);
  if (ratio > 1.0) w /= ratio;

  out.covariance = w;
  out.value_w = (problem.h_bob.entries * w * problem.h_bob.entries.adjoint()).value().real();
  out.dual_bound_w = sdp.dual * r.scale_w;
  out.diagnostics.newton_steps = sdp.steps;
  out.diagnostics.duality_gap = sdp.gap * r.scale_w;

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(w, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double l1 = ev(m - 1);
  const double l2 = m > 1 ? std::max(0.0, ev(m - 2)) : 0.0;
  out.rank1 = l1 <= 0.0 || l2 <= 1e-6 * l1;
  return out;
}

Beamformer randomize(const SdrSolution& sdr, const BeamformingProblem& problem, int n_samples,
                     std::uint64_t seed) {
  problem.validate();
  const int m = problem.size();
  Beamformer best;
  best.weights = ComplexVector::Zero(m);
  if (sdr.covariance.rows() != m) throw ConfigError("covariance", "size differs from the problem");

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sdr.covariance);
  RealVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (root(m - 1) == 0.0) return best;

  auto scaled = [&](ComplexVector xi) {
    Beamformer w{std::move(xi)};
    const double ratio = max_constraint_ratio(problem, w);
    if (ratio > 0.0) w.weights /= std::sqrt(ratio);
    return w;
  };

  if (sdr.rank1) return scaled(eig.eigenvectors().col(m - 1) * root(m - 1));

  const ComplexMatrix factor = eig.eigenvectors() * root.asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  double best_value = -1.0;
  ComplexVector zeta(m);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      zeta(i) = Complex(re, im);
    }
    Beamformer w = scaled(factor * zeta);
    const double value = beamforming_objective(problem, w);
    if (value > best_value) {
      best_value = value;
      best = std::move(w);
    }
  }
  return best;
}

Beamformer solve_socp_exact(const BeamformingProblem& problem, SolverDiagnostics* diagnostics) {
  const Reduced r = reduce(problem);
  Beamformer w;
  w.weights = ComplexVector::Zero(problem.size());
  SolverDiagnostics diag;
  diag.method = "socp-barrier";
  if (!r.trivial()) {
    const SocpResult res = socp_barrier(r);
    w = lift(r, res.z, problem.p_max_w);
    diag.newton_steps = res.steps;
    diag.duality_gap = 2.0 * res.gap * r.scale_w;
    const double ratio = max_constraint_ratio(problem, w);
    diag.max_violation = std::max(0.0, ratio - 1.0);
    clamp_to_feasible(problem, w);
    // Present h_bob w as a positive real number.
    const Complex phase = (problem.h_bob.entries * w.weights).value();
    if (std::abs(phase) > 0.0) w.weights *= std::conj(phase) / std::abs(phase);
  }
  if (diagnostics) *diagnostics = diag;
  return w;
}

Beamformer nullspace_beamformer(const ChannelVector& h_bob, std::span<const ChannelVector> warden_channels,
                                double p_max_w) {
  const int m = h_bob.size();
  const int k = static_cast<int>(warden_channels.size());
  if (!(p_max_w >= 0.0)) throw ConfigError("p_max_w", "must be >= 0");
  if (k >= m)
    throw GeometryError("nullspace beamformer needs fewer warden channels than antennas (K = " + std::to_string(k) +
                        ", M = " + std::to_string(m) + ")");
  ComplexVector target = h_bob.entries.adjoint();
  const double h_norm = target.norm();
  if (k > 0) {
    ComplexMatrix stacked(k, m);
    for (int i = 0; i < k; ++i) {
      if (warden_channels[i].size() != m) throw ConfigError("warden_channels", "length differs from h_bob");
      const double n = warden_channels[i].entries.norm();
      if (n == 0.0) throw GeometryError("nullspace beamformer: zero warden channel");
      stacked.row(i) = warden_channels[i].entries / n;
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(stacked, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(k - 1) > 1e-10 * sv(0)))
      throw GeometryError(
          "nullspace beamformer: warden channels are rank deficient; regularize or prune the warden set");
    const ComplexMatrix q = svd.matrixV();
    for (int pass = 0; pass < 2; ++pass) target -= q * (q.adjoint() * target);
  }
  const double n = target.norm();
  if (!(n > 1e-12 * h_norm)) throw GeometryError("zero covert rate achievable: Bob's channel lies in the warden span");
  Beamformer w;
  w.weights = std::sqrt(p_max_w) * target / n;
  return w;
}

}  // namespace mfda
