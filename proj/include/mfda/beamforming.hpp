#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfda/channel.hpp"

namespace mfda {

/// max |h_bob w|^2  s.t.  |g_i w|^2 <= threshold_i,  ||w||^2 <= P_max.
/// Channels are the scaled (path-loss weighted) vectors. A threshold of
/// +infinity drops the constraint; a threshold of 0 forces g_i w = 0.
struct BeamformingProblem {
  ChannelVector h_bob;
  std::vector<ChannelVector> warden_channels;
  std::vector<double> thresholds_w;
  double p_max_w = 0.0;

  int size() const { return h_bob.size(); }
  void validate() const;
};

inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

struct SolverDiagnostics {
  std::string method;
  int newton_steps = 0;
  double duality_gap = 0.0;  ///< absolute, in watts of received power at Bob
  double max_violation = 0.0;
};

struct SdrSolution {
  ComplexMatrix covariance;  ///< W, in watts
  double value_w = 0.0;      ///< tr(H_bob W) after the feasibility rescale
  double dual_bound_w = 0.0;
  bool rank1 = false;        ///< lambda_2 / lambda_1 <= 1e-6
  SolverDiagnostics diagnostics;
};

/// |h_bob w|^2.
double beamforming_objective(const BeamformingProblem& problem, const Beamformer& w);

/// Largest of ||w||^2 / P_max and |g_i w|^2 / threshold_i over the finite
/// positive thresholds. 1 means some constraint is tight.
double max_constraint_ratio(const BeamformingProblem& problem, const Beamformer& w);

/// Semidefinite relaxation solved by a log-barrier method on its dual.
SdrSolution solve_sdr(const BeamformingProblem& problem);

/// Gaussian randomization: n_samples draws from CN(0, W), each scaled onto
/// the binding constraint; the best is kept. A rank-1 W returns its scaled
/// principal eigenvector.
Beamformer randomize(const SdrSolution& sdr, const BeamformingProblem& problem, int n_samples = 1000,
                     std::uint64_t seed = 0);

/// Exact solution of the rank-1 problem: the common phase of w is free, so
/// maximizing Re(h_bob w) over the same constraints is a second-order cone
/// program. Solved with a primal log-barrier method.
Beamformer solve_socp_exact(const BeamformingProblem& problem, SolverDiagnostics* diagnostics = nullptr);

/// w = sqrt(P_max) P h^H / ||P h^H|| with P the projector onto the null space
/// of the stacked warden channels. Throws GeometryError when K >= M, the
/// stacked channels are rank deficient, or Bob's channel lies in their span.
Beamformer nullspace_beamformer(const ChannelVector& h_bob, std::span<const ChannelVector> warden_channels,
                                double p_max_w);

}  // namespace mfda
