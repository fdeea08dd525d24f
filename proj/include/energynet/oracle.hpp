#pragma once

#include <optional>
#include <vector>

#include "energynet/cost_model.hpp"
#include "energynet/flow.hpp"
#include "energynet/generation.hpp"
#include "energynet/joint.hpp"

namespace energynet {

/// min 1/2 x^T H x + c^T x  subject to  A x = b.
struct EqualityQp {
  Matrix hessian;
  Vector linear;
  Matrix constraints;
  Vector rhs;
};

struct KktSolution {
  Vector primal;
  Vector multipliers;          ///< one per constraint row; zero for dropped rows
  std::vector<int> dropped;    ///< rows found linearly dependent on earlier rows
};

/// Solves [[H, A^T], [A, 0]] [x; nu] = [-c; b] after dropping dependent rows
/// (modified Gram-Schmidt in row order). Throws NumericalError if a dropped
/// row is inconsistent with the others or the reduced system is singular.
KktSolution solve_equality_qp(const EqualityQp& qp, double rank_tol = 1e-10);

/// Closed-form dispatch; no iteration.
GenerationResult solve_generation_centralized(const EnergyNetwork& network, const Vector& p_d);

/// Dense solve of L lambda_v = w with the gauge fixed by 1^T lambda_v = 0.
FlowResult solve_flow_centralized(const EnergyNetwork& network, const Vector& p_g, const Vector& p_d,
                                  double balance_tol = 1e-6);

/// Dense solve of (L_G + L_G^k) lambda_v = w_J with the same gauge.
JointResult solve_joint_centralized(const EnergyNetwork& network, const Vector& p_d);

enum class QpMode { Decoupled, Joint };

struct QpSolution {
  Vector p_g;
  FlowMap flows;
  double lambda = 0.0;
  Vector lambda_v;  ///< shifted so that it sums to zero
  Vector lambda_e;
  int dropped_rows = 0;
};

/// The complete QP over generation and both orientations of every edge flow,
/// with node balance, antisymmetry and (joint mode) global balance rows,
/// solved as one saddle-point system. Decoupled mode solves the generation
/// problem and then the flow problem at the resulting p_g.
QpSolution solve_full_qp(const EnergyNetwork& network, const Vector& p_d, QpMode mode);

}  // namespace energynet
