#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "prf/model.hpp"
#include "prf/ode.hpp"

namespace prf {

// Complete operator basis for n qubit modes: all 4^n products over the
// tensor factors of {identity, lowering, raising, number}. Element 0 is the
// joint identity. The basis is closed under the adjoint Liouvillian and
// under sandwiching with any mode operator, so moment equations over it are
// exact.
struct ObservableBasis {
  int n_modes = 1;
  int dim = 2;   // Hilbert-space dimension
  int size = 4;  // number of basis elements

  static ObservableBasis build(const JointModel& model);

  // Factor codes per mode: 0 identity, 1 lowering, 2 raising, 3 number.
  std::array<int, 3> digits(int index) const;
  int index_of(const std::array<int, 3>& digits) const;

  int identity_index() const { return 0; }
  int number_index(int mode) const { return 3 * pow4_[mode]; }
  int lowering_index(int mode) const { return 1 * pow4_[mode]; }
  int raising_index(int mode) const { return 2 * pow4_[mode]; }

  // Dense matrix of basis element `index` on the joint space.
  CMat op_matrix(int index) const;

 private:
  std::array<int, 3> pow4_{1, 4, 16};
};

// Expands arbitrary operators in the product basis. The basis spans the full
// operator space, so expansions are exact.
class OperatorExpander {
 public:
  explicit OperatorExpander(const ObservableBasis& basis);

  // Coefficients x with X = sum_j x_j c_j.
  CVec expand(const CMat& x) const;

  // Matrix S with rows S(i,:) = expansion of A * c_i * B. With A = a^dag,
  // B = a this is the sandwich map C_a of the regression machinery:
  // <a^dag c a> = C_a <c>.
  CMat product_map(const CMat& a, const CMat& b) const;

 private:
  const ObservableBasis* basis_;
  std::vector<CMat> ops_;
  Eigen::PartialPivLU<CMat> lu_;
};

// Moment-equation system d<c>/dt = M(t) <c> derived from the master
// equation, with the drive entering linearly: M(t) = M_static +
// pulse(t) * M_drive. Also carries the per-mode sandwich maps.
struct MomentSystem {
  JointModel model;
  ObservableBasis basis;
  CMat m_static, m_drive;
  std::vector<CMat> sandwich;  // C_a per mode
  OperatorExpander expander;

  static MomentSystem build(const JointModel& model);

  CMat moment_matrix(double t) const { return m_static + model.pulse()(t) * m_drive; }

  // out = M(t) * x
  void apply_m(double t, const CVec& x, CVec& out) const {
    out.noalias() = m_static * x;
    double w = model.pulse()(t);
    if (w != 0.0) out.noalias() += w * (m_drive * x);
  }

  CVec ground_moments() const;             // <c> for the joint ground state
  CVec moments_of(const CMat& rho) const;  // Tr(rho c_i)
};

struct MomentTrajectory {
  std::vector<double> times;
  CMat values;  // one column per sample time
  OdeOptions options;
};

// Adaptive propagation of the moment vector with samples taken from the
// continuous extension. When `init` is a physical state (identity component
// 1) the identity component is verified to stay within 1e-8 of 1.
MomentTrajectory propagate_moments(const MomentSystem& sys, const CVec& init,
                                   double t0, double t1,
                                   std::span<const double> sample_times,
                                   const OdeOptions& opt = {});

struct DensityTrajectory {
  std::vector<double> times;
  std::vector<CMat> states;
  OdeOptions options;
};

// Direct master-equation propagation of vec(rho). Trace is verified to be
// preserved to 1e-8 at every sample.
DensityTrajectory propagate_density(const JointModel& model, const CMat& rho0,
                                    double t0, double t1,
                                    std::span<const double> sample_times,
                                    const OdeOptions& opt = {});

}  // namespace prf
