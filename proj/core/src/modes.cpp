#include "pentrap/modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pentrap/forces.hpp"

namespace pentrap {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

MatrixXd LinearizedModel::lorentz() const {
  const int n = n_ions();
  MatrixXd l = MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    l(2 * j, 2 * j + 1) = omega_c_prime;
    l(2 * j + 1, 2 * j) = -omega_c_prime;
  }
  return l;
}

MatrixXd LinearizedModel::energy_matrix() const {
  const int n = n_ions();
  MatrixXd e = MatrixXd::Zero(4 * n, 4 * n);
  e.topLeftCorner(2 * n, 2 * n) = k_perp;
  e.bottomRightCorner(2 * n, 2 * n).setIdentity();
  return e;
}

LinearizedModel build_linearized_model(const EquilibriumConfiguration& eq,
                                       const System& sys) {
  if (eq.n() != sys.n())
    throw ValidationError("build_linearized_model: equilibrium size mismatch");

  LinearizedModel model;
  model.equilibrium_positions = eq.positions;
  model.omega_c_prime = sys.sf.c_prime;
  model.k_perp = planar_hessian_scaled(eq.positions, sys);
  model.k_par = axial_hessian_scaled(eq.positions, sys);

  Eigen::LLT<MatrixXd> llt_perp(model.k_perp);
  if (llt_perp.info() != Eigen::Success)
    throw NotPositiveDefinite("build_linearized_model: k_perp not positive definite");
  Eigen::LLT<MatrixXd> llt_par(model.k_par);
  if (llt_par.info() != Eigen::Success)
    throw NotPositiveDefinite("build_linearized_model: k_par not positive definite");
  return model;
}

Eigen::MatrixXd axial_stiffness(const std::vector<Vec3>& planar_positions,
                                const System& sys) {
  return axial_hessian_scaled(planar_positions, sys);
}

DrumheadModes drumhead_modes_of(const MatrixXd& k_par) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(k_par);
  if (solver.info() != Eigen::Success)
    throw NotPositiveDefinite("drumhead_modes: eigensolver failed");
  const int n = static_cast<int>(k_par.rows());

  DrumheadModes modes;
  modes.frequencies.resize(n);
  modes.eigenvectors.resize(n, n);
  // Eigen returns ascending eigenvalues; we want descending frequencies.
  for (int i = 0; i < n; ++i) {
    const double lambda = solver.eigenvalues()(n - 1 - i);
    if (lambda <= 0.0)
      throw NotPositiveDefinite("drumhead_modes: non-positive axial eigenvalue");
    modes.frequencies(i) = std::sqrt(lambda);
    VectorXd v = solver.eigenvectors().col(n - 1 - i);
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    modes.eigenvectors.col(i) = v;
  }
  return modes;
}

DrumheadModes drumhead_modes(const LinearizedModel& model) {
  return drumhead_modes_of(model.k_par);
}

InPlaneModes inplane_modes(const LinearizedModel& model, bool zero_lorentz) {
  const int n = model.n_ions();
  const int d = 2 * n;
  const MatrixXd l = zero_lorentz ? MatrixXd::Zero(d, d) : model.lorentz();

  // E = C C^T with C = diag(chol(K_perp), I). The generalized problem
  // D_H u = w E u becomes the standard Hermitian problem M w' = w w' with
  // M = C^-1 D_H C^-T and u = C^-T w'.
  Eigen::LLT<MatrixXd> llt(model.k_perp);
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure("inplane_modes: energy matrix not positive definite");
  const MatrixXd ck = llt.matrixL();

  // D_H = i S with S = [[0, K], [-K, L]] real antisymmetric. Then
  // C^-1 S C^-T = [[0, Lk^T], [-Lk, L]] since C^-1 K = Lk^T and K C^-T = Lk.
  MatrixXd s_reduced = MatrixXd::Zero(2 * d, 2 * d);
  s_reduced.topRightCorner(d, d) = ck.transpose();
  s_reduced.bottomLeftCorner(d, d) = -ck;
  s_reduced.bottomRightCorner(d, d) = l;

  const MatrixXcd m =
      std::complex<double>(0.0, 1.0) * s_reduced.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success)
    throw FactorizationFailure("inplane_modes: Hermitian eigensolver failed");

  const MatrixXcd ck_c = ck.cast<std::complex<double>>();
  const MatrixXcd k_c = model.k_perp.cast<std::complex<double>>();

  // Keep the 2N positive eigenvalues (ascending already in Eigen's output).
  InPlaneModes modes;
  modes.n = n;
  modes.frequencies.resize(d);
  modes.eigenvectors.resize(2 * d, d);
  modes.energy_norms.resize(d);

  int out = 0;
  for (int i = 0; i < 2 * d && out < d; ++i) {
    const double w = solver.eigenvalues()(i);
    if (w <= 0.0) continue;
    VectorXcd u = solver.eigenvectors().col(i);
    // u = C^-T w': solve the triangular system on the position block.
    VectorXcd upos = u.head(d);
    ck_c.transpose().triangularView<Eigen::Upper>().solveInPlace(upos);
    VectorXcd full(2 * d);
    full.head(d) = upos;
    full.tail(d) = u.tail(d);

    // <u|E|u> = |w'|^2 = 1 for a unit solver vector; renormalize anyway and
    // fix the phase by the largest-magnitude position component.
    const double norm2 = upos.dot(k_c * upos).real() + u.tail(d).squaredNorm();
    full /= std::sqrt(norm2);
    // Phase gauge: lowest-index position component within rounding of the
    // largest magnitude becomes real positive (stable under exact ties).
    const double mag_max = full.head(d).cwiseAbs().maxCoeff();
    int imax = 0;
    while (std::abs(full(imax)) < (1.0 - 1e-12) * mag_max) ++imax;
    const std::complex<double> phase = full(imax) / std::abs(full(imax));
    full /= phase;

    modes.frequencies(out) = w;
    modes.eigenvectors.col(out) = full;
    ++out;
  }
  if (out != d)
    throw FactorizationFailure("inplane_modes: expected 2N positive eigenvalues");

  // Recorded diagnostics: E-norms, eigen-residuals, branch gap.
  const MatrixXcd e_c = model.energy_matrix().cast<std::complex<double>>();
  MatrixXcd d_h(2 * d, 2 * d);
  {
    MatrixXd s = MatrixXd::Zero(2 * d, 2 * d);
    s.topRightCorner(d, d) = model.k_perp;
    s.bottomLeftCorner(d, d) = -model.k_perp;
    s.bottomRightCorner(d, d) = l;
    d_h = std::complex<double>(0.0, 1.0) * s.cast<std::complex<double>>();
  }
  double max_residual = 0.0;
  for (int i = 0; i < d; ++i) {
    const VectorXcd u = modes.eigenvectors.col(i);
    const VectorXcd eu = e_c * u;
    modes.energy_norms(i) = u.dot(eu).real();
    const double res = (d_h * u - modes.frequencies(i) * eu).norm() / eu.norm();
    max_residual = std::max(max_residual, res);
  }
  modes.max_eigen_residual = max_residual;

  const double exb_bandwidth = modes.frequencies(n - 1) - modes.frequencies(0);
  const double gap = modes.frequencies(n) - modes.frequencies(n - 1);
  modes.spectral_gap_ratio = exb_bandwidth > 0.0 ? gap / exb_bandwidth
                                                 : std::numeric_limits<double>::infinity();
  return modes;
}

double single_ion_omega_plus(const ScaledFrequencies& sf) {
  return 0.5 * (std::sqrt(sf.c_prime * sf.c_prime + 4.0 * sf.perp * sf.perp) +
                sf.c_prime);
}

double single_ion_omega_minus(const ScaledFrequencies& sf) {
  return 0.5 * (std::sqrt(sf.c_prime * sf.c_prime + 4.0 * sf.perp * sf.perp) -
                sf.c_prime);
}

}  // namespace pentrap
