#include "polymap/state_estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace polymap {
namespace {

using Gain = Eigen::Matrix<double, kStateDim, kObsDim>;

ObservationVector to_world(const ObservationVector& y, const Rotation& R_WB) {
  ObservationVector out = y;
  const Mat3& r = R_WB.matrix();
  for (int i = 0; i < kContacts; ++i) {
    out.segment<3>(obs_index::relative_position(i)) = r * y.segment<3>(obs_index::relative_position(i));
    out.segment<3>(obs_index::relative_velocity(i)) = r * y.segment<3>(obs_index::relative_velocity(i));
  }
  return out;
}

// R with swing rows scaled by the inflation factor, as D R D with D
// diagonal, so the result stays symmetric PSD.
ObservationCovariance effective_r(const EstimatorParams& p, const ContactFlags& contact) {
  Eigen::Matrix<double, kObsDim, 1> scale = Eigen::Matrix<double, kObsDim, 1>::Ones();
  const double s = std::sqrt(p.swing_inflation);
  bool any = false;
  for (int i = 0; i < kContacts; ++i) {
    if (contact[i]) continue;
    any = true;
    scale.segment<3>(obs_index::relative_velocity(i)).setConstant(s);
    scale(obs_index::height(i)) = s;
  }
  if (!any) return p.R;
  return scale.asDiagonal() * p.R * scale.asDiagonal();
}

bool update_in_place(StateVector& x, StateCovariance& P, const ObservationVector& y_W,
                     const ObservationCovariance& R, const MeasurementMatrix& H) {
  const ObservationVector innovation = y_W - H * x;
  const Eigen::Matrix<double, kStateDim, kObsDim> PHt = P * H.transpose();
  const ObservationCovariance S = H * PHt + R;
  Eigen::LLT<ObservationCovariance> llt(S);
  if (llt.info() != Eigen::Success) return false;
  const Gain K = llt.solve(PHt.transpose()).transpose();
  if (!K.allFinite()) return false;

  x += K * innovation;
  StateCovariance IKH = StateCovariance::Identity();
  IKH.noalias() -= K * H;
  StateCovariance next = IKH * P * IKH.transpose();
  next.noalias() += K * R * K.transpose();
  P = 0.5 * (next + next.transpose());
  return true;
}

}  // namespace

EstimatorParams EstimatorParams::defaults(double dt) {
  EstimatorParams p;
  p.dt = dt;
  p.Q.setZero();
  for (int i = 0; i < 3; ++i) {
    p.Q(state_index::kPosition + i, state_index::kPosition + i) = 1e-4;
    p.Q(state_index::kVelocity + i, state_index::kVelocity + i) = 1e-3;
  }
  for (int i = state_index::kContact0; i < kStateDim; ++i) p.Q(i, i) = 1e-6;
  p.R = ObservationCovariance::Identity() * 1e-4;
  return p;
}

bool is_symmetric_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

void EstimatorParams::validate() const {
  if (!(dt > 0.0)) throw ConfigError("estimator: dt must be positive");
  if (!is_symmetric_psd(Q)) throw ConfigError("estimator: Q must be symmetric positive semi-definite");
  if (!is_symmetric_psd(R)) throw ConfigError("estimator: R must be symmetric positive semi-definite");
  if (!(swing_inflation >= 1.0)) throw ConfigError("estimator: swing_inflation must be >= 1");
  if (!(swing_contact_variance >= 0.0)) throw ConfigError("estimator: swing_contact_variance must be >= 0");
}

StateCovariance transition_matrix(double dt) {
  StateCovariance A = StateCovariance::Identity();
  A.block<3, 3>(state_index::kPosition, state_index::kVelocity) = Mat3::Identity() * dt;
  return A;
}

Eigen::Matrix<double, kStateDim, 3> input_matrix(double dt) {
  Eigen::Matrix<double, kStateDim, 3> B = Eigen::Matrix<double, kStateDim, 3>::Zero();
  B.block<3, 3>(state_index::kPosition, 0) = Mat3::Identity() * (0.5 * dt * dt);
  B.block<3, 3>(state_index::kVelocity, 0) = Mat3::Identity() * dt;
  return B;
}

MeasurementMatrix measurement_matrix() {
  MeasurementMatrix H = MeasurementMatrix::Zero();
  for (int i = 0; i < kContacts; ++i) {
    H.block<3, 3>(obs_index::relative_position(i), state_index::contact(i)) = Mat3::Identity();
    H.block<3, 3>(obs_index::relative_position(i), state_index::kPosition) = -Mat3::Identity();
    H.block<3, 3>(obs_index::relative_velocity(i), state_index::kVelocity) = -Mat3::Identity();
    H(obs_index::height(i), state_index::contact(i) + 2) = 1.0;
  }
  return H;
}

KfResult kf_predict(const StateVector& x, const StateCovariance& P, const Vec3& accel_W,
                    const EstimatorParams& params) {
  if (!(params.dt > 0.0)) throw ConfigError("estimator: dt must be positive");
  if (!is_symmetric_psd(P)) throw ValidationError("kf_predict: covariance is not symmetric PSD");
  const StateCovariance A = transition_matrix(params.dt);
  KfResult r;
  r.x = A * x + input_matrix(params.dt) * accel_W;
  const StateCovariance next = A * P * A.transpose() + params.Q;
  r.P = 0.5 * (next + next.transpose());
  return r;
}

KfResult kf_update(const StateVector& x, const StateCovariance& P, const ObservationVector& y,
                   const ContactFlags& contact, const EstimatorParams& params, const Rotation& R_WB) {
  KfResult r{x, P, false};
  r.skipped = !update_in_place(r.x, r.P, to_world(y, R_WB), effective_r(params, contact), measurement_matrix());
  if (r.skipped) {
    r.x = x;
    r.P = P;
  }
  return r;
}

ContactKalmanFilter::ContactKalmanFilter(const EstimatorParams& params, const StateVector& x0,
                                         const StateCovariance& P0)
    : params_(params),
      A_(transition_matrix(params.dt)),
      B_(input_matrix(params.dt)),
      H_(measurement_matrix()),
      x_(x0),
      P_(P0) {
  params_.validate();
  if (!is_symmetric_psd(P0)) throw ValidationError("ContactKalmanFilter: P0 is not symmetric PSD");
}

void ContactKalmanFilter::predict(const Vec3& accel_W, const ContactFlags& contact) {
  x_ = A_ * x_ + B_ * accel_W;
  StateCovariance next = A_ * P_ * A_.transpose() + params_.Q;
  for (int i = 0; i < kContacts; ++i) {
    if (contact[i]) continue;
    for (int k = 0; k < 3; ++k) next(state_index::contact(i) + k, state_index::contact(i) + k) += params_.swing_contact_variance;
  }
  P_ = 0.5 * (next + next.transpose());
}

bool ContactKalmanFilter::update(const ObservationVector& y_B, const ContactFlags& contact, const Rotation& R_WB) {
  StateVector x = x_;
  StateCovariance P = P_;
  if (!update_in_place(x, P, to_world(y_B, R_WB), effective_r(params_, contact), H_)) {
    ++skipped_;
    return false;
  }
  x_ = x;
  P_ = P;
  return true;
}

}  // namespace polymap
