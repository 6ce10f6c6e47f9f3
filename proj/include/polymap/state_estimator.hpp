#pragma once

// Base + contact-point Kalman filter and the complementary fusion of
// kinematic odometry with a LIO pose stream.
//
// State layout (30):      [p_base(3) | v_base(3) | p_c1 .. p_c8 (8 x 3)]
// Observation layout (56): [Bp_c1 .. Bp_c8 (24) | Bv_c1 .. Bv_c8 (24) | h_c1 .. h_c8 (8)]
//
// Rows of the measurement model:
//   Bp_ci  observes p_ci - p_base
//   Bv_ci  observes -v_base (a foot in stance does not move)
//   h_ci   observes the z component of p_ci
// Relative observations are given in the base frame and rotated into the
// world frame with the IMU orientation before the update; R_meas is taken
// to be expressed in the world frame.

#include "polymap/geometry.hpp"
#include "polymap/io.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace polymap {

inline constexpr int kStateDim = 30;
inline constexpr int kObsDim = 56;
inline constexpr int kContacts = 8;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateCovariance = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObservationVector = Eigen::Matrix<double, kObsDim, 1>;
using ObservationCovariance = Eigen::Matrix<double, kObsDim, kObsDim>;
using MeasurementMatrix = Eigen::Matrix<double, kObsDim, kStateDim>;
using ContactFlags = std::array<bool, kContacts>;

namespace state_index {
inline constexpr int kPosition = 0;
inline constexpr int kVelocity = 3;
inline constexpr int kContact0 = 6;
inline constexpr int contact(int i) { return kContact0 + 3 * i; }
}  // namespace state_index

namespace obs_index {
inline constexpr int relative_position(int i) { return 3 * i; }
inline constexpr int relative_velocity(int i) { return 24 + 3 * i; }
inline constexpr int height(int i) { return 48 + i; }
}  // namespace obs_index

struct EstimatorParams {
  double dt = 0.005;
  StateCovariance Q = StateCovariance::Zero();
  ObservationCovariance R = ObservationCovariance::Zero();
  /// Noise multiplier on the velocity and height rows of a swing foot.
  double swing_inflation = 100.0;
  /// Process noise variance (m^2 per step) on the contact states of a swing
  /// foot, which lets the contact point follow the moving foot.
  double swing_contact_variance = 1e-2;

  /// Diagonal defaults: Q 1e-4 position, 1e-3 velocity, 1e-6 contacts;
  /// R 1e-4 on every row.
  static EstimatorParams defaults(double dt = 0.005);
  /// Throws ConfigError for dt <= 0, asymmetric or indefinite Q / R, or an
  /// inflation factor below 1.
  void validate() const;
};

/// State transition of the constant-velocity model with acceleration input.
StateCovariance transition_matrix(double dt);
Eigen::Matrix<double, kStateDim, 3> input_matrix(double dt);
MeasurementMatrix measurement_matrix();

/// Symmetric within 1e-9 (relative) and min eigenvalue >= -tol.
bool is_symmetric_psd(const Eigen::MatrixXd& m, double tol = 1e-10);

struct KfResult {
  StateVector x;
  StateCovariance P;
  bool skipped = false;  // innovation covariance was singular
};

/// x' = A x + B u, P' = A P A^T + Q. Throws ValidationError if P is not
/// symmetric PSD.
KfResult kf_predict(const StateVector& x, const StateCovariance& P, const Vec3& accel_W,
                    const EstimatorParams& params);

/// Linear update with a Joseph-form covariance. `y` is in the base frame;
/// `R_WB` rotates it into the world frame.
KfResult kf_update(const StateVector& x, const StateCovariance& P, const ObservationVector& y,
                   const ContactFlags& contact, const EstimatorParams& params,
                   const Rotation& R_WB = Rotation());

/// Sequential filter wrapper. Not thread-safe; callers read snapshots.
class ContactKalmanFilter {
 public:
  ContactKalmanFilter(const EstimatorParams& params, const StateVector& x0, const StateCovariance& P0);

  void predict(const Vec3& accel_W, const ContactFlags& contact);
  /// Returns false if the update was skipped.
  bool update(const ObservationVector& y_B, const ContactFlags& contact, const Rotation& R_WB);

  const StateVector& state() const { return x_; }
  const StateCovariance& covariance() const { return P_; }
  Vec3 base_position() const { return x_.segment<3>(state_index::kPosition); }
  Vec3 base_velocity() const { return x_.segment<3>(state_index::kVelocity); }
  std::size_t skipped_updates() const { return skipped_; }

 private:
  EstimatorParams params_;
  StateCovariance A_;
  Eigen::Matrix<double, kStateDim, 3> B_;
  MeasurementMatrix H_;
  StateVector x_;
  StateCovariance P_;
  std::size_t skipped_ = 0;
};

// ---------------------------------------------------------------------------

struct FusionParams {
  double tau = 0.05;  // seconds

  double alpha(double dt) const;
  void validate() const;
};

/// Base pose from a LIO pose and the base-to-lidar extrinsics.
Pose lio_to_base(const Pose& T_W_lidar, const Pose& T_B_lidar);

/// One complementary blend with alpha = tau / (tau + dt) on the kinematic
/// term. Throws ValidationError when dt <= 0 or the two attitudes differ by
/// an angle within 1e-6 of pi.
Pose fuse_pose(const Pose& kinematic, const Pose& lio, const FusionParams& fp, double dt);

/// Recursive complementary filter: the fused pose follows the kinematic
/// increments between LIO samples and is blended towards each LIO sample.
/// The drift of the kinematic source enters only through its increments,
/// so it is corrected at the LIO rate instead of accumulating.
class ComplementaryFusion {
 public:
  explicit ComplementaryFusion(const FusionParams& fp = {});

  /// Feeds a kinematic pose; the first call initialises the fused pose.
  const Pose& on_kinematic(const Pose& kinematic);
  /// Blends towards a LIO base pose; `dt` is the time since the previous
  /// blend. Before any kinematic sample the LIO pose is adopted directly.
  const Pose& on_lio(const Pose& lio, double dt);

  bool initialized() const { return initialized_; }
  const Pose& pose() const { return fused_; }

 private:
  FusionParams fp_;
  bool initialized_ = false;
  bool have_kinematic_ = false;
  Pose last_kinematic_;
  Pose fused_;
};

// ---------------------------------------------------------------------------

enum class OdomSource { Kinematic, Lio, Fused, Truth };

std::string_view to_string(OdomSource s);
OdomSource odom_source_from_string(std::string_view s);

struct OdomSample {
  double stamp = 0.0;
  Pose pose;
  OdomSource source = OdomSource::Kinematic;
};

Json to_json(const OdomSample& s);
OdomSample odom_sample_from_json(const Json& j);
std::vector<OdomSample> read_odom_jsonl(const std::filesystem::path& path);
void write_odom_jsonl(const std::filesystem::path& path, const std::vector<OdomSample>& samples);

struct ReplayResult {
  std::vector<OdomSample> fused;  // one sample per kinematic sample
  std::size_t dropped_late = 0;   // samples whose stamp went backwards
};

/// Replays kinematic and LIO streams in stamp order through a
/// ComplementaryFusion. LIO samples are applied at the first kinematic
/// tick at or after their stamp.
ReplayResult replay_fusion(const std::vector<OdomSample>& kinematic, const std::vector<OdomSample>& lio,
                           const FusionParams& fp);

/// Position error of each stream against the truth, sampled at the truth
/// stamps using the latest sample of each stream at or before that stamp.
/// CSV columns: t, then ex, ey, ez for every stream in `streams`.
void write_drift_csv(const std::filesystem::path& path, const std::vector<OdomSample>& truth,
                     const std::vector<std::pair<std::string, std::vector<OdomSample>>>& streams);

/// Mean square of the residual left after removing a centred moving average
/// of `window` seconds; samples must be uniformly spaced by `dt`.
double high_frequency_power(const std::vector<Vec3>& errors, double dt, double window = 0.5);

}  // namespace polymap
