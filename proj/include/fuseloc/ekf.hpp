#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"
#include "fuseloc/motion.hpp"

namespace fuseloc {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Largest innovation-covariance condition number accepted by `correct`.
inline constexpr double kMaxInnovationCondition = 1e12;

struct PoseEstimate {
  Pose mean;
  Mat3 cov = Mat3::Zero();
};

inline Mat3 symmetrize(const Mat3& m) { return 0.5 * (m + m.transpose()); }

/// Measurement noise variances for the correction step (radians, metres).
struct SensorVariances {
  double var_r = 0.03 * 0.03;
  double var_psi = deg2rad(0.25) * deg2rad(0.25);
  double var_phi = deg2rad(0.1) * deg2rad(0.1);
  double var_gamma = deg2rad(0.25) * deg2rad(0.25);
  // When set, each matched line contributes the diagonal of its own fit covariance
  // instead of var_r / var_psi.
  bool use_line_fit_covariance = false;

  /// Compass variance taken as the literal value 0.01 rad^2.
  static SensorVariances raw_compass_preset() {
    SensorVariances sv;
    sv.var_phi = 0.01;
    return sv;
  }

  void validate() const {
    if (!(var_r > 0.0) || !(var_psi > 0.0) || !(var_phi > 0.0) || !(var_gamma > 0.0)) {
      throw InvalidArgument("SensorVariances: all variances must be > 0");
    }
  }
};

/// An observed robot-frame line paired with the map line it was associated with.
struct LineMatch {
  LocalLine observed;
  GlobalLine map_line;
};

/// Exteroceptive readings available at one tick.
struct SensorReadings {
  std::vector<LineMatch> lines;
  std::optional<double> compass;
  std::optional<double> camera;

  bool empty() const { return lines.empty() && !compass && !camera; }
};

/// Stacked measurement for one batch correction.
struct MeasurementBundle {
  VecX z;
  VecX z_hat;
  MatX3 h_jac;
  MatX r_cov;
  std::vector<bool> angle_mask;

  Eigen::Index rows() const { return z.size(); }

  /// Innovation z - z_hat with angular rows wrapped into (-pi, pi].
  VecX innovation() const {
    VecX nu = z - z_hat;
    for (Eigen::Index i = 0; i < nu.size(); ++i) {
      if (angle_mask[static_cast<std::size_t>(i)]) {
        nu(i) = wrap_angle(nu(i));
      }
    }
    return nu;
  }

  void validate() const {
    const Eigen::Index n = z.size();
    if (n == 0) {
      throw NothingToCorrect("MeasurementBundle: no measurement rows");
    }
    if (z_hat.size() != n || h_jac.rows() != n || r_cov.rows() != n || r_cov.cols() != n ||
        static_cast<Eigen::Index>(angle_mask.size()) != n) {
      throw InvalidArgument("MeasurementBundle: row counts disagree");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(r_cov(i, i) > 0.0)) {
        throw InvalidArgument("MeasurementBundle: R diagonal must be > 0");
      }
    }
  }
};

/// Predicted (r, psi) of a map line and its 2x3 Jacobian w.r.t. (x, y, theta).
struct LinePrediction {
  LineTransform t;
  Mat23 h;
};

inline LinePrediction predict_line(const Pose& pose, const GlobalLine& line) {
  LinePrediction out;
  out.t = global_line_to_local(pose, line);
  // d|C|/dC; the C = 0 measure-zero case takes the C >= 0 branch like the transform does.
  const double sign_c = out.t.c >= 0.0 ? 1.0 : -1.0;
  out.h << -sign_c * std::cos(line.beta), -sign_c * std::sin(line.beta), 0.0,
           0.0, 0.0, -1.0;
  return out;
}

/// Moves the estimate by the measured wheel speeds `u`. The wheel-noise variances are
/// evaluated at `noise_speeds`, which defaults to `u`; passing the commanded speeds keeps
/// measurement noise out of Q.
inline PoseEstimate predict(const PoseEstimate& est, const WheelSpeeds& u, const RobotParams& p,
                            const NoiseModel& nm, const std::optional<WheelSpeeds>& noise_speeds = {}) {
  const OdometryDelta d = odometry_delta(u, p);
  const Mat3 a = jacobian_a(est.mean, d);
  const Mat32 w = jacobian_w(est.mean, u, p);
  const Mat2 q = build_q(noise_speeds.value_or(u), nm);
  PoseEstimate out;
  out.mean = propagate_pose(est.mean, d);
  out.cov = symmetrize(a * est.cov * a.transpose() + w * q * w.transpose());
  return out;
}

/// Stacks line, compass and camera rows as [r1, psi1, ..., rN, psiN, phi, gamma].
inline MeasurementBundle assemble_measurement(const PoseEstimate& prior, const SensorReadings& s,
                                              const SensorVariances& sv) {
  if (s.empty()) {
    throw NothingToCorrect("assemble_measurement: no measurements");
  }
  sv.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(2 * s.lines.size()) + (s.compass ? 1 : 0) +
                         (s.camera ? 1 : 0);
  MeasurementBundle mb;
  mb.z.resize(n);
  mb.z_hat.resize(n);
  mb.h_jac = MatX3::Zero(n, 3);
  mb.r_cov = MatX::Zero(n, n);
  mb.angle_mask.assign(static_cast<std::size_t>(n), false);

  Eigen::Index row = 0;
  for (const LineMatch& m : s.lines) {
    const LinePrediction pred = predict_line(prior.mean, m.map_line);
    mb.z(row) = m.observed.r;
    mb.z(row + 1) = m.observed.psi;
    mb.z_hat(row) = pred.t.r;
    mb.z_hat(row + 1) = pred.t.psi;
    mb.h_jac.block<2, 3>(row, 0) = pred.h;
    if (sv.use_line_fit_covariance && m.observed.cov(0, 0) > 0.0 && m.observed.cov(1, 1) > 0.0) {
      mb.r_cov(row, row) = m.observed.cov(0, 0);
      mb.r_cov(row + 1, row + 1) = m.observed.cov(1, 1);
    } else {
      mb.r_cov(row, row) = sv.var_r;
      mb.r_cov(row + 1, row + 1) = sv.var_psi;
    }
    mb.angle_mask[static_cast<std::size_t>(row + 1)] = true;
    row += 2;
  }
  const auto add_heading_row = [&](double value, double var) {
    mb.z(row) = value;
    mb.z_hat(row) = prior.mean.theta;
    mb.h_jac.row(row) << 0.0, 0.0, 1.0;
    mb.r_cov(row, row) = var;
    mb.angle_mask[static_cast<std::size_t>(row)] = true;
    ++row;
  };
  if (s.compass) {
    add_heading_row(*s.compass, sv.var_phi);
  }
  if (s.camera) {
    add_heading_row(*s.camera, sv.var_gamma);
  }
  return mb;
}

inline PoseEstimate correct(const PoseEstimate& prior, const MeasurementBundle& mb) {
  mb.validate();
  const MatX s = mb.h_jac * prior.cov * mb.h_jac.transpose() + mb.r_cov;
  const MatX s_sym = 0.5 * (s + s.transpose());

  Eigen::SelfAdjointEigenSolver<MatX> eig(s_sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxInnovationCondition) {
    throw IllConditionedUpdate("correct: innovation covariance is numerically singular");
  }

  // K = P H^T S^-1, solved as S K^T = H P.
  const MatX3 hp = mb.h_jac * prior.cov;
  const Eigen::Matrix<double, 3, Eigen::Dynamic> k =
      s_sym.partialPivLu().solve(hp).transpose();

  const VecX nu = mb.innovation();
  const Vec3 dx = k * nu;

  PoseEstimate post;
  post.mean = Pose::from_vector(prior.mean.vector() + dx);
  post.cov = symmetrize((Mat3::Identity() - k * mb.h_jac) * prior.cov);
  return post;
}

/// Filter state plus the models it is driven with. One instance per estimator;
/// calls on a single instance must be serialized.
class LocalizationFilter {
 public:
  LocalizationFilter(PoseEstimate initial, RobotParams params, NoiseModel noise,
                     SensorVariances variances)
      : est_(std::move(initial)), params_(params), noise_(noise), variances_(variances) {
    params_.validate();
    variances_.validate();
  }

  const PoseEstimate& estimate() const { return est_; }
  const RobotParams& params() const { return params_; }
  const NoiseModel& noise() const { return noise_; }
  const SensorVariances& variances() const { return variances_; }

  const PoseEstimate& predict(const WheelSpeeds& u, const std::optional<WheelSpeeds>& noise_speeds = {}) {
    est_ = fuseloc::predict(est_, u, params_, noise_, noise_speeds);
    return est_;
  }

  const PoseEstimate& correct(const SensorReadings& readings) {
    if (!readings.empty()) {
      est_ = fuseloc::correct(est_, assemble_measurement(est_, readings, variances_));
    }
    return est_;
  }

  /// One tick: predict with the wheel speeds, then correct if anything was measured.
  const PoseEstimate& step(const WheelSpeeds& u, const SensorReadings& readings = {}) {
    predict(u);
    return correct(readings);
  }

 private:
  PoseEstimate est_;
  RobotParams params_;
  NoiseModel noise_;
  SensorVariances variances_;
};

/// Free-function form of LocalizationFilter::step.
inline PoseEstimate step(const PoseEstimate& est, const WheelSpeeds& u, const RobotParams& p,
                         const NoiseModel& nm, const SensorReadings& readings,
                         const SensorVariances& sv) {
  const PoseEstimate prior = predict(est, u, p, nm);
  if (readings.empty()) {
    return prior;
  }
  return correct(prior, assemble_measurement(prior, readings, sv));
}

/// Normalized estimation error squared; wraps the heading error.
inline double nees(const Pose& truth, const PoseEstimate& est) {
  Vec3 e(truth.x - est.mean.x, truth.y - est.mean.y, wrap_angle(truth.theta - est.mean.theta));
  const Eigen::FullPivLU<Mat3> lu(est.cov);
  if (!lu.isInvertible()) {
    return std::nan("");
  }
  return e.dot(lu.solve(e));
}

}  // namespace fuseloc
