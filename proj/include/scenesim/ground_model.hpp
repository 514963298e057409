#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "scenesim/rng.hpp"

namespace scenesim {

struct Point3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

struct PointCloud {
  std::string frame_id;
  std::vector<Point3> points;
};

// a*x + b*y + c*z + d = 0 with (a,b,c) unit length and c > 0.
struct Plane {
  double a{0.0};
  double b{0.0};
  double c{1.0};
  double d{0.0};

  double distance(const Point3& p) const { return a * p.x + b * p.y + c * p.z + d; }
  // Tilt of the normal from vertical, radians.
  double tilt() const { return std::acos(std::min(1.0, std::abs(c))); }
};

struct RansacResult {
  Plane plane;
  std::vector<Point3> inliers;
};

inline constexpr std::size_t kMinRansacPoints = 50;
inline constexpr double kMaxGroundTilt = 30.0 * M_PI / 180.0;
inline constexpr double kMinInlierRatio = 0.2;

// Throws Error(kNoGroundFound) when the best consensus covers < 20% of points.
RansacResult ransac_ground(const PointCloud& cloud, int iterations, double inlier_threshold, Rng& rng);

// Squared error above the ground, Huber below it.
double height_loss(double predicted, double observed, double huber_delta = 1.0);
// d(height_loss)/d(predicted).
double height_loss_grad(double predicted, double observed, double huber_delta = 1.0);

// Three fully connected layers 2 -> 64 -> 64 -> 1 with tanh hidden units.
// Inputs are normalised per axis and the output is de-normalised, both with
// statistics stored alongside the weights.
class GroundModel {
 public:
  static constexpr int kHidden = 64;
  static constexpr int kSchemaVersion = 1;

  GroundModel();
  explicit GroundModel(std::uint64_t seed, double huber_delta = 1.0);

  double query(double x, double y) const;
  Eigen::VectorXd query(const Eigen::Matrix2Xd& xy) const;

  // Mean height loss over a batch and its gradient w.r.t. the flattened
  // parameter vector.
  double loss_and_gradient(const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z,
                           Eigen::VectorXd* grad) const;
  double loss(const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z) const;

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);
  std::size_t parameter_count() const;

  void set_normalization(const Eigen::Vector2d& in_mean, const Eigen::Vector2d& in_scale,
                         double out_mean, double out_scale);
  double huber_delta() const { return huber_delta_; }

  nlohmann::json to_json() const;
  static GroundModel from_json(const nlohmann::json& j);

 private:
  Eigen::MatrixXd w1_, w2_, w3_;
  Eigen::VectorXd b1_, b2_, b3_;
  Eigen::Vector2d in_mean_{0.0, 0.0};
  Eigen::Vector2d in_scale_{1.0, 1.0};
  double out_mean_{0.0};
  double out_scale_{1.0};
  double huber_delta_{1.0};
};

struct GroundFitOptions {
  int epochs{2000};
  double learning_rate{1e-3};
  int batch_size{256};
  int ransac_iterations{200};
  double inlier_threshold{0.05};
};

struct GroundFitResult {
  GroundModel model;
  std::vector<double> epoch_loss;  // mean loss per epoch
  std::size_t inliers{0};
  std::size_t frames_used{0};
};

// Pools RANSAC inliers from every frame and trains with Adam on the mean
// height loss. Throws Error(kNoGroundFound) if no frame yields ground.
GroundFitResult fit_ground(const std::vector<PointCloud>& clouds, GroundModel model,
                           const GroundFitOptions& options, Rng& rng);

// Trains on already-extracted ground points.
GroundFitResult fit_ground_points(const std::vector<Point3>& points, GroundModel model,
                                  const GroundFitOptions& options, Rng& rng);

double query_height(const GroundModel& model, double x, double y);

// CSV `frame,x,y,z`; one cloud per distinct frame, in first-seen order.
std::vector<PointCloud> read_point_clouds_csv(const std::filesystem::path& path);

}  // namespace scenesim
