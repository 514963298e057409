#include "scenesim/ground_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "scenesim/errors.hpp"

namespace scenesim {

RansacResult ransac_ground(const PointCloud& cloud, int iterations, double inlier_threshold, Rng& rng) {
  const auto& pts = cloud.points;
  if (pts.size() < kMinRansacPoints) {
    throw Error(ErrorCode::kNoGroundFound,
                "frame " + cloud.frame_id + " has fewer than 50 points");
  }
  Plane best;
  std::size_t best_count = 0;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t i = rng.index(pts.size());
    std::size_t j = rng.index(pts.size());
    std::size_t k = rng.index(pts.size());
    if (i == j || j == k || i == k) continue;
    const Eigen::Vector3d p0(pts[i].x, pts[i].y, pts[i].z);
    const Eigen::Vector3d p1(pts[j].x, pts[j].y, pts[j].z);
    const Eigen::Vector3d p2(pts[k].x, pts[k].y, pts[k].z);
    Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
    const double norm = n.norm();
    if (norm < 1e-12) continue;
    n /= norm;
    if (n.z() < 0.0) n = -n;
    Plane plane{n.x(), n.y(), n.z(), -n.dot(p0)};
    if (plane.tilt() > kMaxGroundTilt) continue;
    std::size_t count = 0;
    for (const auto& p : pts) {
      if (std::abs(plane.distance(p)) <= inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = plane;
    }
  }
  const double ratio = static_cast<double>(best_count) / static_cast<double>(pts.size());
  if (best_count == 0 || ratio < kMinInlierRatio) {
    throw Error(ErrorCode::kNoGroundFound,
                "no ground plane in frame " + cloud.frame_id + " (best inlier ratio " +
                    std::to_string(ratio) + ")");
  }
  RansacResult result{best, {}};
  for (const auto& p : pts) {
    if (std::abs(best.distance(p)) <= inlier_threshold) result.inliers.push_back(p);
  }
  return result;
}

double height_loss(double predicted, double observed, double huber_delta) {
  const double r = predicted - observed;
  if (predicted > observed) return r * r;
  const double a = std::abs(r);
  return a <= huber_delta ? 0.5 * r * r : huber_delta * (a - 0.5 * huber_delta);
}

double height_loss_grad(double predicted, double observed, double huber_delta) {
  const double r = predicted - observed;
  if (predicted > observed) return 2.0 * r;
  return std::abs(r) <= huber_delta ? r : -huber_delta;
}

GroundModel::GroundModel() : GroundModel(0) {}

GroundModel::GroundModel(std::uint64_t seed, double huber_delta) : huber_delta_(huber_delta) {
  Rng rng(seed);
  auto glorot = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
    }
    return m;
  };
  w1_ = glorot(kHidden, 2);
  w2_ = glorot(kHidden, kHidden);
  w3_ = glorot(1, kHidden);
  b1_ = Eigen::VectorXd::Zero(kHidden);
  b2_ = Eigen::VectorXd::Zero(kHidden);
  b3_ = Eigen::VectorXd::Zero(1);
}

void GroundModel::set_normalization(const Eigen::Vector2d& in_mean, const Eigen::Vector2d& in_scale,
                                    double out_mean, double out_scale) {
  in_mean_ = in_mean;
  in_scale_ = in_scale;
  out_mean_ = out_mean;
  out_scale_ = out_scale;
}

Eigen::VectorXd GroundModel::query(const Eigen::Matrix2Xd& xy) const {
  const Eigen::Matrix2Xd xn =
      (xy.colwise() - in_mean_).array().colwise() / in_scale_.array();
  const Eigen::MatrixXd h1 = ((w1_ * xn).colwise() + b1_).array().tanh();
  const Eigen::MatrixXd h2 = ((w2_ * h1).colwise() + b2_).array().tanh();
  const Eigen::RowVectorXd out = (w3_ * h2).array() + b3_(0);
  return (out.array() * out_scale_ + out_mean_).transpose();
}

double GroundModel::query(double x, double y) const {
  Eigen::Matrix2Xd xy(2, 1);
  xy << x, y;
  return query(xy)(0);
}

double GroundModel::loss(const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z) const {
  const Eigen::VectorXd pred = query(xy);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += height_loss(pred(i), z(i), huber_delta_);
  return total / static_cast<double>(z.size());
}

double GroundModel::loss_and_gradient(const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z,
                                      Eigen::VectorXd* grad) const {
  const Eigen::Index n = xy.cols();
  const Eigen::Matrix2Xd xn =
      (xy.colwise() - in_mean_).array().colwise() / in_scale_.array();
  const Eigen::MatrixXd h1 = ((w1_ * xn).colwise() + b1_).array().tanh();
  const Eigen::MatrixXd h2 = ((w2_ * h1).colwise() + b2_).array().tanh();
  const Eigen::RowVectorXd out = (w3_ * h2).array() + b3_(0);

  double total = 0.0;
  Eigen::RowVectorXd g_out(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pred = out_mean_ + out_scale_ * out(i);
    total += height_loss(pred, z(i), huber_delta_);
    g_out(i) = height_loss_grad(pred, z(i), huber_delta_) * out_scale_ * inv_n;
  }
  if (grad) {
    const Eigen::MatrixXd g_w3 = g_out * h2.transpose();
    const double g_b3 = g_out.sum();
    const Eigen::MatrixXd g_a2 = (w3_.transpose() * g_out).array() * (1.0 - h2.array().square());
    const Eigen::MatrixXd g_w2 = g_a2 * h1.transpose();
    const Eigen::VectorXd g_b2 = g_a2.rowwise().sum();
    const Eigen::MatrixXd g_a1 = (w2_.transpose() * g_a2).array() * (1.0 - h1.array().square());
    const Eigen::MatrixXd g_w1 = g_a1 * xn.transpose();
    const Eigen::VectorXd g_b1 = g_a1.rowwise().sum();

    grad->resize(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index o = 0;
    auto put = [&](const Eigen::MatrixXd& m) {
      grad->segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      o += m.size();
    };
    put(g_w1);
    put(g_b1);
    put(g_w2);
    put(g_b2);
    put(g_w3);
    (*grad)(o) = g_b3;
  }
  return total * inv_n;
}

std::size_t GroundModel::parameter_count() const {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + b3_.size());
}

Eigen::VectorXd GroundModel::parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    theta.segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    o += m.size();
  };
  put(w1_);
  put(b1_);
  put(w2_);
  put(b2_);
  put(w3_);
  put(b3_);
  return theta;
}

void GroundModel::set_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count()) {
    throw Error(ErrorCode::kValidation, "ground model parameter count mismatch");
  }
  Eigen::Index o = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = theta.segment(o, m.size());
    o += m.size();
  };
  take(w1_);
  take(b1_);
  take(w2_);
  take(b2_);
  take(w3_);
  take(b3_);
}

nlohmann::json GroundModel::to_json() const {
  const Eigen::VectorXd theta = parameters();
  return {{"schema_version", kSchemaVersion},
          {"architecture", {2, kHidden, kHidden, 1}},
          {"activation", "tanh"},
          {"huber_delta", huber_delta_},
          {"input_mean", {in_mean_.x(), in_mean_.y()}},
          {"input_scale", {in_scale_.x(), in_scale_.y()}},
          {"output_mean", out_mean_},
          {"output_scale", out_scale_},
          {"parameters", std::vector<double>(theta.data(), theta.data() + theta.size())}};
}

GroundModel GroundModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::kParse, "unsupported ground model schema version");
    }
    GroundModel m(0, j.at("huber_delta").get<double>());
    const auto mean = j.at("input_mean").get<std::vector<double>>();
    const auto scale = j.at("input_scale").get<std::vector<double>>();
    m.set_normalization({mean.at(0), mean.at(1)}, {scale.at(0), scale.at(1)},
                        j.at("output_mean").get<double>(), j.at("output_scale").get<double>());
    const auto params = j.at("parameters").get<std::vector<double>>();
    m.set_parameters(Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("ground model JSON: ") + e.what());
  }
}

GroundFitResult fit_ground_points(const std::vector<Point3>& points, GroundModel model,
                                  const GroundFitOptions& options, Rng& rng) {
  if (points.empty()) throw Error(ErrorCode::kNoGroundFound, "no ground points to fit");
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::Matrix2Xd xy(2, n);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xy(0, i) = points[static_cast<std::size_t>(i)].x;
    xy(1, i) = points[static_cast<std::size_t>(i)].y;
    z(i) = points[static_cast<std::size_t>(i)].z;
  }
  const Eigen::Vector2d mean = xy.rowwise().mean();
  Eigen::Vector2d scale = ((xy.colwise() - mean).array().square().rowwise().mean()).sqrt();
  for (int k = 0; k < 2; ++k) {
    if (scale(k) < 1e-9) scale(k) = 1.0;
  }
  const double z_mean = z.mean();
  double z_scale = std::sqrt((z.array() - z_mean).square().mean());
  if (z_scale < 1e-9) z_scale = 1.0;
  model.set_normalization(mean, scale, z_mean, z_scale);

  GroundFitResult result{model, {}, points.size(), 0};
  Eigen::VectorXd theta = model.parameters();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index batch = std::max(1, options.batch_size);
  Eigen::Matrix2Xd bxy(2, batch);
  Eigen::VectorXd bz(batch);
  Eigen::VectorXd grad;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double epoch_total = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min(batch, n - start);
      bxy.resize(2, count);
      bz.resize(count);
      for (Eigen::Index k = 0; k < count; ++k) {
        const Eigen::Index idx = order[static_cast<std::size_t>(start + k)];
        bxy.col(k) = xy.col(idx);
        bz(k) = z(idx);
      }
      model.set_parameters(theta);
      epoch_total += model.loss_and_gradient(bxy, bz, &grad) * static_cast<double>(count);
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * grad;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * grad.cwiseProduct(grad);
      const Eigen::VectorXd m1_hat = m1 / (1.0 - beta1_t);
      const Eigen::VectorXd m2_hat = m2 / (1.0 - beta2_t);
      theta -= options.learning_rate * (m1_hat.array() / (m2_hat.array().sqrt() + kEps)).matrix();
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(n));
  }
  model.set_parameters(theta);
  result.model = model;
  return result;
}

GroundFitResult fit_ground(const std::vector<PointCloud>& clouds, GroundModel model,
                           const GroundFitOptions& options, Rng& rng) {
  std::vector<Point3> pooled;
  std::size_t frames = 0;
  for (const auto& cloud : clouds) {
    try {
      auto r = ransac_ground(cloud, options.ransac_iterations, options.inlier_threshold, rng);
      pooled.insert(pooled.end(), r.inliers.begin(), r.inliers.end());
      ++frames;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoGroundFound) throw;
    }
  }
  if (frames == 0) throw Error(ErrorCode::kNoGroundFound, "RANSAC found no ground in any frame");
  GroundFitResult result = fit_ground_points(pooled, std::move(model), options, rng);
  result.frames_used = frames;
  return result;
}

double query_height(const GroundModel& model, double x, double y) { return model.query(x, y); }

std::vector<PointCloud> read_point_clouds_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open point cloud " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "empty point cloud file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,x,y,z") {
    throw Error(ErrorCode::kParse, path.string() + " must start with header frame,x,y,z");
  }
  std::vector<PointCloud> clouds;
  std::map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::string frame, xs, ys, zs;
    if (!std::getline(ss, frame, ',') || !std::getline(ss, xs, ',') || !std::getline(ss, ys, ',') ||
        !std::getline(ss, zs)) {
      throw Error(ErrorCode::kParse, path.string() + ": malformed row " + std::to_string(row));
    }
    Point3 p;
    try {
      p = {std::stod(xs), std::stod(ys), std::stod(zs)};
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, path.string() + ": non-numeric value on row " + std::to_string(row));
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorCode::kParse, path.string() + ": non-finite value on row " + std::to_string(row));
    }
    auto [it, inserted] = index.emplace(frame, clouds.size());
    if (inserted) clouds.push_back({frame, {}});
    clouds[it->second].points.push_back(p);
  }
  return clouds;
}

}  // namespace scenesim
