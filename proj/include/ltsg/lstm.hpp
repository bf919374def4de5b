#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ltsg/dynamics.hpp"

namespace ltsg {

inline constexpr int kFeatureDim = 12;
using Feature = Eigen::Matrix<double, kFeatureDim, 1>;

/// One window entry: [X_c; X_d] stamped with its simulation time.
struct WindowRecord {
  double t = 0.0;
  Feature x = Feature::Zero();
};

/// Fixed-capacity history of chief/deputy states, oldest first.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity = 1);

  /// Appends a record; throws OrderingError unless t is strictly increasing.
  void push(double t, const StateVector& chief, const StateVector& deputy);

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return records_.empty(); }
  /// Number of records ever pushed (k + 1 at step k).
  std::size_t history() const noexcept { return pushed_; }

  const WindowRecord& at(std::size_t i) const { return records_.at(i); }
  const WindowRecord& back() const { return records_.back(); }

  /// The most recent n records, oldest first.
  std::vector<Feature> latest(std::size_t n) const;

 private:
  std::size_t capacity_;
  std::size_t pushed_ = 0;
  std::deque<WindowRecord> records_;
};

/// Single-layer LSTM time-shift regressor as exported by the trainer.
/// Gate blocks in w_ih / w_hh / b_* are stacked input, forget, cell, output.
struct LstmModel {
  static constexpr int kFormatVersion = 1;

  int hidden_size = 0;
  int window_size = 1;
  double phase_lo_km = 0.0;
  double phase_hi_km = std::numeric_limits<double>::infinity();
  double t_min = -1.0;  // most negative shift in the training data [s]

  Feature bn_mean = Feature::Zero();
  Feature bn_var = Feature::Ones();
  Feature bn_gamma = Feature::Ones();
  Feature bn_beta = Feature::Zero();
  double bn_eps = 1e-5;

  Eigen::MatrixXd w_ih;  // 4h x 12
  Eigen::MatrixXd w_hh;  // 4h x h
  Eigen::VectorXd b_ih;  // 4h
  Eigen::VectorXd b_hh;  // 4h
  Eigen::RowVectorXd fc_w;  // 1 x h
  double fc_b = 0.0;

  /// Throws ModelFormatError naming the offending field.
  void validate() const;
  bool contains_phase(double rel_distance) const {
    return rel_distance >= phase_lo_km && rel_distance < phase_hi_km;
  }

  static LstmModel from_json(const nlohmann::json& j);
  static LstmModel load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  /// All-zero LSTM/FC weights with identity batch norm (output sigmoid(0)).
  static LstmModel zeros(int hidden_size, int window_size, double t_min,
                         double phase_lo_km = 0.0,
                         double phase_hi_km = std::numeric_limits<double>::infinity());
};

/// Phase-indexed set of models.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<LstmModel> models, double phase_threshold = 1.0);

  /// Loads every *.json file of a directory (sorted by name).
  static ModelRegistry load_directory(const std::filesystem::path& dir);

  void add(LstmModel model);
  const std::vector<LstmModel>& models() const noexcept { return models_; }
  bool empty() const noexcept { return models_.empty(); }
  double phase_threshold() const noexcept { return phase_threshold_; }
  std::size_t max_window() const;

  /// Model whose phase contains rel_distance and whose window fits the
  /// history, preferring the largest window; nullptr if none fits.
  const LstmModel* select(double rel_distance, std::size_t history_len) const;

 private:
  std::vector<LstmModel> models_;
  double phase_threshold_ = 1.0;
};

const LstmModel* select_model(const ModelRegistry& registry,
                              double rel_distance, std::size_t history_len);

/// Normalized prediction in (0, 1) over a sequence (oldest first).
double lstm_forward(const LstmModel& model, std::span<const Feature> sequence);
/// Uses the most recent model.window_size records of the window.
double lstm_forward(const LstmModel& model, const SlidingWindow& window);

/// y in [0,1] -> t_back = t_min (1 - y).
double denormalize(const LstmModel& model, double y);
/// t_back in [t_min, 0] -> y = 1 - t_back / t_min.
double normalize(const LstmModel& model, double t_back);

std::optional<double> predict_shift(const ModelRegistry& registry,
                                    const SlidingWindow& window,
                                    double rel_distance);

Feature make_feature(const StateVector& chief, const StateVector& deputy);

/// Mean squared error plus eta times mean squared positive error.
struct LossBreakdown {
  double mse = 0.0;
  double msrelu = 0.0;
  double total = 0.0;
};
LossBreakdown shift_loss(std::span<const double> pred,
                         std::span<const double> target, double eta);

}  // namespace ltsg
