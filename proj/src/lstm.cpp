#include "ltsg/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "ltsg/errors.hpp"

namespace ltsg {

using nlohmann::json;

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("sliding window capacity must be >= 1");
}

Feature make_feature(const StateVector& chief, const StateVector& deputy) {
  Feature x;
  x << chief.pos, chief.vel, deputy.pos, deputy.vel;
  return x;
}

void SlidingWindow::push(double t, const StateVector& chief,
                         const StateVector& deputy) {
  if (!records_.empty() && !(t > records_.back().t))
    throw OrderingError("window records must have strictly increasing time");
  records_.push_back({t, make_feature(chief, deputy)});
  ++pushed_;
  while (records_.size() > capacity_) records_.pop_front();
}

std::vector<Feature> SlidingWindow::latest(std::size_t n) const {
  n = std::min(n, records_.size());
  std::vector<Feature> out;
  out.reserve(n);
  for (std::size_t i = records_.size() - n; i < records_.size(); ++i)
    out.push_back(records_[i].x);
  return out;
}

// ---------------------------------------------------------------------------
// Model interchange
// ---------------------------------------------------------------------------

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ModelFormatError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ModelFormatError(path + "." + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ModelFormatError(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ModelFormatError(path, "expected an integer");
  return j.get<int>();
}

Eigen::VectorXd vector_of(const json& j, const std::string& path,
                          std::ptrdiff_t expected) {
  if (!j.is_array()) throw ModelFormatError(path, "expected an array");
  if (static_cast<std::ptrdiff_t>(j.size()) != expected)
    throw ModelFormatError(path, "expected " + std::to_string(expected) +
                                     " entries, got " + std::to_string(j.size()));
  Eigen::VectorXd v(expected);
  for (std::ptrdiff_t i = 0; i < expected; ++i)
    v(i) = number(j[static_cast<std::size_t>(i)],
                  path + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd matrix_of(const json& j, const std::string& path,
                          std::ptrdiff_t rows, std::ptrdiff_t cols) {
  if (!j.is_array()) throw ModelFormatError(path, "expected a nested array");
  if (static_cast<std::ptrdiff_t>(j.size()) != rows)
    throw ModelFormatError(path, "expected " + std::to_string(rows) +
                                     " rows, got " + std::to_string(j.size()));
  Eigen::MatrixXd m(rows, cols);
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    m.row(r) = vector_of(j[static_cast<std::size_t>(r)], rp, cols).transpose();
  }
  return m;
}

json to_json_vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json_mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    a.push_back(to_json_vec(m.row(r).transpose()));
  return a;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void LstmModel::validate() const {
  if (hidden_size < 1) throw ModelFormatError("hidden_size", "must be >= 1");
  if (window_size < 1) throw ModelFormatError("window_size", "must be >= 1");
  if (!(t_min < 0.0) || !std::isfinite(t_min))
    throw ModelFormatError("t_min_s", "must be negative and finite");
  if (!(phase_lo_km >= 0.0) || !(phase_hi_km > phase_lo_km))
    throw ModelFormatError("phase_lo_km", "phase interval must satisfy 0 <= lo < hi");
  if (!((bn_var.array() > 0.0).all()))
    throw ModelFormatError("bn.var", "variances must be positive");
  if (!(bn_eps >= 0.0)) throw ModelFormatError("bn.eps", "must be nonnegative");
  const auto g = 4 * hidden_size;
  if (w_ih.rows() != g || w_ih.cols() != kFeatureDim)
    throw ModelFormatError("lstm.w_ih", "dimension mismatch");
  if (w_hh.rows() != g || w_hh.cols() != hidden_size)
    throw ModelFormatError("lstm.w_hh", "dimension mismatch");
  if (b_ih.size() != g) throw ModelFormatError("lstm.b_ih", "dimension mismatch");
  if (b_hh.size() != g) throw ModelFormatError("lstm.b_hh", "dimension mismatch");
  if (fc_w.size() != hidden_size) throw ModelFormatError("fc.w", "dimension mismatch");
  if (!w_ih.allFinite() || !w_hh.allFinite() || !b_ih.allFinite() ||
      !b_hh.allFinite() || !fc_w.allFinite() || !std::isfinite(fc_b) ||
      !bn_mean.allFinite() || !bn_gamma.allFinite() || !bn_beta.allFinite())
    throw ModelFormatError("weights", "non-finite value");
}

LstmModel LstmModel::from_json(const json& j) {
  LstmModel m;
  const int version = integer(field(j, "format_version", "$"), "$.format_version");
  if (version != kFormatVersion)
    throw ModelFormatError("$.format_version",
                           "unsupported version " + std::to_string(version));
  m.hidden_size = integer(field(j, "hidden_size", "$"), "$.hidden_size");
  m.window_size = integer(field(j, "window_size", "$"), "$.window_size");
  if (m.hidden_size < 1) throw ModelFormatError("$.hidden_size", "must be >= 1");
  if (m.window_size < 1) throw ModelFormatError("$.window_size", "must be >= 1");
  m.phase_lo_km = number(field(j, "phase_lo_km", "$"), "$.phase_lo_km");
  const json& hi = field(j, "phase_hi_km", "$");
  m.phase_hi_km = hi.is_null() ? std::numeric_limits<double>::infinity()
                               : number(hi, "$.phase_hi_km");
  m.t_min = number(field(j, "t_min_s", "$"), "$.t_min_s");

  const json& bn = field(j, "bn", "$");
  m.bn_mean = vector_of(field(bn, "mean", "$.bn"), "$.bn.mean", kFeatureDim);
  m.bn_var = vector_of(field(bn, "var", "$.bn"), "$.bn.var", kFeatureDim);
  m.bn_gamma = vector_of(field(bn, "gamma", "$.bn"), "$.bn.gamma", kFeatureDim);
  m.bn_beta = vector_of(field(bn, "beta", "$.bn"), "$.bn.beta", kFeatureDim);
  m.bn_eps = number(field(bn, "eps", "$.bn"), "$.bn.eps");

  const json& lstm = field(j, "lstm", "$");
  const auto g = 4 * m.hidden_size;
  const json& order = field(lstm, "gate_order", "$.lstm");
  if (!order.is_string() || order.get<std::string>() != "ifgo")
    throw ModelFormatError("$.lstm.gate_order", "only \"ifgo\" is supported");
  m.w_ih = matrix_of(field(lstm, "w_ih", "$.lstm"), "$.lstm.w_ih", g, kFeatureDim);
  m.w_hh = matrix_of(field(lstm, "w_hh", "$.lstm"), "$.lstm.w_hh", g, m.hidden_size);
  m.b_ih = vector_of(field(lstm, "b_ih", "$.lstm"), "$.lstm.b_ih", g);
  m.b_hh = vector_of(field(lstm, "b_hh", "$.lstm"), "$.lstm.b_hh", g);

  const json& fc = field(j, "fc", "$");
  m.fc_w = matrix_of(field(fc, "w", "$.fc"), "$.fc.w", 1, m.hidden_size).row(0);
  const json& fb = field(fc, "b", "$.fc");
  if (fb.is_array()) {
    m.fc_b = vector_of(fb, "$.fc.b", 1)(0);
  } else {
    m.fc_b = number(fb, "$.fc.b");
  }
  try {
    m.validate();
  } catch (const ModelFormatError& e) {
    throw ModelFormatError("$." + e.field(), e.what());
  }
  return m;
}

LstmModel LstmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelFormatError(path.string(), "cannot open model file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ModelFormatError("$", path.string() + ": parse error: " + e.what());
  }
  return from_json(j);
}

json LstmModel::to_json() const {
  json j;
  j["format_version"] = kFormatVersion;
  j["hidden_size"] = hidden_size;
  j["window_size"] = window_size;
  j["phase_lo_km"] = phase_lo_km;
  j["phase_hi_km"] = std::isinf(phase_hi_km) ? json(nullptr) : json(phase_hi_km);
  j["t_min_s"] = t_min;
  j["bn"] = {{"mean", to_json_vec(bn_mean)},
             {"var", to_json_vec(bn_var)},
             {"gamma", to_json_vec(bn_gamma)},
             {"beta", to_json_vec(bn_beta)},
             {"eps", bn_eps}};
  j["lstm"] = {{"w_ih", to_json_mat(w_ih)},
               {"w_hh", to_json_mat(w_hh)},
               {"b_ih", to_json_vec(b_ih)},
               {"b_hh", to_json_vec(b_hh)},
               {"gate_order", "ifgo"}};
  j["fc"] = {{"w", to_json_mat(fc_w)}, {"b", fc_b}};
  return j;
}

void LstmModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file: " + path.string());
  out << std::setw(1) << to_json() << '\n';
}

LstmModel LstmModel::zeros(int hidden_size, int window_size, double t_min,
                           double phase_lo_km, double phase_hi_km) {
  LstmModel m;
  m.hidden_size = hidden_size;
  m.window_size = window_size;
  m.t_min = t_min;
  m.phase_lo_km = phase_lo_km;
  m.phase_hi_km = phase_hi_km;
  m.w_ih = Eigen::MatrixXd::Zero(4 * hidden_size, kFeatureDim);
  m.w_hh = Eigen::MatrixXd::Zero(4 * hidden_size, hidden_size);
  m.b_ih = Eigen::VectorXd::Zero(4 * hidden_size);
  m.b_hh = Eigen::VectorXd::Zero(4 * hidden_size);
  m.fc_w = Eigen::RowVectorXd::Zero(hidden_size);
  m.fc_b = 0.0;
  m.bn_var = Feature::Constant(1.0 - m.bn_eps);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

ModelRegistry::ModelRegistry(std::vector<LstmModel> models, double phase_threshold)
    : phase_threshold_(phase_threshold) {
  for (auto& m : models) add(std::move(m));
}

void ModelRegistry::add(LstmModel model) {
  model.validate();
  for (const auto& m : models_) {
    const bool overlap = model.phase_lo_km < m.phase_hi_km &&
                         m.phase_lo_km < model.phase_hi_km;
    if (overlap && m.window_size == model.window_size)
      throw ConfigError("registry models with window " +
                        std::to_string(m.window_size) +
                        " have overlapping phase intervals");
  }
  models_.push_back(std::move(model));
}

ModelRegistry ModelRegistry::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("model directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ModelRegistry reg;
  for (const auto& f : files) {
    try {
      reg.add(LstmModel::load(f));
    } catch (const ModelFormatError& e) {
      throw ModelFormatError(f.filename().string() + ":" + e.field(), e.what());
    }
  }
  if (reg.empty()) throw ConfigError("no model files in " + dir.string());
  return reg;
}

std::size_t ModelRegistry::max_window() const {
  std::size_t w = 1;
  for (const auto& m : models_)
    w = std::max(w, static_cast<std::size_t>(m.window_size));
  return w;
}

const LstmModel* ModelRegistry::select(double rel_distance,
                                       std::size_t history_len) const {
  const LstmModel* best = nullptr;
  for (const auto& m : models_) {
    if (!m.contains_phase(rel_distance)) continue;
    if (static_cast<std::size_t>(m.window_size) > history_len) continue;
    if (!best || m.window_size > best->window_size) best = &m;
  }
  return best;
}

const LstmModel* select_model(const ModelRegistry& registry,
                              double rel_distance, std::size_t history_len) {
  return registry.select(rel_distance, history_len);
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

double lstm_forward(const LstmModel& model, std::span<const Feature> sequence) {
  const auto w = static_cast<std::size_t>(model.window_size);
  if (sequence.size() < w)
    throw ModelFormatError("window_size", "sequence shorter than model window");
  sequence = sequence.subspan(sequence.size() - w);

  const int h = model.hidden_size;
  const Feature scale =
      model.bn_gamma.array() / (model.bn_var.array() + model.bn_eps).sqrt();
  const Eigen::VectorXd bias = model.b_ih + model.b_hh;

  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd z(4 * h);
  for (const Feature& x : sequence) {
    const Feature xn = scale.cwiseProduct(x - model.bn_mean) + model.bn_beta;
    z.noalias() = model.w_ih * xn;
    z.noalias() += model.w_hh * hidden;
    z += bias;
    for (int j = 0; j < h; ++j) {
      const double i_g = sigmoid(z(j));
      const double f_g = sigmoid(z(h + j));
      const double g_g = std::tanh(z(2 * h + j));
      const double o_g = sigmoid(z(3 * h + j));
      cell(j) = f_g * cell(j) + i_g * g_g;
      hidden(j) = o_g * std::tanh(cell(j));
    }
  }
  return sigmoid(model.fc_w.dot(hidden) + model.fc_b);
}

double lstm_forward(const LstmModel& model, const SlidingWindow& window) {
  const auto seq = window.latest(static_cast<std::size_t>(model.window_size));
  return lstm_forward(model, std::span<const Feature>(seq));
}

double denormalize(const LstmModel& model, double y) {
  return model.t_min * (1.0 - y);
}

double normalize(const LstmModel& model, double t_back) {
  return 1.0 - t_back / model.t_min;
}

std::optional<double> predict_shift(const ModelRegistry& registry,
                                    const SlidingWindow& window,
                                    double rel_distance) {
  const LstmModel* m = registry.select(rel_distance, window.history());
  if (!m || window.size() < static_cast<std::size_t>(m->window_size))
    return std::nullopt;
  return denormalize(*m, lstm_forward(*m, window));
}

LossBreakdown shift_loss(std::span<const double> pred,
                         std::span<const double> target, double eta) {
  if (pred.size() != target.size())
    throw DomainError("prediction and target batches differ in size");
  LossBreakdown l;
  if (pred.empty()) return l;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    l.mse += e * e;
    const double pos = std::max(e, 0.0);
    l.msrelu += pos * pos;
  }
  const auto n = static_cast<double>(pred.size());
  l.mse /= n;
  l.msrelu /= n;
  l.total = l.mse + eta * l.msrelu;
  return l;
}

}  // namespace ltsg
