#include "lendscore/models/mlp.hpp"

#include "lendscore/preprocess.hpp"
#include "lendscore/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>

namespace lendscore::models {

using nlohmann::json;

void MlpSpec::validate() const {
  if (hidden.empty()) throw ConfigError("mlp: needs at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("mlp: hidden layer sizes must be >= 1");
  }
  if (epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("mlp: batch_size must be >= 1");
  if (!(validation_split > 0.0 && validation_split < 1.0)) {
    throw ConfigError("mlp: validation_split must lie in (0,1)");
  }
  if (patience < 1) throw ConfigError("mlp: patience must be >= 1");
  if (alpha <= 0.0) throw ConfigError("mlp: alpha must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("mlp: betas must lie in [0,1)");
  }
}

MlpModel::MlpModel(std::vector<Matrix> weights, std::vector<Vector> biases)
    : weights_(std::move(weights)), biases_(std::move(biases)) {
  if (weights_.empty() || weights_.size() != biases_.size()) {
    throw ModelError("mlp: malformed layer stack");
  }
  input_dim_ = static_cast<std::size_t>(weights_.front().cols());
}

MlpModel MlpModel::initialized(std::size_t input_dim, const std::vector<int>& hidden,
                               std::uint64_t seed, bool zero_init) {
  if (input_dim < 1) throw ModelError("mlp: needs at least one input feature");
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(input_dim));
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(1);

  Rng rng(derive_seed(seed, "mlp-init"));
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    Matrix w(fan_out, fan_in);
    if (zero_init) {
      w.setZero();
    } else {
      const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          w(r, c) = rng.uniform(-limit, limit);
        }
      }
    }
    weights.push_back(std::move(w));
    biases.push_back(Vector::Zero(fan_out));
  }
  return MlpModel(std::move(weights), std::move(biases));
}

Vector MlpModel::forward_logits(const Matrix& X) const {
  Matrix a = X;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = (a * weights_[l].transpose()).rowwise() + biases_[l].transpose();
    if (l + 1 < weights_.size()) {
      a = z.cwiseMax(0.0);  // ReLU
    } else {
      a = std::move(z);
    }
  }
  return a.col(0);
}

Vector MlpModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector z = forward_logits(X);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i]);
  return z;
}

double MlpModel::loss_on(const Matrix& X, const Vector& y) const {
  const Vector z = forward_logits(X);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    total += softplus(z[i]) - y[i] * z[i];
  }
  return total / static_cast<double>(z.size());
}

MlpModel::Gradients MlpModel::gradients_on(const Matrix& X, const Vector& y) const {
  const std::size_t layers = weights_.size();
  std::vector<Matrix> activations;  // activations[l] feeds layer l
  activations.reserve(layers + 1);
  activations.push_back(X);
  std::vector<Matrix> zs;
  zs.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = (activations.back() * weights_[l].transpose()).rowwise() + biases_[l].transpose();
    zs.push_back(z);
    if (l + 1 < layers) {
      activations.push_back(z.cwiseMax(0.0));
    } else {
      activations.push_back(std::move(z));
    }
  }

  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  const double n = static_cast<double>(X.rows());
  // dL/dz at the sigmoid output of the mean BCE.
  Matrix delta(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    delta(i, 0) = (sigmoid(zs.back()(i, 0)) - y[i]) / n;
  }
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta.transpose() * activations[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix next = delta * weights_[l];
      // ReLU derivative on the pre-activation of the previous layer.
      delta = next.cwiseProduct((zs[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

std::string MlpModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["layers"] = json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    json layer;
    layer["rows"] = weights_[l].rows();
    layer["cols"] = weights_[l].cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weights_[l].size()));
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
        w.push_back(weights_[l](r, c));
      }
    }
    layer["w"] = std::move(w);
    layer["b"] = std::vector<double>(biases_[l].data(), biases_[l].data() + biases_[l].size());
    j["layers"].push_back(std::move(layer));
  }
  json trace = json::array();
  for (const auto& [train, val] : epoch_trace_) trace.push_back({train, val});
  j["epoch_trace"] = std::move(trace);
  return j.dump();
}

namespace {

struct AdamaxState {
  std::vector<Matrix> m_w, u_w;
  std::vector<Vector> m_b, u_b;
  long long t = 0;

  explicit AdamaxState(const MlpModel& model) {
    for (const auto& w : model.weights()) {
      m_w.push_back(Matrix::Zero(w.rows(), w.cols()));
      u_w.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : model.biases()) {
      m_b.push_back(Vector::Zero(b.size()));
      u_b.push_back(Vector::Zero(b.size()));
    }
  }

  void step(MlpModel& model, const MlpModel::Gradients& g, const MlpSpec& spec) {
    ++t;
    const double lr = spec.alpha / (1.0 - std::pow(spec.beta1, static_cast<double>(t)));
    for (std::size_t l = 0; l < m_w.size(); ++l) {
      m_w[l] = spec.beta1 * m_w[l] + (1.0 - spec.beta1) * g.weights[l];
      u_w[l] = (spec.beta2 * u_w[l]).cwiseMax(g.weights[l].cwiseAbs());
      model.weights()[l] -= lr * (m_w[l].array() / (u_w[l].array() + spec.epsilon)).matrix();
      m_b[l] = spec.beta1 * m_b[l] + (1.0 - spec.beta1) * g.biases[l];
      u_b[l] = (spec.beta2 * u_b[l]).cwiseMax(g.biases[l].cwiseAbs());
      model.biases()[l] -= lr * (m_b[l].array() / (u_b[l].array() + spec.epsilon)).matrix();
    }
  }
};

}  // namespace

ModelPtr fit_mlp(const data::Dataset& ds, const MlpSpec& spec) {
  spec.validate();
  ds.validate();
  if (ds.cols() < 1) throw ModelError("mlp: needs at least one feature");

  // Stratified internal validation split; throws when a class is too small
  // to appear in both parts.
  const auto split =
      preprocess::split_train_test(ds.y, 1.0 - spec.validation_split, derive_seed(spec.seed, "mlp-val"));
  const data::Dataset train = ds.subset(split.train);
  const data::Dataset val = ds.subset(split.test);

  Vector y_train(static_cast<Eigen::Index>(train.rows()));
  for (std::size_t i = 0; i < train.y.size(); ++i) {
    y_train[static_cast<Eigen::Index>(i)] = static_cast<double>(train.y[i]);
  }
  Vector y_val(static_cast<Eigen::Index>(val.rows()));
  for (std::size_t i = 0; i < val.y.size(); ++i) {
    y_val[static_cast<Eigen::Index>(i)] = static_cast<double>(val.y[i]);
  }

  auto model = MlpModel::initialized(ds.cols(), spec.hidden, spec.seed, spec.zero_init);
  AdamaxState opt(model);
  Rng shuffle_rng(derive_seed(spec.seed, "mlp-shuffle"));

  std::vector<std::size_t> order(train.rows());
  std::iota(order.begin(), order.end(), 0);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_w = model.weights();
  std::vector<Vector> best_b = model.biases();
  int since_best = 0;
  std::vector<std::pair<double, double>> trace;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(spec.batch_size));
      const auto m = static_cast<Eigen::Index>(stop - start);
      Matrix xb(m, train.X.cols());
      Vector yb(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        xb.row(i) = train.X.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]));
        yb[i] = y_train[static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)])];
      }
      const double batch_loss = model.loss_on(xb, yb);
      epoch_loss += batch_loss * static_cast<double>(m);
      seen += static_cast<std::size_t>(m);
      auto grads = model.gradients_on(xb, yb);
      opt.step(model, grads, spec);
    }
    epoch_loss /= static_cast<double>(seen);
    const double val_loss = model.loss_on(val.X, y_val);
    if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
      throw ModelError("mlp: non-finite loss at epoch " + std::to_string(epoch) +
                       "; inputs may be unscaled or the step size too large");
    }
    trace.emplace_back(epoch_loss, val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_w = model.weights();
      best_b = model.biases();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= spec.patience) break;
    }
  }

  auto fitted = std::make_unique<MlpModel>(std::move(best_w), std::move(best_b));
  fitted->set_epoch_trace(std::move(trace));
  return fitted;
}

}  // namespace lendscore::models
