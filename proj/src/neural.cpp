#include "prolearn/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace prolearn {

void embed_time(double t, int d, double* out) {
  int half = d / 2;
  for (int i = 1; i <= half; ++i) {
    double a = std::numbers::pi * t / i;
    out[i - 1] = std::sin(a);
    out[half + i - 1] = std::cos(a);
  }
}

std::vector<double> embed_time(double t, const TimeEmbeddingConfig& cfg) {
  if (cfg.d < 0 || cfg.d % 2 != 0) throw std::invalid_argument("time embedding dimension must be even");
  std::vector<double> out(cfg.d);
  embed_time(t, cfg.d, out.data());
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

MlpParams MlpParams::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  MlpParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1) throw std::invalid_argument("layer sizes must be positive");
    p.layers.push_back({Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]), Eigen::VectorXd::Zero(sizes[l + 1])});
  }
  return p;
}

MlpParams MlpParams::init_uniform(const std::vector<int>& sizes, Rng& rng) {
  MlpParams p = zeros(sizes);
  for (auto& layer : p.layers) {
    double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    // Fill order is fixed (column-major weights, then bias) for reproducibility.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bound, bound);
  }
  return p;
}

std::vector<int> MlpParams::sizes() const {
  std::vector<int> s{input_dim()};
  for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
  std::size_t k = 0;
  for (auto& l : layers) {
    std::copy_n(flat.data() + k, l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(flat.data() + k, l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward / backward

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != params.input_dim()) throw std::invalid_argument("input dimension does not match the network");
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const MlpParams& params, std::span<const double> input) {
  Eigen::Map<const Eigen::MatrixXd> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return forward(params, Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    double m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

namespace {

void check_targets(std::span<const int> targets, Eigen::Index n, int classes) {
  if (targets.empty()) throw std::invalid_argument("empty batch");
  if (static_cast<Eigen::Index>(targets.size()) != n) throw std::invalid_argument("one target per input column is required");
  for (int y : targets) {
    if (y < 0 || y >= classes) throw std::invalid_argument("target out of range");
  }
}

double mean_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> targets) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    double m = logits.col(j).maxCoeff();
    double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    acc += lse - logits(targets[j], j);
  }
  return acc / static_cast<double>(logits.cols());
}

}  // namespace

double loss(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
            double weight_decay) {
  check_targets(targets, inputs.cols(), params.output_dim());
  return mean_cross_entropy(forward(params, inputs), targets) + 0.5 * weight_decay * params.squared_norm();
}

LossGradient gradient(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
                      double weight_decay) {
  LossGradient out;
  gradient(params, inputs, targets, weight_decay, out);
  return out;
}

void gradient(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
              double weight_decay, LossGradient& out) {
  check_targets(targets, inputs.cols(), params.output_dim());
  if (inputs.rows() != params.input_dim()) throw std::invalid_argument("input dimension does not match the network");
  const std::size_t n_layers = params.layers.size();
  const auto batch = static_cast<double>(inputs.cols());

  // acts[l] is the input to layer l; acts[0] aliases `inputs`.
  std::vector<Eigen::MatrixXd> acts(n_layers);
  const Eigen::MatrixXd* in = &inputs;
  Eigen::MatrixXd logits;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * *in;
    z.colwise() += layer.bias;
    if (l + 1 < n_layers) {
      acts[l + 1] = z.cwiseMax(0.0);
      in = &acts[l + 1];
    } else {
      logits = std::move(z);
    }
  }
  if (!logits.allFinite()) throw std::domain_error("non-finite activations");

  out.loss = mean_cross_entropy(logits, targets) + 0.5 * weight_decay * params.squared_norm();

  Eigen::MatrixXd delta = softmax(logits);
  for (Eigen::Index j = 0; j < delta.cols(); ++j) delta(targets[j], j) -= 1.0;
  delta /= batch;

  out.grad.layers.resize(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = params.layers[l];
    const Eigen::MatrixXd& a_in = l == 0 ? inputs : acts[l];
    auto& g = out.grad.layers[l];
    g.weight.noalias() = delta * a_in.transpose();
    g.bias = delta.rowwise().sum();
    g.weight += weight_decay * layer.weight;
    g.bias += weight_decay * layer.bias;
    if (l > 0) {
      Eigen::MatrixXd back = layer.weight.transpose() * delta;
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
}

// ---------------------------------------------------------------------------
// Training

double cosine_lr(const TrainConfig& cfg, int epoch) {
  if (cfg.epochs <= 1) return cfg.learning_rate;
  double floor = cfg.learning_rate * cfg.lr_floor_fraction;
  double frac = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return floor + (cfg.learning_rate - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

TrainingDiverged::TrainingDiverged(int epoch, double loss_value)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                         std::to_string(loss_value) + ")"),
      epoch_(epoch) {}

Eigen::MatrixXd design_matrix(const Realization& data, ErmMode mode, const TimeEmbeddingConfig& embed) {
  if (embed.d < 0 || embed.d % 2 != 0) throw std::invalid_argument("time embedding dimension must be even");
  int extra = mode == ErmMode::prospective ? embed.d : 0;
  Eigen::MatrixXd x(data.dim + extra, static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto in = data.input(i);
    auto j = static_cast<Eigen::Index>(i);
    for (int k = 0; k < data.dim; ++k) x(k, j) = in[k];
    if (extra > 0) embed_time(static_cast<double>(data.time_of(i)), embed.d, &x(data.dim, j));
  }
  return x;
}

namespace {

std::vector<int> layer_sizes(int input_dim, const std::vector<int>& hidden, int classes) {
  std::vector<int> s{input_dim};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(classes);
  return s;
}

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
}

}  // namespace

TrainResult fit_mlp(const Eigen::MatrixXd& inputs, std::span<const int> targets, int classes, const TrainConfig& cfg) {
  validate_train_config(cfg);
  check_targets(targets, inputs.cols(), classes);
  Rng init = Rng::stream(cfg.seed, StreamTag::init);
  TrainResult out;
  out.params = MlpParams::init_uniform(layer_sizes(static_cast<int>(inputs.rows()), cfg.hidden, classes), init);
  MlpParams velocity = MlpParams::zeros(out.params.sizes());

  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<int> batch_targets;
  Eigen::MatrixXd batch_inputs;
  LossGradient lg;  // reused so the big weight gradients are not reallocated every step

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cosine_lr(cfg, epoch);
    Rng shuffle = Rng::stream(cfg.seed, StreamTag::shuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const Eigen::Index> idx(order.data() + start, end - start);
      batch_inputs = inputs(Eigen::all, idx);
      batch_targets.clear();
      for (auto i : idx) batch_targets.push_back(targets[static_cast<std::size_t>(i)]);

      try {
        gradient(out.params, batch_inputs, batch_targets, cfg.weight_decay, lg);
      } catch (const std::domain_error&) {
        throw TrainingDiverged(epoch, std::numeric_limits<double>::quiet_NaN());
      }
      if (!std::isfinite(lg.loss)) throw TrainingDiverged(epoch, lg.loss);
      epoch_loss += lg.loss;
      ++batches;

      for (std::size_t l = 0; l < out.params.layers.size(); ++l) {
        auto& p = out.params.layers[l];
        auto& v = velocity.layers[l];
        const auto& g = lg.grad.layers[l];
        if (cfg.momentum > 0.0) {
          v.weight = cfg.momentum * v.weight + g.weight;
          v.bias = cfg.momentum * v.bias + g.bias;
          p.weight -= lr * (g.weight + cfg.momentum * v.weight);
          p.bias -= lr * (g.bias + cfg.momentum * v.bias);
        } else {
          p.weight -= lr * g.weight;
          p.bias -= lr * g.bias;
        }
      }
    }
    out.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return out;
}

namespace {

int argmax_column(const Eigen::MatrixXd& logits, Eigen::Index j, Rng& tiebreak) {
  if (logits.rows() == 2) return argmax2(logits(0, j), logits(1, j), tiebreak);
  double best = logits.col(j).maxCoeff();
  std::vector<int> ties;
  for (Eigen::Index k = 0; k < logits.rows(); ++k) {
    if (logits(k, j) == best) ties.push_back(static_cast<int>(k));
  }
  return ties.size() == 1 ? ties[0] : ties[static_cast<std::size_t>(tiebreak.uniform_int(static_cast<int>(ties.size())))];
}

class MlpPredictor final : public Predictor {
 public:
  MlpPredictor(MlpParams params, ErmMode mode, TimeEmbeddingConfig embed)
      : params_(std::move(params)), mode_(mode), embed_(embed) {}

  int predict(long t, std::span<const double> x, Rng& tiebreak) const override {
    long times[1] = {t};
    int out[1];
    predict_batch(times, x, static_cast<int>(x.size()), tiebreak, out);
    return out[0];
  }

  void predict_batch(std::span<const long> times, std::span<const double> inputs, int dim, Rng& tiebreak,
                     std::span<int> out) const override {
    int extra = mode_ == ErmMode::prospective ? embed_.d : 0;
    const std::size_t chunk = 4096;
    Eigen::MatrixXd x;
    for (std::size_t start = 0; start < times.size(); start += chunk) {
      std::size_t end = std::min(times.size(), start + chunk);
      x.resize(dim + extra, static_cast<Eigen::Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        auto j = static_cast<Eigen::Index>(i - start);
        for (int k = 0; k < dim; ++k) x(k, j) = inputs[i * dim + k];
        if (extra > 0) embed_time(static_cast<double>(times[i]), embed_.d, &x(dim, j));
      }
      Eigen::MatrixXd logits = forward(params_, x);
      for (std::size_t i = start; i < end; ++i) out[i] = argmax_column(logits, static_cast<Eigen::Index>(i - start), tiebreak);
    }
  }

 private:
  MlpParams params_;
  ErmMode mode_;
  TimeEmbeddingConfig embed_;
};

}  // namespace

PredictorSequence mlp_predictor(MlpParams params, ErmMode mode, const TimeEmbeddingConfig& embed, LearnerInfo info) {
  return PredictorSequence(std::make_shared<MlpPredictor>(std::move(params), mode, embed), std::move(info));
}

TrainResult train_erm_params(const Realization& data, ErmMode mode, const TrainConfig& cfg,
                             const TimeEmbeddingConfig& embed) {
  if (data.size() == 0) throw std::invalid_argument("train_erm: no data");
  Eigen::MatrixXd x = design_matrix(data, mode, embed);
  return fit_mlp(x, data.y, 2, cfg);
}

PredictorSequence train_erm(const Realization& data, ErmMode mode, const TrainConfig& cfg,
                            const TimeEmbeddingConfig& embed) {
  TrainResult r = train_erm_params(data, mode, cfg, embed);
  LearnerInfo info{mode == ErmMode::prospective ? "prospective_erm" : "follow_the_leader",
                   {{"final_loss", r.epoch_loss.back()}, {"epochs", static_cast<double>(cfg.epochs)}}};
  if (mode == ErmMode::prospective) info.params.emplace_back("embed_dim", embed.d);
  return mlp_predictor(std::move(r.params), mode, embed, std::move(info));
}

void online_sgd_step(MlpParams& params, const Eigen::MatrixXd& recent, std::span<const int> targets, double lr,
                     double weight_decay) {
  if (lr == 0.0) return;
  LossGradient lg = gradient(params, recent, targets, weight_decay);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weight -= lr * lg.grad.layers[l].weight;
    params.layers[l].bias -= lr * lg.grad.layers[l].bias;
  }
}

PredictorSequence train_online_sgd(const Realization& data, const TrainConfig& cfg, int window) {
  if (data.size() == 0) throw std::invalid_argument("train_online_sgd: no data");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  validate_train_config(cfg);
  Rng init = Rng::stream(cfg.seed, StreamTag::init);
  MlpParams params = MlpParams::init_uniform(layer_sizes(data.dim, cfg.hidden, 2), init);
  Eigen::MatrixXd all = design_matrix(data, ErmMode::time_agnostic, {0});
  for (long s = 0; s < data.steps(); ++s) {
    std::size_t end = static_cast<std::size_t>(s + 1) * data.samples_per_step;
    std::size_t begin = end > static_cast<std::size_t>(window) ? end - window : 0;
    Eigen::MatrixXd recent = all.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    std::span<const int> targets(data.y.data() + begin, end - begin);
    online_sgd_step(params, recent, targets, cfg.learning_rate, cfg.weight_decay);
  }
  return mlp_predictor(std::move(params), ErmMode::time_agnostic, {0},
                       {"online_sgd", {{"window", static_cast<double>(window)}}});
}

}  // namespace prolearn
