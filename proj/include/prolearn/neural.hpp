#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "prolearn/predictor.hpp"
#include "prolearn/process.hpp"

namespace prolearn {

/// Sinusoidal time features with angular frequencies pi / i, i = 1..d/2.
struct TimeEmbeddingConfig {
  int d = 50;
  bool operator==(const TimeEmbeddingConfig&) const = default;
};

/// Writes sin(pi t / i) for i = 1..d/2 followed by cos(pi t / i) for i = 1..d/2.
void embed_time(double t, int d, double* out);
std::vector<double> embed_time(double t, const TimeEmbeddingConfig& cfg);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Fully connected ReLU network; the last layer is linear and produces logits.
struct MlpParams {
  std::vector<DenseLayer> layers;

  static MlpParams zeros(const std::vector<int>& sizes);
  /// Weights and biases uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpParams init_uniform(const std::vector<int>& sizes, Rng& rng);

  std::vector<int> sizes() const;
  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  double squared_norm() const;

  bool operator==(const MlpParams& other) const;
};

/// Logits for one input.
Eigen::VectorXd forward(const MlpParams& params, std::span<const double> input);
/// Logits for a batch stored column-wise (input_dim x n).
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs);

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

/// Mean cross-entropy over the batch plus (weight_decay / 2) * ||params||^2.
double loss(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
            double weight_decay);

struct LossGradient {
  double loss = 0.0;
  MlpParams grad;
};

/// Loss and its gradient by backpropagation.  Throws std::domain_error on
/// non-finite activations.
LossGradient gradient(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
                      double weight_decay);
/// Same, writing into `out` and reusing its storage.
void gradient(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> targets,
              double weight_decay, LossGradient& out);

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;         // Nesterov
  double lr_floor_fraction = 0.01;  // cosine annealing ends at this fraction of the base rate
  double weight_decay = 1e-5;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::vector<int> hidden{256, 256};
  bool operator==(const TrainConfig&) const = default;
};

/// Cosine-annealed rate for `epoch` in [0, epochs).
double cosine_lr(const TrainConfig& cfg, int epoch);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, double loss);
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

enum class ErmMode { prospective, time_agnostic };

/// Network inputs for every sample, column-wise; prospective mode appends the
/// time embedding of the sample's time.
Eigen::MatrixXd design_matrix(const Realization& data, ErmMode mode, const TimeEmbeddingConfig& embed);

struct TrainResult {
  MlpParams params;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

/// Minibatch SGD with Nesterov momentum and cosine annealing; data reshuffled
/// every epoch.  Deterministic given cfg.seed.
TrainResult fit_mlp(const Eigen::MatrixXd& inputs, std::span<const int> targets, int classes, const TrainConfig& cfg);

/// Empirical risk minimization on the samples in `data`.
PredictorSequence train_erm(const Realization& data, ErmMode mode, const TrainConfig& cfg,
                            const TimeEmbeddingConfig& embed);
TrainResult train_erm_params(const Realization& data, ErmMode mode, const TrainConfig& cfg,
                             const TimeEmbeddingConfig& embed);

/// One plain SGD step on the given samples.
void online_sgd_step(MlpParams& params, const Eigen::MatrixXd& recent, std::span<const int> targets, double lr,
                     double weight_decay);

/// Walks through `data` one step at a time, after each step taking one SGD step
/// on the last `window` samples.  The resulting predictor ignores time.
PredictorSequence train_online_sgd(const Realization& data, const TrainConfig& cfg, int window = 8);

/// Predictor backed by fixed network parameters.
PredictorSequence mlp_predictor(MlpParams params, ErmMode mode, const TimeEmbeddingConfig& embed, LearnerInfo info);

}  // namespace prolearn
