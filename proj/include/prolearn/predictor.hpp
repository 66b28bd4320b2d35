#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prolearn/rng.hpp"

namespace prolearn {

struct LearnerInfo {
  std::string kind;
  std::vector<std::pair<std::string, double>> params;

  double param(const std::string& name) const;
};

/// A sequence of hypotheses h_1, h_2, ...: maps (time, input) to a label.
/// Implementations are immutable after fitting and may be evaluated from many
/// threads, each with its own tie-break stream.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int predict(long t, std::span<const double> x, Rng& tiebreak) const = 0;
  /// inputs holds times.size() rows of `dim` values.  The default calls
  /// predict() in order, so tie-break draws match a sequential loop.
  virtual void predict_batch(std::span<const long> times, std::span<const double> inputs, int dim, Rng& tiebreak,
                             std::span<int> out) const;
};

class PredictorSequence {
 public:
  PredictorSequence(std::shared_ptr<const Predictor> impl, LearnerInfo info)
      : impl_(std::move(impl)), info_(std::move(info)) {}

  int predict(long t, std::span<const double> x, Rng& tiebreak) const { return impl_->predict(t, x, tiebreak); }
  int operator()(long t, std::span<const double> x, Rng& tiebreak) const { return predict(t, x, tiebreak); }
  void predict_batch(std::span<const long> times, std::span<const double> inputs, int dim, Rng& tiebreak,
                     std::span<int> out) const {
    impl_->predict_batch(times, inputs, dim, tiebreak, out);
  }

  const LearnerInfo& info() const { return info_; }
  const Predictor& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Predictor> impl_;
  LearnerInfo info_;
};

using PredictFn = std::function<int(long, std::span<const double>, Rng&)>;

/// Wrap a callable as a predictor.
PredictorSequence make_predictor(PredictFn fn, LearnerInfo info);

/// 1 if p > 1/2, 0 if p < 1/2, a fair coin from `tiebreak` at exactly 1/2.
int threshold_half(double p, Rng& tiebreak);

/// 1 if a > b, 0 if a < b, fair coin on equality.
int argmax2(double a0, double a1, Rng& tiebreak);

/// Uniform-random class; carries no information about the label.
PredictorSequence chance_predictor(int class_count);

}  // namespace prolearn
