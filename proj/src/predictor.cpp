#include "prolearn/predictor.hpp"

#include <stdexcept>

namespace prolearn {

double LearnerInfo::param(const std::string& name) const {
  for (const auto& [k, v] : params) {
    if (k == name) return v;
  }
  throw std::out_of_range("learner has no parameter " + name);
}

void Predictor::predict_batch(std::span<const long> times, std::span<const double> inputs, int dim, Rng& tiebreak,
                              std::span<int> out) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = predict(times[i], inputs.subspan(i * dim, dim), tiebreak);
  }
}

namespace {

class FunctionPredictor final : public Predictor {
 public:
  explicit FunctionPredictor(PredictFn fn) : fn_(std::move(fn)) {}
  int predict(long t, std::span<const double> x, Rng& tiebreak) const override { return fn_(t, x, tiebreak); }

 private:
  PredictFn fn_;
};

}  // namespace

PredictorSequence make_predictor(PredictFn fn, LearnerInfo info) {
  return PredictorSequence(std::make_shared<FunctionPredictor>(std::move(fn)), std::move(info));
}

int threshold_half(double p, Rng& tiebreak) {
  if (p > 0.5) return 1;
  if (p < 0.5) return 0;
  return tiebreak.bernoulli(0.5) ? 1 : 0;
}

int argmax2(double a0, double a1, Rng& tiebreak) {
  if (a1 > a0) return 1;
  if (a1 < a0) return 0;
  return tiebreak.bernoulli(0.5) ? 1 : 0;
}

PredictorSequence chance_predictor(int class_count) {
  if (class_count < 1) throw std::invalid_argument("class_count must be positive");
  return make_predictor([class_count](long, std::span<const double>, Rng& rng) { return rng.uniform_int(class_count); },
                        {"chance", {{"classes", static_cast<double>(class_count)}}});
}

}  // namespace prolearn
