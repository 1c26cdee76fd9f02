#include "esnmt/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "esnmt/loss.hpp"
#include "esnmt/rng.hpp"

namespace esnmt {

void TrainConfig::validate() const {
  auto nonneg = [](double x, const char* key) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(key) + " must be a finite non-negative number");
    }
  };
  nonneg(learning_rate, "learning_rate");
  nonneg(label_smoothing, "label_smoothing");
  nonneg(dropout, "dropout");
  nonneg(weight_decay, "weight_decay");
  if (label_smoothing >= 1.0) throw std::invalid_argument("label_smoothing must be below 1");
  if (dropout >= 1.0) throw std::invalid_argument("dropout must be below 1");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
}

void MetricsLog::write_csv(std::ostream& out) const {
  out << "step,layer_id,direction,rho,gamma,loss\n";
  const auto old = out.precision(17);
  for (const auto& r : rows_) {
    out << r.step << ',' << r.layer_id << ',' << r.direction << ',' << r.rho << ',' << r.gamma
        << ',' << r.loss << '\n';
  }
  out.precision(old);
}

TrainingAborted::TrainingAborted(std::uint64_t step, const std::string& reason, MetricsLog log)
    : std::runtime_error("training aborted at step " + std::to_string(step) + ": " + reason),
      step_(step),
      log_(std::move(log)) {}

std::vector<std::vector<std::size_t>> length_buckets(std::span<const SentencePair> data,
                                                     std::size_t batch_size) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].source.size() < data[b].source.size();
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

TrainResult train(EsnmtModel& model, std::span<const SentencePair> data,
                  const TrainConfig& config, const EvalHook& hook) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const auto buckets = length_buckets(data, config.batch_size);
  const AdamConfig adam{0.9, 0.999, 1e-8, config.weight_decay};

  TrainResult res;
  std::vector<std::size_t> epoch_order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  for (std::uint64_t step = 1; step <= config.max_steps; ++step) {
    if (cursor == epoch_order.size()) {
      epoch_order.resize(buckets.size());
      std::iota(epoch_order.begin(), epoch_order.end(), 0);
      Rng rng(config.seed, "batches/epoch" + std::to_string(epoch++));
      for (std::size_t i = epoch_order.size(); i > 1; --i) {
        std::swap(epoch_order[i - 1], epoch_order[rng.below(i)]);
      }
      cursor = 0;
    }
    const Batch batch = make_batch(data, buckets[epoch_order[cursor++]]);

    ForwardOptions opts;
    opts.mode = Mode::train;
    opts.dropout = config.dropout;
    opts.dropout_seed = config.seed;
    opts.step = step;
    GradientSet grads;
    double loss = 0.0;
    try {
      ForwardResult fwd = forward(model, batch, opts);
      LossResult l = smoothed_cross_entropy(fwd.logits, batch.tgt_out, config.label_smoothing);
      loss = l.loss;
      if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
      grads = backward(model, fwd.cache, l.d_logits);
    } catch (const NumericalError& e) {
      throw TrainingAborted(step, e.what(), std::move(res.log));
    }
    clip_gradients(grads, config.clip_norm);
    for (const auto& [name, g] : grads) {
      if (!g.all_finite()) {
        throw TrainingAborted(step, "non-finite gradient for " + name, std::move(res.log));
      }
    }
    const double lr = scheduled_learning_rate(config.learning_rate, config.warmup_steps, step);
    apply_update(model.params(), grads, res.optimizer, lr, adam);

    res.log.add_loss(loss);
    for (std::size_t s = 0; s < model.slots().size(); ++s) {
      const auto& slot = model.slots()[s].slot;
      const ScalingFactors f = model.scaling(s);
      res.log.append({step, slot.layer_id(), std::string(to_string(slot.direction)), f.rho,
                      f.gamma, loss});
    }
    res.final_loss = loss;
    res.steps = step;
    if (hook && config.eval_interval > 0 &&
        (step % config.eval_interval == 0 || step == config.max_steps)) {
      hook(step, model, res.log);
    }
  }
  return res;
}

}  // namespace esnmt
