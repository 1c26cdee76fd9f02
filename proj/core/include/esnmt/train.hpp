#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esnmt/model.hpp"
#include "esnmt/optimizer.hpp"

namespace esnmt {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::uint64_t warmup_steps = 1000;
  std::size_t batch_size = 32;
  std::uint64_t max_steps = 1000;
  double label_smoothing = 0.1;
  double dropout = 0.2;
  double weight_decay = 1e-5;
  double clip_norm = 5.0;
  std::uint64_t eval_interval = 0;  // 0 disables the eval hook
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct MetricsRow {
  std::uint64_t step = 0;
  std::string layer_id;
  std::string direction;
  double rho = 0.0;
  double gamma = 0.0;
  double loss = 0.0;
};

struct EvalRow {
  std::uint64_t step = 0;
  double bleu = 0.0;
};

class MetricsLog {
 public:
  void append(MetricsRow row) { rows_.push_back(std::move(row)); }
  void add_loss(double loss) { losses_.push_back(loss); }
  void add_eval(EvalRow row) { evals_.push_back(row); }

  const std::vector<MetricsRow>& rows() const { return rows_; }
  // Training loss of step i + 1.
  const std::vector<double>& losses() const { return losses_; }
  const std::vector<EvalRow>& evals() const { return evals_; }

  // step,layer_id,direction,rho,gamma,loss
  void write_csv(std::ostream& out) const;

 private:
  std::vector<MetricsRow> rows_;
  std::vector<double> losses_;
  std::vector<EvalRow> evals_;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::uint64_t step, const std::string& reason, MetricsLog log);
  std::uint64_t step() const { return step_; }
  const MetricsLog& log() const { return log_; }

 private:
  std::uint64_t step_;
  MetricsLog log_;
};

struct TrainResult {
  MetricsLog log;
  AdamState optimizer;
  double final_loss = 0.0;
  std::uint64_t steps = 0;
};

// Source-length buckets: pairs sorted by (source length, index) and cut into
// batches of batch_size.
std::vector<std::vector<std::size_t>> length_buckets(std::span<const SentencePair> data,
                                                     std::size_t batch_size);

using EvalHook = std::function<void(std::uint64_t step, const EsnmtModel& model, MetricsLog& log)>;

// Runs max_steps updates. On a non-finite loss or activation the model keeps
// the parameters of the last completed step and TrainingAborted is thrown.
TrainResult train(EsnmtModel& model, std::span<const SentencePair> data,
                  const TrainConfig& config, const EvalHook& hook = {});

}  // namespace esnmt
