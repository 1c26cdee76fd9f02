#include <benchmark/benchmark.h>

#include "esnmt/checkpoint.hpp"
#include "esnmt/corpus.hpp"
#include "esnmt/loss.hpp"
#include "esnmt/reservoir.hpp"
#include "esnmt/rng.hpp"
#include "esnmt/train.hpp"

using namespace esnmt;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed, "bench");
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

ModelConfig bench_config(CellType cell, std::uint32_t dim) {
  ModelConfig cfg;
  auto& r = cfg.arch.reservoir;
  r.cell_type = cell;
  r.hidden_dim = dim;
  r.input_dim = dim;
  r.num_encoder_layers = 3;
  r.num_decoder_layers = 3;
  cfg.arch.vocab_size = 30;
  cfg.arch.attention_dim = dim;
  return cfg;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

// One layer over a 20-step, 32-sentence batch.
void BM_RecurrentForward(benchmark::State& state) {
  const auto cell = state.range(0) == 0 ? CellType::simple_rnn : CellType::lstm;
  const auto dim = static_cast<std::uint32_t>(state.range(1));
  const auto cfg = bench_config(cell, dim);
  const EsnmtModel model = build_model(cfg);
  const RecurrentWeights w = model.slot_weights(0);
  const std::size_t steps = 20, batch = 32;
  const Matrix x = random_matrix(steps * batch, dim, 3);
  for (auto _ : state) {
    auto cache = recurrent_forward(w, x, batch, {}, false);
    benchmark::DoNotOptimize(cache.h.data());
  }
}
BENCHMARK(BM_RecurrentForward)->Args({0, 256})->Args({1, 256})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto cell = state.range(0) == 0 ? CellType::simple_rnn : CellType::lstm;
  ToyTaskSpec spec;
  spec.size = 64;
  spec.max_len = 20;
  spec.min_len = 20;
  const auto corpus = make_toy_task(spec);
  auto cfg = bench_config(cell, static_cast<std::uint32_t>(state.range(1)));
  cfg.arch.vocab_size = static_cast<std::uint32_t>(corpus.vocab.size());
  const EsnmtModel model = build_model(cfg);
  const Batch batch = make_batch(std::span(corpus.train).first(32));
  for (auto _ : state) {
    ForwardOptions opts;
    opts.mode = Mode::train;
    opts.dropout = 0.1;
    auto fwd = forward(model, batch, opts);
    auto loss = smoothed_cross_entropy(fwd.logits, batch.tgt_out, 0.1);
    auto grads = backward(model, fwd.cache, loss.d_logits);
    benchmark::DoNotOptimize(grads.size());
  }
}
BENCHMARK(BM_TrainStep)->Args({0, 256})->Args({1, 256})->Unit(benchmark::kMillisecond);

void BM_SpectralRadius(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ReservoirSpec spec;
  spec.hidden_dim = static_cast<std::uint32_t>(n);
  spec.input_dim = static_cast<std::uint32_t>(n);
  spec.num_encoder_layers = 1;
  spec.num_decoder_layers = 1;
  for (auto _ : state) {
    auto layer = generate_layer(spec, recurrent_layout(spec).front());
    benchmark::DoNotOptimize(layer.w_res.nonzeros());
  }
}
BENCHMARK(BM_SpectralRadius)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CompressedLoad(benchmark::State& state) {
  const EsnmtModel model = build_model(bench_config(CellType::lstm, 256));
  const auto bytes = save_checkpoint(model, CheckpointMode::compressed);
  for (auto _ : state) {
    auto loaded = load_checkpoint(bytes);
    benchmark::DoNotOptimize(loaded.model.params().size());
  }
}
BENCHMARK(BM_CompressedLoad)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
