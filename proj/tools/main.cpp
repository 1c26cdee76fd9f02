#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "esnmt/checkpoint.hpp"
#include "esnmt/config.hpp"
#include "esnmt/corpus.hpp"
#include "esnmt/experiments.hpp"
#include "esnmt/reservoir.hpp"

namespace fs = std::filesystem;
using namespace esnmt;

namespace {

struct RunOptions {
  std::string config;
  std::string run_dir;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("-c,--config", o.config, "key = value config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--run-dir", o.run_dir, "output directory; must be empty or absent")->required();
  cmd->add_option("--set", o.overrides, "override a config key, as key=value")->take_all();
}

RunConfig resolve(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "override is not key=value");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  // Round trip so overrides are validated like file keys.
  return parse_config_text(config_to_string(cfg));
}

// Vocabulary size comes from the corpus; a configured value must agree.
ModelConfig model_for(const RunConfig& cfg, const ParallelCorpus& corpus) {
  ModelConfig m = cfg.model;
  const auto v = static_cast<std::uint32_t>(corpus.vocab.size());
  if (cfg.vocab_size && *cfg.vocab_size != v) {
    throw ConfigError("model.vocab_size", "configured " + std::to_string(*cfg.vocab_size) +
                                              " but the corpus has " + std::to_string(v) + " types");
  }
  m.arch.vocab_size = v;
  m.validate();
  return m;
}

void prepare_run_dir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
    if (!fs::is_empty(dir)) {
      throw std::runtime_error("run directory " + dir.string() + " is not empty; refusing to reuse it");
    }
  }
  fs::create_directories(dir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::span<const SentencePair> scored(const RunConfig& cfg, const std::vector<SentencePair>& split) {
  const std::size_t n = cfg.experiment.eval_sentences;
  return n == 0 || n >= split.size() ? std::span(split) : std::span(split).first(n);
}

std::vector<std::size_t> edges_for(const RunConfig& cfg, std::span<const SentencePair> data) {
  if (!cfg.experiment.bucket_edges.empty()) return cfg.experiment.bucket_edges;
  std::size_t longest = 0;
  for (const auto& p : data) longest = std::max(longest, p.source.size());
  return default_bucket_edges(longest);
}

void log(const std::string& msg) { std::cerr << "[esnmt] " << msg << std::endl; }

int cmd_train(const RunOptions& o) {
  const RunConfig cfg = resolve(o.config, o.overrides);
  const fs::path dir = o.run_dir;
  prepare_run_dir(dir);
  const ParallelCorpus corpus = load_corpus(cfg.data);
  const ModelConfig mc = model_for(cfg, corpus);
  {
    auto out = open_out(dir / "config.resolved");
    RunConfig echo = cfg;
    echo.vocab_size = mc.arch.vocab_size;
    write_config(out, echo);
  }
  EsnmtModel model = build_model(mc);
  const auto tally = frozen_fraction(mc.arch.reservoir, mc.arch.vocab_size, mc.arch.attention_dim);
  log("model: " + std::to_string(tally.trainable) + " trainable, " + std::to_string(tally.frozen) +
      " frozen parameters; " + std::to_string(corpus.train.size()) + " training pairs");

  const auto& held_out = corpus.dev.empty() ? corpus.test : corpus.dev;
  const auto eval_set = scored(cfg, held_out);
  EvalHook hook = [&](std::uint64_t step, const EsnmtModel& m, MetricsLog& metrics) {
    const double bleu = evaluate_bleu(m, eval_set);
    metrics.add_eval({step, bleu});
    std::ostringstream msg;
    msg << "step " << step << " loss " << std::fixed << std::setprecision(4)
        << metrics.losses().back() << " held-out BLEU " << std::setprecision(2) << bleu;
    log(msg.str());
  };
  TrainResult result;
  try {
    result = train(model, corpus.train, cfg.train, hook);
  } catch (const TrainingAborted& e) {
    auto out = open_out(dir / "metrics.csv");
    e.log().write_csv(out);
    throw;
  }
  {
    auto out = open_out(dir / "metrics.csv");
    result.log.write_csv(out);
  }
  if (!result.log.evals().empty()) {
    auto out = open_out(dir / "eval.csv");
    out << "step,bleu\n" << std::setprecision(10);
    for (const auto& e : result.log.evals()) out << e.step << ',' << e.bleu << '\n';
  }
  const auto test = scored(cfg, corpus.test);
  const auto edges = edges_for(cfg, test);
  const auto buckets = evaluate_by_length(model, test, edges);
  {
    auto out = open_out(dir / "bleu.csv");
    write_bleu_csv(out, buckets);
  }
  const auto full = save_checkpoint(model, CheckpointMode::full, result.steps, &result.optimizer);
  const auto compressed = save_checkpoint(model, CheckpointMode::compressed, result.steps);
  write_file(dir / (std::string("ckpt.full") + kCheckpointExtension), full);
  write_file(dir / (std::string("ckpt.compressed") + kCheckpointExtension), compressed);
  std::cout << "test BLEU " << std::fixed << std::setprecision(2) << evaluate_bleu(model, test)
            << "\nfinal loss " << std::setprecision(4) << result.final_loss << "\ncheckpoints "
            << full.size() << " bytes (full), " << compressed.size() << " bytes (compressed)\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& config,
             const std::vector<std::string>& overrides, const std::string& out_csv) {
  const RunConfig cfg = resolve(config, overrides);
  const auto loaded = load_checkpoint(read_file(ckpt));
  const ParallelCorpus corpus = load_corpus(cfg.data);
  if (corpus.vocab.size() != loaded.model.arch().vocab_size) {
    throw std::runtime_error("corpus vocabulary has " + std::to_string(corpus.vocab.size()) +
                             " types but the checkpoint expects " +
                             std::to_string(loaded.model.arch().vocab_size));
  }
  const auto test = scored(cfg, corpus.test);
  const auto buckets = evaluate_by_length(loaded.model, test, edges_for(cfg, test));
  std::cout << "test BLEU " << std::fixed << std::setprecision(2)
            << evaluate_bleu(loaded.model, test) << " on " << test.size() << " sentences\n";
  if (!out_csv.empty()) {
    auto out = open_out(out_csv);
    write_bleu_csv(out, buckets);
  } else {
    write_bleu_csv(std::cout, buckets);
  }
  return 0;
}

int cmd_ablate(const RunOptions& o) {
  const RunConfig cfg = resolve(o.config, o.overrides);
  const fs::path dir = o.run_dir;
  prepare_run_dir(dir);
  const ParallelCorpus corpus = load_corpus(cfg.data);
  const ModelConfig mc = model_for(cfg, corpus);
  {
    auto out = open_out(dir / "config.resolved");
    write_config(out, cfg);
  }
  const auto rows = run_ablation(mc, cfg.train, corpus.train, scored(cfg, corpus.test),
                                 cfg.experiment.presets, log);
  auto out = open_out(dir / "ablation.csv");
  write_ablation_csv(out, rows);
  write_ablation_csv(std::cout, rows);
  return 0;
}

int cmd_sweep(const RunOptions& o) {
  const RunConfig cfg = resolve(o.config, o.overrides);
  const fs::path dir = o.run_dir;
  prepare_run_dir(dir);
  const ParallelCorpus corpus = load_corpus(cfg.data);
  const ModelConfig mc = model_for(cfg, corpus);
  {
    auto out = open_out(dir / "config.resolved");
    write_config(out, cfg);
  }
  const auto test = scored(cfg, corpus.test);
  const auto rows = fixed_radius_sweep(mc, cfg.experiment.radii, cfg.train, corpus.train, test,
                                       edges_for(cfg, test), log);
  auto out = open_out(dir / "sweep.csv");
  write_sweep_csv(out, rows);
  write_sweep_csv(std::cout, rows);
  return 0;
}

int cmd_compress(const std::string& in, const std::string& out) {
  const auto bytes = read_file(in);
  const auto loaded = load_checkpoint(bytes);
  const auto compressed =
      save_checkpoint(loaded.model, CheckpointMode::compressed, loaded.header.optimizer_step);
  // Regenerating from the seed must reproduce the source checkpoint exactly.
  const auto check = load_checkpoint(compressed);
  const auto report = verify_models(loaded.model, check.model);
  if (!report.identical()) {
    throw std::runtime_error("compressed checkpoint does not reproduce " +
                             std::to_string(report.differing()) + " tensors");
  }
  write_file(out, compressed);
  std::cout << in << ": " << bytes.size() << " bytes -> " << out << ": " << compressed.size()
            << " bytes (" << std::fixed << std::setprecision(1)
            << 100.0 * static_cast<double>(compressed.size()) / static_cast<double>(bytes.size())
            << "%)\n";
  return 0;
}

void print_arch(const ModelConfig& m) {
  const auto& r = m.arch.reservoir;
  std::cout << "cell            " << to_string(r.cell_type) << "\nlayers          "
            << r.num_encoder_layers << " encoder + " << r.num_decoder_layers << " decoder"
            << "\nhidden/input    " << r.hidden_dim << " / " << r.input_dim
            << "\nvocab           " << m.arch.vocab_size << "\nattention dim   "
            << m.arch.attention_dim << "\ndensity         " << r.density
            << "\nradius target   " << r.radius_norm_target << "\nreservoir seed  " << r.seed
            << "\nmask            " << mask_to_text(m.mask) << "\nresidual        "
            << (m.residual ? "on" : "off") << "\nfixed rho       "
            << (m.fixed_rho ? std::to_string(*m.fixed_rho) : std::string("learned")) << '\n';
  const auto t = frozen_fraction(r, m.arch.vocab_size, m.arch.attention_dim);
  std::cout << "parameters      " << t.total() << " (" << t.frozen << " frozen, " << t.trainable
            << " trainable, frozen fraction " << std::setprecision(4) << t.fraction() << ")\n";
  const auto full = checkpoint_size(m, CheckpointMode::full);
  const auto comp = checkpoint_size(m, CheckpointMode::compressed);
  std::cout << "checkpoint size " << full << " bytes full, " << comp << " bytes compressed ("
            << static_cast<double>(comp) / static_cast<double>(full) << ")\n";
}

int cmd_inspect(const std::string& ckpt, const std::string& config, bool tensors) {
  if (!config.empty()) {
    const RunConfig cfg = resolve(config, {});
    ModelConfig m = cfg.model;
    if (cfg.vocab_size) {
      m.arch.vocab_size = *cfg.vocab_size;
    } else {
      m.arch.vocab_size = static_cast<std::uint32_t>(load_corpus(cfg.data).vocab.size());
    }
    print_arch(m);
    return 0;
  }
  const auto bytes = read_file(ckpt);
  const auto loaded = load_checkpoint(bytes);
  const auto& h = loaded.header;
  std::cout << "file            " << ckpt << " (" << bytes.size() << " bytes)\nformat version  "
            << h.version << "\nmode            " << to_string(h.mode) << "\noptimizer step  "
            << h.optimizer_step << "\noptimizer state "
            << (h.has_optimizer_state ? "stored" : "none") << "\nstored tensors  "
            << h.tensor_count << '\n';
  print_arch(h.config);
  const auto& model = loaded.model;
  std::cout << "scaling factors\n";
  for (std::size_t s = 0; s < model.slots().size(); ++s) {
    const auto f = model.scaling(s);
    std::cout << "  " << std::left << std::setw(16) << model.slots()[s].slot.id() << std::right
              << " rho " << std::setprecision(6) << f.rho << "  gamma " << f.gamma << '\n';
  }
  if (tensors) {
    const auto digests = model.params().frozen_digests();
    for (const auto& t : model.params().tensors()) {
      std::cout << "  " << std::left << std::setw(28) << t.shape.name << std::right
                << std::setw(12) << t.value.shape_string() << "  "
                << (t.trainable ? "trainable" : "frozen   ");
      if (!t.trainable) std::cout << "  sha256 " << digests.at(t.shape.name).substr(0, 16);
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_verify(const std::string& a, const std::string& b) {
  const auto ma = load_checkpoint(read_file(a));
  const auto mb = load_checkpoint(read_file(b));
  const auto report = verify_models(ma.model, mb.model);
  for (const auto& t : report.tensors) {
    std::cout << std::left << std::setw(28) << t.name << std::right << ' '
              << (t.bit_equal ? "identical" : "DIFFERS") << "  max |diff| " << std::scientific
              << std::setprecision(3) << t.max_abs_diff << '\n';
  }
  std::cout << (report.identical() ? "verify: identical\n"
                                   : "verify: " + std::to_string(report.differing()) +
                                         " tensors differ\n");
  return report.identical() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo state NMT: frozen random reservoirs with learned scaling factors"};
  app.require_subcommand(1);

  RunOptions train_opts, ablate_opts, sweep_opts;
  auto* train_cmd = app.add_subcommand("train", "train one model and write a run directory");
  add_run_options(train_cmd, train_opts);

  auto* ablate_cmd = app.add_subcommand("ablate", "train every mask preset in experiment.presets");
  add_run_options(ablate_cmd, ablate_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "train with rho fixed to each of experiment.radii");
  add_run_options(sweep_cmd, sweep_opts);

  std::string eval_ckpt, eval_config, eval_out;
  std::vector<std::string> eval_overrides;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on the config's test split");
  eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("-c,--config", eval_config, "config describing the corpus")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--set", eval_overrides, "override a config key, as key=value")->take_all();
  eval_cmd->add_option("--bleu-csv", eval_out, "write length-bucketed BLEU here");

  std::string comp_in, comp_out;
  auto* comp_cmd = app.add_subcommand("compress", "rewrite a checkpoint keeping only trainable tensors");
  comp_cmd->add_option("input", comp_in, "full or compressed checkpoint")->required()->check(CLI::ExistingFile);
  comp_cmd->add_option("output", comp_out, "compressed checkpoint to write")->required();

  std::string insp_ckpt, insp_config;
  bool insp_tensors = false;
  auto* insp_cmd = app.add_subcommand("inspect", "print a checkpoint's header and parameter split");
  auto* insp_file = insp_cmd->add_option("checkpoint", insp_ckpt, "checkpoint file")->check(CLI::ExistingFile);
  auto* insp_cfg = insp_cmd->add_option("-c,--config", insp_config,
                                        "describe a config instead of a checkpoint (no model is built)")
                       ->check(CLI::ExistingFile);
  insp_file->excludes(insp_cfg);
  insp_cmd->add_flag("--tensors", insp_tensors, "list every tensor with its shape");

  std::string ver_a, ver_b;
  auto* ver_cmd = app.add_subcommand("verify", "compare two checkpoints tensor by tensor (exit 1 on any difference)");
  ver_cmd->add_option("a", ver_a, "first checkpoint")->required()->check(CLI::ExistingFile);
  ver_cmd->add_option("b", ver_b, "second checkpoint")->required()->check(CLI::ExistingFile);

  std::string keys_hint;
  for (const auto& k : config_keys()) keys_hint += "  " + k + "\n";
  app.footer("Config keys:\n" + keys_hint);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train_cmd) return cmd_train(train_opts);
    if (*ablate_cmd) return cmd_ablate(ablate_opts);
    if (*sweep_cmd) return cmd_sweep(sweep_opts);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_config, eval_overrides, eval_out);
    if (*comp_cmd) return cmd_compress(comp_in, comp_out);
    if (*insp_cmd) {
      if (insp_ckpt.empty() && insp_config.empty()) {
        std::cerr << "inspect: give a checkpoint or --config\n";
        return 2;
      }
      return cmd_inspect(insp_ckpt, insp_config, insp_tensors);
    }
    if (*ver_cmd) return cmd_verify(ver_a, ver_b);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
