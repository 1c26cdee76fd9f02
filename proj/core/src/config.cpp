#include "esnmt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace esnmt {

ConfigError::ConfigError(const std::string& key, const std::string& message)
    : std::runtime_error("config key '" + key + "': " + message), key_(key) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_uint(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ESN_UINT(KEY, FIELD, TYPE)                                                          \
  Key {                                                                                     \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                     \
      c.FIELD = parse_uint<TYPE>(k, v);                                                     \
    },                                                                                      \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                          \
  }
#define ESN_DOUBLE(KEY, FIELD)                                                              \
  Key {                                                                                     \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                     \
      c.FIELD = parse_double(k, v);                                                         \
    },                                                                                      \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                     \
  }
#define ESN_PATH(KEY, FIELD)                                                                \
  Key {                                                                                     \
    KEY, [](RunConfig& c, const std::string&, const std::string& v) { c.FIELD = v; },       \
        [](const RunConfig& c) { return c.FIELD.string(); }                                 \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      ESN_UINT("reservoir.seed", model.arch.reservoir.seed, std::uint64_t),
      Key{"reservoir.cell_type",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.model.arch.reservoir.cell_type = wrap(k, [&] { return parse_cell_type(v); });
          },
          [](const RunConfig& c) {
            return std::string(to_string(c.model.arch.reservoir.cell_type));
          }},
      ESN_UINT("reservoir.num_encoder_layers", model.arch.reservoir.num_encoder_layers,
               std::uint32_t),
      ESN_UINT("reservoir.num_decoder_layers", model.arch.reservoir.num_decoder_layers,
               std::uint32_t),
      ESN_UINT("reservoir.hidden_dim", model.arch.reservoir.hidden_dim, std::uint32_t),
      ESN_UINT("reservoir.input_dim", model.arch.reservoir.input_dim, std::uint32_t),
      ESN_DOUBLE("reservoir.density", model.arch.reservoir.density),
      ESN_DOUBLE("reservoir.radius_norm_target", model.arch.reservoir.radius_norm_target),

      ESN_UINT("model.attention_dim", model.arch.attention_dim, std::uint32_t),
      Key{"model.vocab_size",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "auto") {
              c.vocab_size.reset();
            } else {
              c.vocab_size = parse_uint<std::uint32_t>(k, v);
            }
          },
          [](const RunConfig& c) {
            return c.vocab_size ? std::to_string(*c.vocab_size) : std::string("auto");
          }},
      Key{"model.mask",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.model.mask = wrap(k, [&] { return parse_mask(v); });
          },
          [](const RunConfig& c) { return mask_to_text(c.model.mask); }},
      Key{"model.residual",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.model.residual = parse_bool(k, v);
          },
          [](const RunConfig& c) { return std::string(c.model.residual ? "true" : "false"); }},
      Key{"model.fixed_rho",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "none") {
              c.model.fixed_rho.reset();
            } else {
              c.model.fixed_rho = parse_double(k, v);
            }
          },
          [](const RunConfig& c) {
            return c.model.fixed_rho ? fmt(*c.model.fixed_rho) : std::string("none");
          }},
      ESN_DOUBLE("model.init_scale", model.init_scale),
      ESN_DOUBLE("model.gamma_init", model.gamma_init),

      ESN_DOUBLE("train.learning_rate", train.learning_rate),
      ESN_UINT("train.warmup_steps", train.warmup_steps, std::uint64_t),
      ESN_UINT("train.batch_size", train.batch_size, std::size_t),
      ESN_UINT("train.max_steps", train.max_steps, std::uint64_t),
      ESN_DOUBLE("train.label_smoothing", train.label_smoothing),
      ESN_DOUBLE("train.dropout", train.dropout),
      ESN_DOUBLE("train.weight_decay", train.weight_decay),
      ESN_DOUBLE("train.clip_norm", train.clip_norm),
      ESN_UINT("train.eval_interval", train.eval_interval, std::uint64_t),
      ESN_UINT("train.seed", train.seed, std::uint64_t),

      Key{"data.source",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "toy") {
              c.data.from_files = false;
            } else if (v == "files") {
              c.data.from_files = true;
            } else {
              throw ConfigError(k, "expected toy or files, got '" + v + "'");
            }
          },
          [](const RunConfig& c) { return std::string(c.data.from_files ? "files" : "toy"); }},
      Key{"data.task",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.data.toy.kind = wrap(k, [&] { return parse_toy_kind(v); });
          },
          [](const RunConfig& c) { return std::string(to_string(c.data.toy.kind)); }},
      ESN_UINT("data.size", data.toy.size, std::size_t),
      ESN_UINT("data.dev_size", data.toy.dev_size, std::size_t),
      ESN_UINT("data.test_size", data.toy.test_size, std::size_t),
      ESN_UINT("data.min_len", data.toy.min_len, std::size_t),
      ESN_UINT("data.max_len", data.toy.max_len, std::size_t),
      ESN_UINT("data.vocab_size", data.toy.vocab_size, std::size_t),
      ESN_UINT("data.seed", data.toy.seed, std::uint64_t),
      ESN_PATH("data.train_source", data.train_source),
      ESN_PATH("data.train_target", data.train_target),
      ESN_PATH("data.dev_source", data.dev_source),
      ESN_PATH("data.dev_target", data.dev_target),
      ESN_PATH("data.test_source", data.test_source),
      ESN_PATH("data.test_target", data.test_target),

      Key{"experiment.presets",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.experiment.presets.clear();
            for (const auto& item : split(v, ',')) {
              c.experiment.presets.push_back(wrap(k, [&] { return parse_mask_preset(item); }));
            }
            if (c.experiment.presets.empty()) throw ConfigError(k, "needs at least one preset");
          },
          [](const RunConfig& c) {
            std::string out;
            for (auto p : c.experiment.presets) out += (out.empty() ? "" : ",") + std::string(to_string(p));
            return out;
          }},
      Key{"experiment.radii",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.experiment.radii.clear();
            for (const auto& item : split(v, ',')) c.experiment.radii.push_back(parse_double(k, item));
            if (c.experiment.radii.empty()) throw ConfigError(k, "needs at least one radius");
          },
          [](const RunConfig& c) {
            std::string out;
            for (double r : c.experiment.radii) out += (out.empty() ? "" : ",") + fmt(r);
            return out;
          }},
      Key{"experiment.bucket_edges",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.experiment.bucket_edges.clear();
            if (v == "auto") return;
            for (const auto& item : split(v, ',')) {
              c.experiment.bucket_edges.push_back(parse_uint<std::size_t>(k, item));
            }
            for (std::size_t i = 1; i < c.experiment.bucket_edges.size(); ++i) {
              if (c.experiment.bucket_edges[i] <= c.experiment.bucket_edges[i - 1]) {
                throw ConfigError(k, "edges must be strictly increasing");
              }
            }
          },
          [](const RunConfig& c) {
            if (c.experiment.bucket_edges.empty()) return std::string("auto");
            std::string out;
            for (auto e : c.experiment.bucket_edges) out += (out.empty() ? "" : ",") + std::to_string(e);
            return out;
          }},
      ESN_UINT("experiment.eval_sentences", experiment.eval_sentences, std::size_t),
  };
  return keys;
}

#undef ESN_UINT
#undef ESN_DOUBLE
#undef ESN_PATH

const Key& find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (k.name == key) return k;
  }
  throw ConfigError(key, "unknown key");
}

void validate(const RunConfig& c) {
  wrap("reservoir", [&] {
    c.model.arch.reservoir.validate();
    return 0;
  });
  if (c.model.arch.attention_dim == 0) throw ConfigError("model.attention_dim", "must be positive");
  wrap("model.mask", [&] {
    c.model.mask.validate();
    return 0;
  });
  if (!(c.model.init_scale > 0.0)) throw ConfigError("model.init_scale", "must be positive");
  wrap("train", [&] {
    c.train.validate();
    return 0;
  });
  if (c.data.from_files && (c.data.train_source.empty() || c.data.train_target.empty() ||
                            c.data.test_source.empty() || c.data.test_target.empty())) {
    throw ConfigError("data.train_source",
                      "file data needs train_source, train_target, test_source and test_target");
  }
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, key, value);
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(number) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(number) + " has no key");
    if (!seen.insert(key).second) throw ConfigError(key, "given twice");
    set_config_value(config, key, value);
  }
  validate(config);
  return config;
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& k : key_table()) out << k.name << " = " << k.get(config) << '\n';
}

std::string config_to_string(const RunConfig& config) {
  std::ostringstream out;
  write_config(out, config);
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

std::string mask_to_text(const TrainabilityMask& mask) {
  for (auto p : kAllPresets) {
    if (TrainabilityMask::preset(p) == mask) return std::string(to_string(p));
  }
  std::string out;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    if (mask.trainable[i]) out += (out.empty() ? "" : "+") + std::string(to_string(static_cast<Component>(i)));
  }
  return out;
}

TrainabilityMask parse_mask(const std::string& text) {
  if (text.find('+') == std::string::npos) {
    for (auto p : kAllPresets) {
      if (to_string(p) == text) return TrainabilityMask::preset(p);
    }
  }
  TrainabilityMask mask;
  for (const auto& item : split(text, '+')) {
    bool found = false;
    for (std::size_t i = 0; i < kComponentCount; ++i) {
      if (to_string(static_cast<Component>(i)) == item) {
        mask.trainable[i] = true;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown preset or component '" + item + "'");
  }
  mask.validate();
  return mask;
}

ParallelCorpus load_corpus(const DataConfig& data) {
  if (!data.from_files) return make_toy_task(data.toy);
  ParallelCorpus corpus;
  corpus.train = load_parallel_text(data.train_source, data.train_target, corpus.vocab, true);
  if (!data.dev_source.empty()) {
    corpus.dev = load_parallel_text(data.dev_source, data.dev_target, corpus.vocab, false);
  }
  corpus.test = load_parallel_text(data.test_source, data.test_target, corpus.vocab, false);
  return corpus;
}

}  // namespace esnmt
