#include "esnmt/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "esnmt/digest.hpp"

namespace esnmt {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void record(const std::string& name, const Matrix& m) {
    uint(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    uint(static_cast<std::uint64_t>(m.rows()));
    uint(static_cast<std::uint64_t>(m.cols()));
    const std::size_t at = out_.size();
    out_.resize(at + 8 * m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
      for (std::size_t k = 0; k < 8; ++k) out_[at + 8 * i + k] = static_cast<std::uint8_t>(bits >> (8 * k));
    }
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointTruncatedError("checkpoint truncated: needed " + std::to_string(n) +
                                     " bytes at offset " + std::to_string(pos_) + ", " +
                                     std::to_string(data_.size() - pos_) + " left");
    }
  }
  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, Matrix> record() {
    const auto len = uint<std::uint32_t>();
    std::string name = str(len);
    const auto rows = uint<std::uint64_t>();
    const auto cols = uint<std::uint64_t>();
    if (cols != 0 && rows > (data_.size() - pos_) / 8 / cols) {
      need(data_.size() - pos_ + 1);
    }
    const std::size_t n = static_cast<std::size_t>(rows * cols);
    need(8 * n);
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = 0;
      for (std::size_t k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(data_[pos_ + 8 * i + k]) << (8 * k);
      m.data()[i] = std::bit_cast<double>(bits);
    }
    pos_ += 8 * n;
    return {std::move(name), std::move(m)};
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void write_header(Writer& w, const CheckpointHeader& h) {
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.uint(h.version);
  w.uint(static_cast<std::uint8_t>(h.mode));
  const auto& spec = h.config.arch.reservoir;
  w.uint(spec.seed);
  w.uint(static_cast<std::uint8_t>(spec.cell_type));
  w.uint(spec.num_encoder_layers);
  w.uint(spec.num_decoder_layers);
  w.uint(spec.hidden_dim);
  w.uint(spec.input_dim);
  w.f64(spec.density);
  w.f64(spec.radius_norm_target);
  w.uint(h.config.arch.vocab_size);
  w.uint(h.config.arch.attention_dim);
  w.uint(static_cast<std::uint8_t>(h.config.residual));
  w.uint(static_cast<std::uint8_t>(h.config.fixed_rho.has_value()));
  w.f64(h.config.fixed_rho.value_or(0.0));
  w.f64(h.config.init_scale);
  w.f64(h.config.gamma_init);
  w.uint(h.config.mask.bits());
  w.uint(h.optimizer_step);
  w.uint(static_cast<std::uint8_t>(h.has_optimizer_state));
  w.uint(h.tensor_count);
}

CheckpointHeader parse_header(Reader& r) {
  const std::string magic = r.str(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw CheckpointError("not an esnmt checkpoint (bad magic bytes)");
  }
  CheckpointHeader h;
  h.version = r.uint<std::uint32_t>();
  if (h.version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(h.version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto mode = r.uint<std::uint8_t>();
  if (mode > 1) throw CheckpointError("unknown checkpoint mode " + std::to_string(mode));
  h.mode = static_cast<CheckpointMode>(mode);
  auto& spec = h.config.arch.reservoir;
  spec.seed = r.uint<std::uint64_t>();
  const auto cell = r.uint<std::uint8_t>();
  if (cell > 1) throw CheckpointError("unknown cell type " + std::to_string(cell));
  spec.cell_type = static_cast<CellType>(cell);
  spec.num_encoder_layers = r.uint<std::uint32_t>();
  spec.num_decoder_layers = r.uint<std::uint32_t>();
  spec.hidden_dim = r.uint<std::uint32_t>();
  spec.input_dim = r.uint<std::uint32_t>();
  spec.density = r.f64();
  spec.radius_norm_target = r.f64();
  h.config.arch.vocab_size = r.uint<std::uint32_t>();
  h.config.arch.attention_dim = r.uint<std::uint32_t>();
  h.config.residual = r.uint<std::uint8_t>() != 0;
  const bool has_fixed = r.uint<std::uint8_t>() != 0;
  const double fixed = r.f64();
  if (has_fixed) h.config.fixed_rho = fixed;
  h.config.init_scale = r.f64();
  h.config.gamma_init = r.f64();
  try {
    h.config.mask = TrainabilityMask::from_bits(r.uint<std::uint8_t>());
    h.config.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint header: ") + e.what());
  }
  h.optimizer_step = r.uint<std::uint64_t>();
  h.has_optimizer_state = r.uint<std::uint8_t>() != 0;
  h.tensor_count = r.uint<std::uint32_t>();
  return h;
}

std::uint64_t record_size(const std::string& name, std::uint64_t entries) {
  return 4 + name.size() + 16 + 8 * entries;
}

}  // namespace

std::string_view to_string(CheckpointMode mode) {
  return mode == CheckpointMode::full ? "full" : "compressed";
}

std::vector<std::uint8_t> save_checkpoint(const EsnmtModel& model, CheckpointMode mode,
                                          std::uint64_t optimizer_step,
                                          const AdamState* optimizer) {
  CheckpointHeader h;
  h.mode = mode;
  h.config = model.config();
  h.optimizer_step = optimizer_step;
  h.has_optimizer_state = mode == CheckpointMode::full && optimizer != nullptr;
  std::vector<const Tensor*> stored;
  for (const auto& t : model.params().tensors()) {
    if (mode == CheckpointMode::full || t.trainable) stored.push_back(&t);
  }
  h.tensor_count = static_cast<std::uint32_t>(stored.size());

  Writer w;
  w.buffer().reserve(checkpoint_size(model.config(), mode));
  write_header(w, h);
  for (const Tensor* t : stored) w.record(t->shape.name, t->value);
  if (h.has_optimizer_state) {
    w.uint(optimizer->step);
    w.uint(static_cast<std::uint32_t>(optimizer->m.size()));
    for (const auto& [name, m] : optimizer->m) {
      w.record("m/" + name, m);
      w.record("v/" + name, optimizer->v.at(name));
    }
  }
  const std::uint32_t crc = crc32(w.buffer());
  w.uint(crc);
  return std::move(w.buffer());
}

CheckpointHeader read_checkpoint_header(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  return parse_header(r);
}

LoadedCheckpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw CheckpointTruncatedError("checkpoint truncated: fewer than 4 bytes");
  const auto body = bytes.first(bytes.size() - 4);
  Reader r(body);
  CheckpointHeader h = parse_header(r);

  std::vector<std::pair<std::string, Matrix>> records;
  for (std::uint32_t i = 0; i < h.tensor_count; ++i) records.push_back(r.record());
  std::optional<AdamState> opt;
  if (h.has_optimizer_state) {
    AdamState st;
    st.step = r.uint<std::uint64_t>();
    const auto n = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto m = r.record();
      auto v = r.record();
      if (m.first.rfind("m/", 0) != 0 || v.first != "v/" + m.first.substr(2)) {
        throw CheckpointError("malformed optimizer record " + m.first);
      }
      const std::string name = m.first.substr(2);
      st.m.emplace(name, std::move(m.second));
      st.v.emplace(name, std::move(v.second));
    }
    opt = std::move(st);
  }
  if (r.pos() != body.size()) {
    throw CheckpointChecksumError("checkpoint has " + std::to_string(body.size() - r.pos()) +
                                  " unexpected trailing bytes");
  }
  Reader tail(bytes.subspan(bytes.size() - 4));
  const auto stored_crc = tail.uint<std::uint32_t>();
  const auto actual_crc = crc32(body);
  if (stored_crc != actual_crc) {
    throw CheckpointChecksumError("checkpoint checksum mismatch (stored " +
                                  std::to_string(stored_crc) + ", computed " +
                                  std::to_string(actual_crc) + ")");
  }

  const auto layout = tensor_layout(h.config.arch);
  if (h.mode == CheckpointMode::full) {
    if (records.size() != layout.size()) {
      throw CheckpointError("full checkpoint holds " + std::to_string(records.size()) +
                            " tensors, architecture has " + std::to_string(layout.size()));
    }
    std::vector<Tensor> tensors;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (records[i].first != layout[i].name) {
        throw CheckpointError("tensor " + std::to_string(i) + " is " + records[i].first +
                              ", expected " + layout[i].name);
      }
      tensors.push_back({layout[i], std::move(records[i].second),
                         tensor_trainable(h.config, layout[i])});
    }
    EsnmtModel model(h.config, ParameterStore(std::move(tensors)));
    return {h, std::move(model), std::move(opt)};
  }

  EsnmtModel model = build_model(h.config);
  auto& params = model.params();
  std::set<std::string> seen;
  for (auto& [name, value] : records) {
    if (!params.contains(name)) throw CheckpointError("unknown tensor " + name);
    Tensor& t = params.at(params.index(name));
    if (!t.trainable) {
      throw CheckpointError("compressed checkpoint contains frozen tensor " + name);
    }
    if (value.rows() != t.value.rows() || value.cols() != t.value.cols()) {
      throw CheckpointError("tensor " + name + " stored as " + value.shape_string() +
                            ", expected " + t.value.shape_string());
    }
    t.value = std::move(value);
    seen.insert(name);
  }
  for (const auto& name : params.trainable_names()) {
    if (!seen.count(name)) throw CheckpointError("compressed checkpoint lacks tensor " + name);
  }
  return {h, std::move(model), std::nullopt};
}

std::uint64_t checkpoint_size(const ModelConfig& config, CheckpointMode mode) {
  Writer w;
  write_header(w, CheckpointHeader{kCheckpointVersion, mode, config, 0, false, 0});
  std::uint64_t total = w.buffer().size() + 4;
  for (const auto& t : tensor_layout(config.arch)) {
    if (mode == CheckpointMode::full || tensor_trainable(config, t)) {
      total += record_size(t.name, t.count());
    }
  }
  return total;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool VerifyReport::identical() const { return differing() == 0; }

std::size_t VerifyReport::differing() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += !t.bit_equal;
  return n;
}

VerifyReport verify_models(const EsnmtModel& a, const EsnmtModel& b) {
  const auto& pa = a.params();
  const auto& pb = b.params();
  if (pa.size() != pb.size()) {
    throw DimensionError("verify: models have " + std::to_string(pa.size()) + " and " +
                         std::to_string(pb.size()) + " tensors");
  }
  VerifyReport report;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto& ta = pa.at(i);
    const auto& tb = pb.at(i);
    if (ta.shape.name != tb.shape.name || ta.value.rows() != tb.value.rows() ||
        ta.value.cols() != tb.value.cols()) {
      throw DimensionError("verify: tensor " + ta.shape.name + " " + ta.value.shape_string() +
                           " vs " + tb.shape.name + " " + tb.value.shape_string());
    }
    report.tensors.push_back(
        {ta.shape.name, max_abs_diff(ta.value, tb.value), bit_equal(ta.value, tb.value)});
  }
  return report;
}

}  // namespace esnmt
