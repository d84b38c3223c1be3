#include "hdnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "config_json.hpp"
#include "hdnn/errors.hpp"

namespace hdnn {

namespace {

constexpr char kMagic[4] = {'H', 'D', 'N', 'N'};
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const char* bytes, std::size_t n) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= kFnvPrime;
  }
  return h;
}

// All writes go through a growing buffer so the trailing checksum can cover
// every preceding byte. Serialization is little-endian; this code assumes a
// little-endian host (checked once at save/load).
bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

struct Writer {
  std::string buf;

  template <typename T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    buf.append(raw, sizeof(T));
  }
  void put_bytes(const char* data, std::size_t n) { buf.append(data, n); }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    buf.append(s);
  }
  void put_tensor(const std::string& name, const Tensor& t) {
    put_string(name);
    put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(d);
    put_bytes(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
  }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("checkpoint truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(buf.data() + pos, n);
    pos += n;
    return s;
  }
  Tensor get_tensor() {
    const auto rank = get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw CheckpointError("checkpoint record has invalid rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<std::size_t>(get<std::uint64_t>());
      if (shape[i] == 0) throw CheckpointError("checkpoint record has a zero dimension");
      count *= shape[i];
    }
    need(count * sizeof(double));
    std::vector<double> values(count);
    std::memcpy(values.data(), buf.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
    Tensor t(shape);
    for (std::size_t i = 0; i < count; ++i) t[i] = values[i];
    return t;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const HybridModel& model,
                     const AdamState* optimizer, const DatasetOptions* dataset_options) {
  if (!host_is_little_endian()) {
    throw CheckpointError("checkpoint format requires a little-endian host");
  }
  auto& m = const_cast<HybridModel&>(model);

  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(detail::model_config_to_text(model.config()));

  std::vector<std::pair<std::string, Tensor>> records;
  for (const ParamRef& p : m.parameters()) records.emplace_back("p:" + p.name, *p.value);
  for (const BufferRef& b : m.buffers()) records.emplace_back("b:" + b.name, *b.value);

  if (model.normalizer.has_value()) {
    const Normalizer& n = *model.normalizer;
    records.emplace_back("n:numeric_mean", Tensor({std::max<std::size_t>(n.numeric_mean.size(), 1)},
                                                  n.numeric_mean.empty()
                                                      ? std::vector<double>{0.0}
                                                      : n.numeric_mean));
    records.emplace_back("n:numeric_std", Tensor({std::max<std::size_t>(n.numeric_std.size(), 1)},
                                                 n.numeric_std.empty() ? std::vector<double>{1.0}
                                                                       : n.numeric_std));
    records.emplace_back("n:numeric_width",
                         Tensor({1}, {static_cast<double>(n.numeric_mean.size())}));
    records.emplace_back(
        "n:channel_mean",
        Tensor({kCurveChannelCount},
               std::vector<double>(n.channel_mean.begin(), n.channel_mean.end())));
    records.emplace_back(
        "n:channel_std",
        Tensor({kCurveChannelCount},
               std::vector<double>(n.channel_std.begin(), n.channel_std.end())));
    records.emplace_back("n:label", Tensor({2}, {n.label_mean, n.label_std}));
  }

  if (dataset_options != nullptr) {
    records.emplace_back("meta:pipeline",
                         Tensor({2}, {static_cast<double>(dataset_options->resample_length),
                                      dataset_options->append_curve_means ? 1.0 : 0.0}));
  }

  if (optimizer != nullptr && optimizer->initialized()) {
    const auto params = m.parameters();
    const auto& fm = optimizer->first_moments();
    const auto& sm = optimizer->second_moments();
    if (fm.size() != params.size()) {
      throw CheckpointError("optimizer state does not match the model's parameter list");
    }
    records.emplace_back("o:scalars",
                         Tensor({5}, {static_cast<double>(optimizer->step_count()),
                                      optimizer->config().learning_rate, optimizer->config().beta1,
                                      optimizer->config().beta2, optimizer->config().epsilon}));
    for (std::size_t i = 0; i < params.size(); ++i) {
      records.emplace_back("o:m:" + params[i].name, fm[i]);
      records.emplace_back("o:v:" + params[i].name, sm[i]);
    }
  }

  w.put<std::uint64_t>(records.size());
  for (const auto& [name, tensor] : records) w.put_tensor(name, tensor);
  w.put<std::uint64_t>(fnv1a(w.buf.data(), w.buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  if (!host_is_little_endian()) {
    throw CheckpointError("checkpoint format requires a little-endian host");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 + 4 + 8 + 8 + 8) throw CheckpointError("checkpoint truncated");
  const std::uint64_t stored = [&] {
    std::uint64_t v;
    std::memcpy(&v, buf.data() + buf.size() - 8, 8);
    return v;
  }();
  if (stored != fnv1a(buf.data(), buf.size() - 8)) {
    throw CheckpointError("checkpoint corrupt: checksum mismatch");
  }

  Reader r{buf};
  char magic[4];
  r.need(4);
  std::memcpy(magic, buf.data(), 4);
  r.pos = 4;
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version > kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is newer than supported version " +
                          std::to_string(kCheckpointVersion));
  }

  const ModelConfig config = detail::model_config_from_text(r.get_string());
  const auto record_count = r.get<std::uint64_t>();
  std::map<std::string, Tensor> records;
  for (std::uint64_t i = 0; i < record_count; ++i) {
    std::string name = r.get_string();
    Tensor t = r.get_tensor();
    if (!records.emplace(std::move(name), std::move(t)).second) {
      throw CheckpointError("checkpoint has a duplicate record");
    }
  }
  if (r.pos != buf.size() - 8) {
    throw CheckpointError("checkpoint corrupt: trailing bytes before checksum");
  }

  LoadedCheckpoint result{HybridModel(config), std::nullopt, std::nullopt};
  HybridModel& model = result.model;

  auto take = [&records](const std::string& name) -> Tensor {
    auto it = records.find(name);
    if (it == records.end()) throw CheckpointError("checkpoint is missing record " + name);
    Tensor t = std::move(it->second);
    records.erase(it);
    return t;
  };

  for (const ParamRef& p : model.parameters()) {
    Tensor t = take("p:" + p.name);
    if (!t.same_shape(*p.value)) {
      throw CheckpointError("checkpoint record p:" + p.name + " has shape " +
                            shape_to_string(t.shape()) + ", model expects " +
                            shape_to_string(p.value->shape()));
    }
    *p.value = std::move(t);
  }
  for (const BufferRef& b : model.buffers()) {
    Tensor t = take("b:" + b.name);
    if (!t.same_shape(*b.value)) {
      throw CheckpointError("checkpoint record b:" + b.name + " shape mismatch");
    }
    *b.value = std::move(t);
  }

  if (records.count("n:label")) {
    Normalizer n;
    const Tensor width = take("n:numeric_width");
    const auto d = static_cast<std::size_t>(width[0]);
    Tensor nm = take("n:numeric_mean");
    Tensor ns = take("n:numeric_std");
    n.numeric_mean.assign(nm.data(), nm.data() + d);
    n.numeric_std.assign(ns.data(), ns.data() + d);
    const Tensor cm = take("n:channel_mean");
    const Tensor cs = take("n:channel_std");
    if (cm.size() != kCurveChannelCount || cs.size() != kCurveChannelCount) {
      throw CheckpointError("checkpoint normalizer channel statistics have the wrong size");
    }
    for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
      n.channel_mean[c] = cm[c];
      n.channel_std[c] = cs[c];
    }
    const Tensor label = take("n:label");
    if (label.size() != 2) throw CheckpointError("checkpoint normalizer label record is malformed");
    n.label_mean = label[0];
    n.label_std = label[1];
    model.normalizer = std::move(n);
  }

  if (records.count("meta:pipeline")) {
    const Tensor meta = take("meta:pipeline");
    if (meta.size() != 2) throw CheckpointError("checkpoint pipeline record is malformed");
    DatasetOptions opts;
    opts.resample_length = static_cast<std::size_t>(meta[0]);
    opts.append_curve_means = meta[1] != 0.0;
    result.dataset_options = opts;
  }

  if (records.count("o:scalars")) {
    const Tensor scalars = take("o:scalars");
    if (scalars.size() != 5) throw CheckpointError("checkpoint optimizer scalars are malformed");
    AdamConfig cfg;
    cfg.learning_rate = scalars[1];
    cfg.beta1 = scalars[2];
    cfg.beta2 = scalars[3];
    cfg.epsilon = scalars[4];
    AdamState state(cfg);
    std::vector<Tensor> first, second;
    for (const ParamRef& p : model.parameters()) {
      first.push_back(take("o:m:" + p.name));
      second.push_back(take("o:v:" + p.name));
    }
    state.restore(static_cast<std::uint64_t>(scalars[0]), std::move(first), std::move(second));
    result.optimizer = std::move(state);
  }

  if (!records.empty()) {
    throw CheckpointError("checkpoint has unknown record " + records.begin()->first);
  }
  return result;
}

}  // namespace hdnn
