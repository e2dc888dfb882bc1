#include "dcop/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dcop::nn {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'P', 'M'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    std::make_unsigned_t<T> bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes_.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
  void put_float(float value) { put(std::bit_cast<std::uint32_t>(value)); }
  void put_floats(const Vector<float>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put_float(v[i]);
  }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) throw ParseError(std::string("checkpoint truncated reading ") + what);
    std::make_unsigned_t<T> bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      bits |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  }
  Vector<float> floats(std::size_t count, const char* what) {
    if (remaining() < count * 4) throw ParseError(std::string("checkpoint truncated reading ") + what);
    Vector<float> v(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) v[static_cast<Eigen::Index>(i)] = std::bit_cast<float>(get<std::uint32_t>(what));
    return v;
  }
  bool magic() {
    if (bytes_.size() < 4) return false;
    pos_ = 4;
    return std::memcmp(bytes_.data(), kMagic, 4) == 0;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const AdamState<float>* optimizer, const CheckpointOptions& options) {
  if (!(options.output_scale > 0)) throw InputError("output scale must be positive");
  const auto& arch = params.arch();
  const bool moments = optimizer != nullptr && optimizer->first.size() == params.size();
  Writer w;
  w.raw(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(arch.input_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(arch.num_layers()));
  for (const auto& s : arch.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.heads));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.channels));
  }
  w.put<std::int64_t>(optimizer != nullptr ? optimizer->step : 0);
  w.put<std::uint32_t>((moments ? 1U : 0U) | (options.normalize_costs ? 2U : 0U));
  w.put(std::bit_cast<std::uint64_t>(options.output_scale));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(params.size()));
  w.put_floats(params.flat());
  if (moments) {
    w.put_floats(optimizer->first);
    w.put_floats(optimizer->second);
  }
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  }
  nlohmann::json manifest;
  manifest["format"] = "DCPM";
  manifest["version"] = kCheckpointVersion;
  manifest["input_dim"] = arch.input_dim;
  for (const auto& s : arch.layers) manifest["layers"].push_back({{"heads", s.heads}, {"channels", s.channels}});
  manifest["step"] = optimizer != nullptr ? optimizer->step : 0;
  manifest["parameter_count"] = params.size();
  manifest["has_optimizer_state"] = moments;
  manifest["normalize_costs"] = options.normalize_costs;
  manifest["output_scale"] = options.output_scale;
  manifest["order"] = "per layer, per head: W (channels x input, row-major), a_src, a_dst; then readout weights, bias";
  std::ofstream(path.string() + ".json") << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (!r.magic()) throw ParseError(path.string() + ": not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) throw ParseError(path.string() + ": unsupported version " + std::to_string(version));
  Architecture arch;
  arch.input_dim = static_cast<int>(r.get<std::uint32_t>("input dim"));
  const auto layers = r.get<std::uint32_t>("layer count");
  if (layers == 0 || layers > 64) throw ParseError(path.string() + ": implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) {
    LayerShape s;
    s.heads = static_cast<int>(r.get<std::uint32_t>("heads"));
    s.channels = static_cast<int>(r.get<std::uint32_t>("channels"));
    if (s.heads < 1 || s.channels < 1 || s.heads > 4096 || s.channels > 4096) {
      throw ParseError(path.string() + ": implausible layer shape");
    }
    arch.layers.push_back(s);
  }
  Checkpoint ck{ModelParams<float>(arch), 0, std::nullopt, std::nullopt, false, 1};
  ck.step = r.get<std::int64_t>("step");
  const auto flags = r.get<std::uint32_t>("flags");
  if ((flags & ~3U) != 0) throw ParseError(path.string() + ": unknown flags");
  ck.normalize_costs = (flags & 2U) != 0;
  ck.output_scale = std::bit_cast<double>(r.get<std::uint64_t>("output scale"));
  if (!(ck.output_scale > 0)) throw ParseError(path.string() + ": output scale must be positive");
  const auto count = r.get<std::uint64_t>("parameter count");
  if (count != static_cast<std::uint64_t>(ck.params.size())) {
    throw ParseError(path.string() + ": parameter count does not match the architecture");
  }
  ck.params.flat() = r.floats(count, "parameters");
  if ((flags & 1U) != 0) {
    ck.first = r.floats(count, "first moments");
    ck.second = r.floats(count, "second moments");
  }
  if (r.remaining() != 0) throw ParseError(path.string() + ": trailing bytes after payload");
  return ck;
}

}  // namespace dcop::nn
