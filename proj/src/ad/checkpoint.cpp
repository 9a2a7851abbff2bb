#include "ad/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "common/errors.hpp"
#include "pc/point_cloud.hpp"

namespace cd::ad {

namespace {

constexpr char kMagic[8] = {'C', 'D', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError(source_ + ": truncated checkpoint");
  }

  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_parameters(const ParameterStore& store) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, p] : store) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) put<std::uint64_t>(out, d);
    for (double v : p.value.values()) put<double>(out, v);
  }
  return out;
}

ParameterStore deserialize_parameters(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError(source + ": not a checkpoint file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  ParameterStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = in.get<std::uint32_t>();
    std::string name = in.bytes(name_len);
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw DataError(source + ": implausible rank for '" + name + "'");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(in.get<std::uint64_t>());
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = in.get<double>();
    store.add(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw DataError(source + ": trailing bytes after checkpoint entries");
  return store;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
  pc::write_text_file(path, serialize_parameters(store));
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  return deserialize_parameters(pc::read_text_file(path), path.string());
}

void assign_parameters(ParameterStore& target, const ParameterStore& loaded) {
  if (target.size() != loaded.size()) {
    throw DataError("checkpoint has " + std::to_string(loaded.size()) +
                    " parameters, model expects " + std::to_string(target.size()));
  }
  for (auto& [name, p] : target) {
    if (!loaded.contains(name)) throw DataError("checkpoint lacks parameter '" + name + "'");
    const Tensor& v = loaded.get(name).value;
    if (v.shape() != p.value.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " + shape_string(v.shape()) +
                      ", model expects " + shape_string(p.value.shape()));
    }
    p.value = v;
  }
}

}  // namespace cd::ad
