#include "pro/fusion/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pro::fusion {

template <typename T>
std::size_t ParameterStore<T>::add(std::string name, std::vector<int> shape) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw ShapeError("parameter '" + name + "' has a non-positive dimension");
    n *= static_cast<std::size_t>(d);
  }
  Parameter<T> p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.value.assign(n, T(0));
  p.grad.assign(n, T(0));
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <typename T>
std::size_t ParameterStore<T>::index(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw ConfigError("unknown parameter '" + name + "'");
}

template <typename T>
bool ParameterStore<T>::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
bool ParameterStore<T>::same_layout(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name != other.params_[i].name || params_[i].shape != other.params_[i].shape)
      return false;
  return true;
}

template <typename T>
void ParameterStore<T>::accumulate_grad(const ParameterStore& other) {
  if (!same_layout(other)) throw ShapeError("accumulate_grad: parameter layouts differ");
  for (std::size_t i = 0; i < params_.size(); ++i)
    for (std::size_t k = 0; k < params_[i].size(); ++k) params_[i].grad[k] += other.params_[i].grad[k];
}

template <typename T>
bool ParameterStore<T>::operator==(const ParameterStore& o) const {
  if (!same_layout(o)) return false;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].value != o.params_[i].value) return false;
  return true;
}

template class ParameterStore<float>;
template class ParameterStore<double>;

namespace {

constexpr char kMagic[4] = {'P', 'R', 'O', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  bool done() const { return pos_ >= bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32("parameter value");
    return std::bit_cast<float>(bits);
  }
  std::string str(std::size_t n) {
    need(n, "parameter name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size())
      throw ParseError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                       std::to_string(pos_));
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_parameters(const ParameterStore<float>& store) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  for (const auto& p : store) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.value) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ParameterStore<float> deserialize_parameters(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw VersionError("not a PRO1 checkpoint (bad magic)");
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  ParameterStore<float> store;
  while (!r.done()) {
    const std::uint32_t name_len = r.u32("name length");
    if (name_len == 0 || name_len > 4096)
      throw ParseError("implausible parameter name length at byte " + std::to_string(r.pos() + 4));
    std::string name = r.str(name_len);
    const std::uint32_t ndim = r.u32("dim count");
    if (ndim > 8) throw ParseError("implausible dim count for '" + name + "'");
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint32_t v = r.u32("dims");
      if (v == 0 || v > (1u << 24)) throw ParseError("implausible dimension for '" + name + "'");
      shape.push_back(static_cast<int>(v));
      n *= v;
    }
    r.need(n * 4, "parameter values");
    const std::size_t i = store.add(name, shape);
    for (std::size_t k = 0; k < n; ++k) store[i].value[k] = r.f32();
  }
  return store;
}

void save_parameters(const ParameterStore<float>& store, const std::filesystem::path& path) {
  const auto bytes = serialize_parameters(store);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

ParameterStore<float> load_parameters(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_parameters(bytes);
}

}  // namespace pro::fusion
