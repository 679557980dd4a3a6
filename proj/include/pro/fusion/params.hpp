#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pro/core/aligned.hpp"
#include "pro/core/errors.hpp"

namespace pro::fusion {

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  AlignedVector<T> value;
  AlignedVector<T> grad;  // same shape as value

  std::size_t size() const { return value.size(); }
};

// Flat, ordered collection of named trainable arrays with paired gradient
// accumulators.
template <typename T>
class ParameterStore {
 public:
  // Adds a zero-filled parameter; names must be unique.
  std::size_t add(std::string name, std::vector<int> shape);

  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const;

  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  Parameter<T>& at(const std::string& name) { return params_[index(name)]; }
  const Parameter<T>& at(const std::string& name) const { return params_[index(name)]; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // Adds other's gradients into this store's gradients (same layout).
  void accumulate_grad(const ParameterStore& other);
  bool same_layout(const ParameterStore& other) const;

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& p : params_) {
      const std::size_t i = out.add(p.name, p.shape);
      for (std::size_t k = 0; k < p.size(); ++k) {
        out[i].value[k] = static_cast<U>(p.value[k]);
        out[i].grad[k] = static_cast<U>(p.grad[k]);
      }
    }
    return out;
  }

  bool operator==(const ParameterStore& o) const;

 private:
  std::vector<Parameter<T>> params_;
};

// Checkpoint container: the magic "PRO1", then one record per parameter
// until end of file: u32 name length, name bytes, u32 dim count, u32 dims,
// f32 values. Integers and floats are little-endian. Gradients are not
// stored.
void save_parameters(const ParameterStore<float>& store, const std::filesystem::path& path);
ParameterStore<float> load_parameters(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_parameters(const ParameterStore<float>& store);
ParameterStore<float> deserialize_parameters(const std::vector<std::uint8_t>& bytes);

}  // namespace pro::fusion
