#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jrt/tensor.hpp"

namespace jrt {

// Ordered collection of named weight blocks. Insertion order is the stable
// order used for flattening, checkpoints, and gradient reports.
template <std::floating_point T>
class ParamSet {
 public:
  struct Block {
    std::string name;
    Tensor<T> value;
  };

  void add(std::string name, Tensor<T> value) {
    if (index_.contains(name)) throw InvalidArgument("params: duplicate block " + name);
    index_.emplace(name, blocks_.size());
    blocks_.push_back({std::move(name), std::move(value)});
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Tensor<T>& operator[](const std::string& name) { return blocks_[index_of(name)].value; }
  const Tensor<T>& operator[](const std::string& name) const {
    return blocks_[index_of(name)].value;
  }

  std::vector<Block>& blocks() noexcept { return blocks_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.value.size();
    return n;
  }

  // Same names and shapes, all zeros.
  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& b : blocks_) out.add(b.name, Tensor<T>(b.value.shape()));
    return out;
  }

  std::vector<T> flatten() const {
    std::vector<T> out;
    out.reserve(total_elements());
    for (const auto& b : blocks_) out.insert(out.end(), b.value.data().begin(), b.value.data().end());
    return out;
  }

  template <std::floating_point U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& b : blocks_) out.add(b.name, b.value.template cast<U>());
    return out;
  }

  bool same_layout(const ParamSet& other) const {
    if (blocks_.size() != other.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].name != other.blocks_[i].name ||
          blocks_[i].value.shape() != other.blocks_[i].value.shape()) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("params: no block named " + name);
    return it->second;
  }

  std::vector<Block> blocks_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace jrt
