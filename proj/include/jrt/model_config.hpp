#pragma once

#include <cstddef>
#include <cstdint>

namespace jrt {

enum class RelTargetSpace { Exp, Raw };

struct ModelConfig {
  std::size_t layers = 4;        // L
  std::size_t dim = 128;         // D
  std::size_t heads = 8;         // D_H
  std::size_t key_dim = 128;     // D_K, split evenly across heads
  std::size_t quad_dim = 128;    // D', per-head width of the quadratic relation score
  std::size_t ffn_dim = 256;     // D_ff
  std::size_t max_persons = 8;   // N_max
  std::size_t joints = 13;       // J
  std::size_t history = 16;      // T_h
  std::size_t future = 14;       // T_f

  std::size_t head_dim() const { return key_dim / heads; }
  std::size_t message_dim() const { return 4 * dim; }

  // Throws ConfigError.
  void validate() const;

  // N=2, J=3, T_h=4, T_f=2, D=8, D_H=2, L=2.
  static ModelConfig tiny();
};

struct LossWeights {
  double joint = 10;     // lambda_J
  double relation = 10;  // lambda_R
};

}  // namespace jrt
