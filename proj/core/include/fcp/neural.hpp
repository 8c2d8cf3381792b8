#pragma once

#include <span>
#include <vector>

#include "fcp/policy.hpp"

namespace fcp::neural {

// Offsets of each weight block inside NeuralWeights::values. Matrices are
// column-major (rows x cols) and multiply row-vector activations from the
// right: x (1 x in) * W (in x out).
struct Layout {
  struct LayerOffsets {
    std::size_t norm1, wq, wk, wv, wo, norm2, w1, b1, w2, b2;
  };
  std::size_t tok_emb = 0;
  std::size_t pos_emb = 0;
  std::vector<LayerOffsets> layers;
  std::size_t norm_f = 0;
  std::size_t w_out = 0;
  std::size_t b_out = 0;
  std::size_t total = 0;

  static Layout of(const NeuralShape& shape);
};

void initialize(NeuralWeights& w, Rng& rng);

// Summed NLL of input[target_start..] given the preceding tokens. When
// per_token is set it receives log p for each target token; when grad is set
// the gradient of scale * (summed NLL) is added into it.
double sequence_nll(const NeuralWeights& w, std::span<const Token> input, std::size_t target_start,
                    std::vector<double>* per_token, std::vector<double>* grad, double scale);

// Logits for the token following `input`.
std::vector<double> next_logits(const NeuralWeights& w, std::span<const Token> input);

}  // namespace fcp::neural
