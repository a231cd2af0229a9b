#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "cavkit/matrix.hpp"

namespace cavkit::sae {

// TopK sparse autoencoder. Encoding centers by b_dec; the reconstruction
// carries no decoder bias.
struct SaeParams {
  Matrix W_enc;  // m x d
  Vector b_enc;  // m
  Matrix W_dec;  // d x m
  Vector b_dec;  // d
  std::size_t k = 1;
  double scale = 1.0;  // store normalization applied before encoding

  std::size_t input_dim() const noexcept { return W_enc.cols(); }
  std::size_t latent_dim() const noexcept { return W_enc.rows(); }

  // Throws InvalidArgument / NonFiniteValue when shapes or values are off.
  void validate() const;

  // W_enc = W_dec = I, zero biases, k = m = d.
  static SaeParams identity(std::size_t d);
};

struct NormalizedStore {
  Matrix data;
  double scale = 1.0;
};

// Scales M so the root-mean-square row norm equals sqrt(d). Throws
// AllZeroRows.
NormalizedStore normalize_store(const Matrix& m);

// z = TopK(ReLU(W_enc (h - b_dec) + b_enc)); ties go to the lower index.
// Returned dense, length m. Throws DimensionMismatch.
Vector encode(const SaeParams& params, std::span<const double> h);
Matrix encode_matrix(const SaeParams& params, const Matrix& m);

// W_dec z. Throws DimensionMismatch.
Vector decode(const SaeParams& params, std::span<const double> z);

struct TrainOptions {
  std::size_t m = 64;
  std::size_t k = 8;
  std::size_t epochs = 200;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on the mean (over rows) squared reconstruction
// error. Decoder columns are renormalized after every step and b_dec is held
// at the data mean. loss_history, when given, receives the loss before each
// step and the final loss. Throws NonFiniteLoss.
SaeParams train_sae(const Matrix& data, const TrainOptions& options,
                    std::vector<double>* loss_history = nullptr);

// sum ||W_dec z_i - h_i||^2 / sum ||h_i||^2 over all rows.
double relative_mse(const SaeParams& params, const Matrix& data);

// Per-latent fraction of the selected rows with z_j > 0. Throws
// EmptySelection.
Vector activation_density(const SaeParams& params, const Matrix& m,
                          std::span<const std::size_t> rows);
// Same, from already-encoded latents.
Vector activation_density(const Matrix& z, std::span<const std::size_t> rows);

// Directory layout: W_enc.cavb, b_enc.cavb, W_dec.cavb, b_dec.cavb, meta.
void save_bundle(const SaeParams& params, const std::filesystem::path& dir);
SaeParams load_bundle(const std::filesystem::path& dir);

}  // namespace cavkit::sae
