#include "cavkit/sae.hpp"

#include <algorithm>
#include <cmath>

#include "cavkit/error.hpp"
#include "cavkit/io.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/rng.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit::sae {
namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, std::string(what) + " is not finite");
  }
}

// In-place TopK over a post-ReLU vector; returns the surviving indices in
// ascending order.
IndexSet keep_top_k(std::span<double> z, std::size_t k) {
  IndexSet active;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] > 0.0) {
      active.push_back(j);
    } else {
      z[j] = 0.0;
    }
  }
  if (active.size() > k) {
    auto by_value = [&](std::size_t a, std::size_t b) {
      return z[a] > z[b] || (z[a] == z[b] && a < b);
    };
    std::partial_sort(active.begin(), active.begin() + static_cast<long>(k), active.end(), by_value);
    for (std::size_t i = k; i < active.size(); ++i) z[active[i]] = 0.0;
    active.resize(k);
    std::sort(active.begin(), active.end());
  }
  return active;
}

// Pre-activations for one row into `z`, then ReLU + TopK.
IndexSet encode_into(const SaeParams& p, std::span<const double> h, Vector& centered,
                     std::span<double> z) {
  const std::size_t d = p.input_dim();
  centered.resize(d);
  for (std::size_t j = 0; j < d; ++j) centered[j] = h[j] - p.b_dec[j];
  simd::active().gemv(p.W_enc.values().data(), p.latent_dim(), d, centered.data(), z.data());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] += p.b_enc[j];
  return keep_top_k(z, p.k);
}

void normalize_columns(Matrix& rows_as_columns) {
  // rows of the transposed decoder are the decoder columns
  for (std::size_t j = 0; j < rows_as_columns.rows(); ++j) {
    auto col = rows_as_columns.row(j);
    const double n = std::sqrt(simd::dot(col, col));
    if (n > kZeroNormTolerance) {
      for (double& x : col) x /= n;
    }
  }
}

}  // namespace

void SaeParams::validate() const {
  const std::size_t m = W_enc.rows();
  const std::size_t d = W_enc.cols();
  if (m == 0 || d == 0) fail(ErrorCode::InvalidArgument, "SAE has an empty encoder");
  if (W_dec.rows() != d || W_dec.cols() != m) fail(ErrorCode::InvalidArgument, "W_dec must be d x m");
  if (b_enc.size() != m) fail(ErrorCode::InvalidArgument, "b_enc must have length m");
  if (b_dec.size() != d) fail(ErrorCode::InvalidArgument, "b_dec must have length d");
  if (k < 1 || k > m) fail(ErrorCode::InvalidArgument, "SAE k must be in [1, m]");
  if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorCode::InvalidArgument, "SAE scale must be > 0");
  check_finite(W_enc.values(), "W_enc");
  check_finite(W_dec.values(), "W_dec");
  check_finite(b_enc, "b_enc");
  check_finite(b_dec, "b_dec");
}

SaeParams SaeParams::identity(std::size_t d) {
  SaeParams p;
  p.W_enc = Matrix::identity(d);
  p.W_dec = Matrix::identity(d);
  p.b_enc.assign(d, 0.0);
  p.b_dec.assign(d, 0.0);
  p.k = d;
  return p;
}

NormalizedStore normalize_store(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) fail(ErrorCode::InvalidArgument, "empty store");
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) total += simd::dot(m.row(i), m.row(i));
  const double mean_sq = total / static_cast<double>(m.rows());
  if (!(mean_sq > 0.0)) fail(ErrorCode::AllZeroRows, "every row is zero");
  NormalizedStore out;
  out.scale = std::sqrt(static_cast<double>(m.cols())) / std::sqrt(mean_sq);
  out.data = m.scaled(out.scale);
  return out;
}

Vector encode(const SaeParams& params, std::span<const double> h) {
  if (h.size() != params.input_dim()) fail(ErrorCode::DimensionMismatch, "h length != SAE d");
  Vector z(params.latent_dim());
  Vector centered;
  encode_into(params, h, centered, z);
  return z;
}

Matrix encode_matrix(const SaeParams& params, const Matrix& m) {
  if (m.cols() != params.input_dim()) fail(ErrorCode::DimensionMismatch, "store width != SAE d");
  Matrix out(m.rows(), params.latent_dim());
  Vector centered;
  for (std::size_t i = 0; i < m.rows(); ++i) encode_into(params, m.row(i), centered, out.row(i));
  return out;
}

Vector decode(const SaeParams& params, std::span<const double> z) {
  if (z.size() != params.latent_dim()) fail(ErrorCode::DimensionMismatch, "z length != SAE m");
  Vector out(params.input_dim());
  simd::active().gemv(params.W_dec.values().data(), params.input_dim(), params.latent_dim(),
                      z.data(), out.data());
  return out;
}

SaeParams train_sae(const Matrix& data, const TrainOptions& options,
                    std::vector<double>* loss_history) {
  validate_embeddings(data);
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const std::size_t m = options.m;
  if (options.k < 1 || options.k > m) fail(ErrorCode::InvalidArgument, "SAE k must be in [1, m]");

  Rng rng(mix_seed(options.seed, 0x5AE));
  const double init_std = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix dec_t(m, d);  // decoder columns as rows
  for (double& x : dec_t.values()) x = init_std * rng.normal();
  normalize_columns(dec_t);

  SaeParams p;
  p.W_enc = dec_t;
  p.b_enc.assign(m, 0.0);
  p.b_dec = mean_rows(data, all_rows(n));
  p.k = options.k;

  const auto& kern = simd::active();
  Matrix grad_enc(m, d);
  Matrix grad_dec_t(m, d);
  Vector grad_b(m);
  Vector centered;
  Vector z(m);
  Vector residual(d);
  const double two_over_n = 2.0 / static_cast<double>(n);

  auto pass = [&](bool with_grad) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto h = data.row(i);
      const IndexSet act = encode_into(p, h, centered, z);
      for (std::size_t j = 0; j < d; ++j) residual[j] = -h[j];
      for (std::size_t j : act) kern.axpy(z[j], dec_t.row(j).data(), residual.data(), d);
      loss += kern.dot(residual.data(), residual.data(), d);
      if (!with_grad) continue;
      for (std::size_t j : act) {
        kern.axpy(two_over_n * z[j], residual.data(), grad_dec_t.row(j).data(), d);
        const double gz = two_over_n * kern.dot(dec_t.row(j).data(), residual.data(), d);
        kern.axpy(gz, centered.data(), grad_enc.row(j).data(), d);
        grad_b[j] += gz;
      }
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "SAE loss is not finite");
    return loss;
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad_enc.values().begin(), grad_enc.values().end(), 0.0);
    std::fill(grad_dec_t.values().begin(), grad_dec_t.values().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    const double loss = pass(true);
    if (loss_history != nullptr) loss_history->push_back(loss);
    const double lr = options.learning_rate;
    kern.axpy(-lr, grad_enc.values().data(), p.W_enc.values().data(), m * d);
    kern.axpy(-lr, grad_dec_t.values().data(), dec_t.values().data(), m * d);
    kern.axpy(-lr, grad_b.data(), p.b_enc.data(), m);
    normalize_columns(dec_t);
  }
  if (loss_history != nullptr) loss_history->push_back(pass(false));
  p.W_dec = dec_t.transposed();
  return p;
}

double relative_mse(const SaeParams& params, const Matrix& data) {
  if (data.cols() != params.input_dim()) fail(ErrorCode::DimensionMismatch, "store width != SAE d");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto h = data.row(i);
    const Vector rec = decode(params, encode(params, h));
    for (std::size_t j = 0; j < h.size(); ++j) {
      err += (rec[j] - h[j]) * (rec[j] - h[j]);
      ref += h[j] * h[j];
    }
  }
  if (!(ref > 0.0)) fail(ErrorCode::AllZeroRows, "reference store is zero");
  return err / ref;
}

Vector activation_density(const Matrix& z, std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorCode::EmptySelection, "no rows selected");
  check_indices(rows, z.rows());
  Vector out(z.cols(), 0.0);
  for (std::size_t i : rows) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] > 0.0 ? 1.0 : 0.0;
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

Vector activation_density(const SaeParams& params, const Matrix& m,
                          std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorCode::EmptySelection, "no rows selected");
  check_indices(rows, m.rows());
  return activation_density(encode_matrix(params, m.select_rows(rows)), all_rows(rows.size()));
}

void save_bundle(const SaeParams& params, const std::filesystem::path& dir) {
  params.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
  io::save_matrix(params.W_enc, dir / "W_enc.cavb");
  io::save_matrix(io::row_vector(params.b_enc), dir / "b_enc.cavb");
  io::save_matrix(params.W_dec, dir / "W_dec.cavb");
  io::save_matrix(io::row_vector(params.b_dec), dir / "b_dec.cavb");
  io::write_key_values({{"k", std::to_string(params.k)},
                        {"m", std::to_string(params.latent_dim())},
                        {"scale", io::format_double(params.scale)}},
                       dir / "meta");
}

SaeParams load_bundle(const std::filesystem::path& dir) {
  SaeParams p;
  p.W_enc = io::load_matrix(dir / "W_enc.cavb");
  p.W_dec = io::load_matrix(dir / "W_dec.cavb");
  const Matrix b_enc = io::load_matrix(dir / "b_enc.cavb");
  const Matrix b_dec = io::load_matrix(dir / "b_dec.cavb");
  if (b_enc.rows() != 1 || b_dec.rows() != 1) {
    fail(ErrorCode::InvalidArgument, "bias tensors must be stored as 1 x len");
  }
  p.b_enc.assign(b_enc.values().begin(), b_enc.values().end());
  p.b_dec.assign(b_dec.values().begin(), b_dec.values().end());
  const auto meta = io::read_key_values(dir / "meta");
  const std::string* k = io::find_value(meta, "k");
  const std::string* m = io::find_value(meta, "m");
  const std::string* scale = io::find_value(meta, "scale");
  if (k == nullptr || m == nullptr) fail(ErrorCode::ParseError, "SAE meta needs k= and m=");
  p.k = static_cast<std::size_t>(io::parse_double(*k));
  if (static_cast<std::size_t>(io::parse_double(*m)) != p.W_enc.rows()) {
    fail(ErrorCode::InvalidArgument, "SAE meta m disagrees with W_enc");
  }
  p.scale = scale != nullptr ? io::parse_double(*scale) : 1.0;
  p.validate();
  return p;
}

}  // namespace cavkit::sae
