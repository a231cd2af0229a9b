#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "cavkit/linalg.hpp"
#include "cavkit/sae.hpp"
#include "cavkit/synthetic.hpp"
#include "helpers.hpp"

using namespace cavkit;
using namespace cavkit::sae;
using testing::code_of;

namespace {

// m = d = 3 SAE whose pre-activation equals h (identity encoder, zero biases).
SaeParams identity3(std::size_t k) {
  auto p = SaeParams::identity(3);
  p.k = k;
  return p;
}

// Rows are nonnegative combinations of 4 orthonormal nonnegative atoms with
// disjoint supports in d = 8.
Matrix planted_dictionary(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, 8);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < 4; ++a) {
      const double c = 0.5 + rng.uniform();
      X(i, 2 * a) += c / std::sqrt(2.0);
      X(i, 2 * a + 1) += c / std::sqrt(2.0);
    }
  }
  return X;
}

TrainOptions planted_options() {
  TrainOptions o;
  o.m = 4;
  o.k = 4;
  o.epochs = 2000;
  o.learning_rate = 5e-2;
  o.seed = 1;
  return o;
}

std::size_t nonzeros(std::span<const double> z) {
  return static_cast<std::size_t>(std::count_if(z.begin(), z.end(), [](double x) { return x != 0.0; }));
}

}  // namespace

TEST_CASE("normalize_store") {
  const auto a = normalize_store(Matrix{{2, 0, 0, 0}});
  CHECK(a.scale == 1.0);
  CHECK(norm(a.data.row(0)) == doctest::Approx(2.0).epsilon(1e-15));
  const auto b = normalize_store(Matrix{{4, 0, 0, 0}});
  CHECK(b.scale == 0.5);
  CHECK(code_of([] { normalize_store(Matrix(2, 4)); }) == ErrorCode::AllZeroRows);

  Rng rng(2);
  const auto c = normalize_store(testing::random_matrix(rng, 50, 6, 7.0));
  double ms = 0.0;
  for (std::size_t i = 0; i < 50; ++i) ms += dot(c.data.row(i), c.data.row(i));
  CHECK(ms / 50 == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("encode keeps the k largest activations") {
  CHECK(encode(identity3(2), Vector{3, 1, 2}) == Vector{3, 0, 2});
  CHECK(encode(identity3(2), Vector{-1, -2, 0}) == Vector{0, 0, 0});
  CHECK(encode(identity3(3), Vector{3, -1, 2}) == Vector{3, 0, 2});
  CHECK(encode(identity3(1), Vector{2, 2, 1}) == Vector{2, 0, 0});
  CHECK(code_of([] { encode(identity3(2), Vector{1, 2}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("encode has at most k nonzeros and exactly k when enough are positive") {
  Rng rng(3);
  TrainOptions o;
  o.m = 24;
  o.k = 5;
  o.epochs = 0;
  const Matrix X = testing::random_matrix(rng, 40, 6);
  const auto p = train_sae(X, o);
  for (std::size_t i = 0; i < 200; ++i) {
    const Vector h = testing::random_vector(rng, 6, 3.0);
    const Vector z = encode(p, h);
    std::size_t positive_pre = 0;
    Vector centered(6);
    for (std::size_t j = 0; j < 6; ++j) centered[j] = h[j] - p.b_dec[j];
    const Vector pre = p.W_enc.multiply(centered);
    for (std::size_t j = 0; j < pre.size(); ++j) positive_pre += pre[j] + p.b_enc[j] > 0.0;
    CHECK(nonzeros(z) == std::min<std::size_t>(5, positive_pre));
    for (double x : z) CHECK(x >= 0.0);
  }
}

TEST_CASE("decode is linear") {
  const auto e = identity3(3);
  CHECK(decode(e, Vector{0, 1, 0}) == Vector{0, 1, 0});
  CHECK(decode(e, Vector{0, 0, 0}) == Vector{0, 0, 0});
  Rng rng(4);
  TrainOptions o;
  o.m = 10;
  o.k = 3;
  o.epochs = 0;
  const auto p = train_sae(testing::random_matrix(rng, 20, 5), o);
  for (int t = 0; t < 100; ++t) {
    const Vector z1 = testing::random_vector(rng, 10);
    const Vector z2 = testing::random_vector(rng, 10);
    const double a = rng.normal();
    const double b = rng.normal();
    Vector mix(10);
    for (std::size_t j = 0; j < 10; ++j) mix[j] = a * z1[j] + b * z2[j];
    const Vector lhs = decode(p, mix);
    const Vector d1 = decode(p, z1);
    const Vector d2 = decode(p, z2);
    Vector rhs(5);
    for (std::size_t j = 0; j < 5; ++j) rhs[j] = a * d1[j] + b * d2[j];
    CHECK(testing::max_abs_diff(lhs, rhs) <= 1e-6);
  }
  CHECK(code_of([&] { decode(p, Vector(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("planted dictionary is recovered with a monotone loss") {
  const auto store = normalize_store(planted_dictionary(256, 5));
  std::vector<double> history;
  const auto p = train_sae(store.data, planted_options(), &history);
  CHECK(relative_mse(p, store.data) <= 1e-3);
  REQUIRE(history.size() == planted_options().epochs + 1);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1]);
  for (std::size_t j = 0; j < p.latent_dim(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < p.input_dim(); ++i) col += p.W_dec(i, j) * p.W_dec(i, j);
    CHECK(std::sqrt(col) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("desk SAE on synthetic embeddings reconstructs within 0.2") {
  SyntheticSpec spec;
  spec.d = 16;
  spec.n_per_side = 200;
  spec.noise_sigma = 0.1;
  plant_random_directions(spec, 3, 0.0);
  const auto data = generate_synthetic(spec);
  const auto store = normalize_store(data.embeddings);
  TrainOptions o;
  o.m = 64;
  o.k = 8;
  o.epochs = 300;
  const auto p = train_sae(store.data, o);
  CHECK(relative_mse(p, store.data) <= 0.2);
}

TEST_CASE("zero epochs return the initialization and training is deterministic") {
  Rng rng(6);
  const Matrix X = testing::random_matrix(rng, 30, 5);
  TrainOptions o;
  o.m = 12;
  o.k = 3;
  o.epochs = 0;
  o.seed = 9;
  const auto init = train_sae(X, o);
  CHECK(init.W_enc == init.W_dec.transposed());
  CHECK(init.b_enc == Vector(12, 0.0));
  CHECK(init.b_dec == mean_rows(X, all_rows(30)));
  o.epochs = 25;
  const auto a = train_sae(X, o);
  const auto b = train_sae(X, o);
  CHECK(a.W_enc == b.W_enc);
  CHECK(a.W_dec == b.W_dec);
  CHECK(a.b_enc == b.b_enc);
  CHECK(a.W_dec != init.W_dec);
}

TEST_CASE("activation density") {
  auto p = SaeParams::identity(2);
  const Matrix m{{1, 0}, {1, 1}, {1, -1}, {1, 2}};
  const auto d = activation_density(p, m, all_rows(4));
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 0.5);
  const Matrix z{{0, 1}, {0, 1}, {0, 1}, {0, 0}};
  CHECK(activation_density(z, all_rows(4)) == Vector{0.0, 0.75});
  CHECK(code_of([&] { activation_density(p, m, IndexSet{}); }) == ErrorCode::EmptySelection);
}

TEST_CASE("bundle round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cavkit_test_sae_bundle";
  std::filesystem::remove_all(dir);
  // values representable in f32 survive exactly
  SaeParams p;
  p.W_enc = Matrix{{1, 0.5}, {-0.25, 2}, {0, 1}};
  p.b_enc = {0.125, -1, 0};
  p.W_dec = p.W_enc.transposed();
  p.b_dec = {3, -0.5};
  p.k = 2;
  p.scale = 0.1;
  save_bundle(p, dir);
  for (const char* f : {"W_enc.cavb", "b_enc.cavb", "W_dec.cavb", "b_dec.cavb", "meta"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto q = load_bundle(dir);
  CHECK(q.W_enc == p.W_enc);
  CHECK(q.b_enc == p.b_enc);
  CHECK(q.W_dec == p.W_dec);
  CHECK(q.b_dec == p.b_dec);
  CHECK(q.k == 2);
  CHECK(q.scale == 0.1);
  std::filesystem::remove(dir / "b_dec.cavb");
  CHECK(code_of([&] { load_bundle(dir); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}
