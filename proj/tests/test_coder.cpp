#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "koopgait/coder.hpp"
#include "koopgait/error.hpp"
#include "support.hpp"

using namespace koopgait;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

EtBlock identity_block(Eigen::Index h) {
  EtBlock b(h);
  b.weight.setIdentity();
  b.bn_var.setConstant(1.0 - b.bn_eps);  // makes the BN scale exactly 1
  return b;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("checkerboard split of a 2x2 frame") {
  MatrixXd f(2, 2);
  f << 1, 2, 3, 4;
  const auto [u1, u2] = checkerboard_split<double>(f);
  CHECK(u1 == (VectorXd(2) << 1, 4).finished());
  CHECK(u2 == (VectorXd(2) << 2, 3).finished());
}

TEST_CASE("checkerboard split follows parity in row-major order") {
  std::mt19937_64 rng(2);
  const MatrixXd f = testing::gaussian(6, 6, rng);
  const auto [u1, u2] = checkerboard_split<double>(f);
  Eigen::Index a = 0, b = 0;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      if ((r + c) % 2 == 0)
        CHECK(u1(a++) == f(r, c));
      else
        CHECK(u2(b++) == f(r, c));
    }
}

TEST_CASE("checkerboard merge inverts split") {
  std::mt19937_64 rng(3);
  for (Eigen::Index w : {2, 4, 8, 32}) {
    const MatrixXd f = testing::gaussian(w, w, rng);
    const auto [u1, u2] = checkerboard_split<double>(f);
    CHECK(checkerboard_merge<double>(u1, u2, w) == f);
  }
  const auto [o1, o2] = checkerboard_split<double>(MatrixXd::Ones(64, 64));
  CHECK(o1.size() == 2048);
  CHECK(o2.size() == 2048);
  CHECK(o1.minCoeff() == 1.0);
  CHECK(o2.minCoeff() == 1.0);
}

TEST_CASE("odd resolution is rejected") {
  try {
    checkerboard_split<double>(MatrixXd::Zero(3, 3));
    FAIL("expected OddResolution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OddResolution);
  }
  CHECK_THROWS_AS(CouplingCoder(5), Error);
}

TEST_CASE("ET block examples") {
  std::mt19937_64 rng(4);
  const VectorXd x = testing::gaussian(8, 1, rng);

  SUBCASE("identity block") { CHECK(max_abs(et_apply(identity_block(8), MatrixXd(x)) - x) < 1e-15); }

  SUBCASE("zero weight gives the bias") {
    EtBlock b(8);
    b.bias = testing::gaussian(8, 1, rng);
    b.bn_var.setConstant(1.0 - b.bn_eps);
    CHECK(max_abs(b.apply(x) - b.bias) < 1e-15);
  }

  SUBCASE("affinity: f(2x) - f(x) = gamma * Wx / sqrt(var + eps)") {
    EtBlock b(8);
    b.weight = testing::gaussian(8, 8, rng);
    b.bias = testing::gaussian(8, 1, rng);
    b.bn_gamma = testing::uniform(8, 1, rng, 0.5, 2.0);
    b.bn_beta = testing::gaussian(8, 1, rng);
    b.bn_mean = testing::gaussian(8, 1, rng);
    b.bn_var = testing::uniform(8, 1, rng, 0.1, 3.0);
    const VectorXd d = b.apply(VectorXd(2.0 * x)) - b.apply(x);
    const VectorXd expect =
        (b.bn_gamma.array() * (b.weight * x).array() / (b.bn_var.array() + b.bn_eps).sqrt()).matrix();
    CHECK(max_abs(d - expect) < 1e-12);
  }

  SUBCASE("wrong input length") { CHECK_THROWS_AS(identity_block(8).apply(VectorXd(VectorXd::Zero(6))), Error); }
}

TEST_CASE("ET block in training mode normalises with batch statistics") {
  std::mt19937_64 rng(5);
  EtBlock b(4);
  b.weight = testing::gaussian(4, 4, rng);
  b.bias = testing::gaussian(4, 1, rng);
  b.bn_gamma = testing::uniform(4, 1, rng, 0.5, 2.0);
  b.bn_beta = testing::gaussian(4, 1, rng);
  b.training_mode = true;
  const MatrixXd x = testing::gaussian(4, 7, rng);
  const MatrixXd y = b.apply(x);
  // Oracle: per-unit biased statistics computed element by element.
  for (int u = 0; u < 4; ++u) {
    double mean = 0.0, var = 0.0;
    std::vector<double> z(7);
    for (int n = 0; n < 7; ++n) {
      z[n] = b.bias(u);
      for (int k = 0; k < 4; ++k) z[n] += b.weight(u, k) * x(k, n);
      mean += z[n] / 7.0;
    }
    for (int n = 0; n < 7; ++n) var += (z[n] - mean) * (z[n] - mean) / 7.0;
    for (int n = 0; n < 7; ++n)
      CHECK(y(u, n) == doctest::Approx(b.bn_gamma(u) * (z[n] - mean) / std::sqrt(var + b.bn_eps) + b.bn_beta(u)));
  }
}

TEST_CASE("zero coder is the identity both ways") {
  std::mt19937_64 rng(6);
  CouplingCoder coder(8);
  const MatrixXd x = testing::gaussian(8, 8, rng);
  CHECK(coder.encode(x) == x);
  CHECK(coder.decode(x) == x);
}

TEST_CASE("hand-evaluated encode with f = identity, g = 0") {
  CouplingCoder coder(2, identity_block(2), EtBlock(2));
  MatrixXd f(2, 2);
  f << 1, 0, 0, 1;
  // U1 = (1,1), U2 = (0,0) -> Y1 = U1 + f(U2) = (1,1), Y2 = U2 + g(Y1) = (0,0).
  CHECK(max_abs(coder.encode(f) - f) < 1e-15);

  MatrixXd h(2, 2);
  h << 1, 2, 3, 4;
  // U1 = (1,4), U2 = (2,3) -> Y1 = (3,7), Y2 = (2,3).
  MatrixXd expect(2, 2);
  expect << 3, 2, 3, 7;
  CHECK(max_abs(coder.encode(h) - expect) < 1e-15);
}

TEST_CASE("round trips are exact for random coders, both directions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index w = std::array<Eigen::Index, 4>{2, 4, 8, 16}[trial % 4];
    const auto coder = testing::random_coder(w, rng, 1.0 + trial % 3);
    const MatrixXd x = testing::gaussian(w, w, rng, 3.0);
    CHECK(max_abs(coder.decode(coder.encode(x)) - x) <= 1e-10);
    CHECK(max_abs(coder.encode(coder.decode(x)) - x) <= 1e-10);

    const auto cf = coder.cast<float>();
    const Eigen::MatrixXf xf = x.cast<float>();
    CHECK((cf.decode(cf.encode(xf)) - xf).cwiseAbs().maxCoeff() <= 1e-5f * std::max(1.0f, xf.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("training-mode round trip over the same batch is exact") {
  std::mt19937_64 rng(8);
  auto coder = testing::random_coder(8, rng);
  coder.set_training(true);
  std::vector<MatrixXd> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(testing::gaussian(8, 8, rng));
  const auto enc = coder.encode_batch(batch);
  const auto dec = coder.decode_batch(enc);
  for (int i = 0; i < 6; ++i) CHECK(max_abs(dec[i] - batch[i]) < 1e-10);
}

TEST_CASE("tanh option keeps invertibility") {
  std::mt19937_64 rng(9);
  auto coder = testing::random_coder(8, rng, 2.0);
  coder.f().use_tanh = coder.g().use_tanh = true;
  const MatrixXd x = testing::gaussian(8, 8, rng);
  CHECK(max_abs(coder.decode(coder.encode(x)) - x) < 1e-12);
  CHECK(max_abs(coder.encode(x) - x) > 1e-3);
}

TEST_CASE("parameter count is 2 (half^2 + 3 half)") {
  for (Eigen::Index w : {2, 8, 32, 64}) {
    const Eigen::Index h = w * w / 2;
    const auto expect = static_cast<std::size_t>(2 * (h * h + 3 * h));
    CHECK(expected_parameter_count(w) == expect);
    if (w <= 32) CHECK(make_coder(w, 1).parameter_count() == expect);
  }
}

TEST_CASE("make_coder: seeded Xavier-uniform dense weights, identity BN") {
  const auto a = make_coder(16, 42), b = make_coder(16, 42), c = make_coder(16, 43);
  CHECK(a.f().weight == b.f().weight);
  CHECK(a.g().weight == b.g().weight);
  CHECK(a.f().weight != c.f().weight);
  CHECK(a.f().weight != a.g().weight);
  const double limit = std::sqrt(6.0 / (2.0 * 128.0));
  CHECK(a.f().weight.cwiseAbs().maxCoeff() <= limit);
  CHECK(a.f().weight.cwiseAbs().maxCoeff() > 0.9 * limit);
  CHECK(std::abs(a.f().weight.mean()) < 0.02);
  CHECK(a.f().bias.isZero());
  CHECK(a.f().bn_gamma.isOnes());
  CHECK(a.f().bn_var.isOnes());
  CHECK_FALSE(a.training());
}

TEST_CASE("coder checkpoint round trip") {
  std::mt19937_64 rng(10);
  CoderOptions opts;
  opts.use_tanh = true;
  opts.bn_eps = 1e-4;
  opts.bn_momentum = 0.8;
  auto coder = make_coder(8, 5, opts);
  coder.f().bn_mean = testing::gaussian(32, 1, rng);
  coder.g().bn_var = testing::uniform(32, 1, rng, 0.5, 2.0);

  testing::ScratchDir dir("ckpt");
  save_coder(coder, dir.path());
  CHECK(std::filesystem::exists(dir / "coder.json"));
  const auto back = load_coder(dir.path());
  CHECK(back.resolution() == 8);
  CHECK(back.f().use_tanh);
  CHECK(back.f().bn_eps == doctest::Approx(1e-4));
  CHECK(back.g().bn_momentum == doctest::Approx(0.8));
  // Tensors are stored as float32.
  CHECK(back.f().weight == coder.f().weight.cast<float>().cast<double>());
  CHECK(back.g().bn_var == coder.g().bn_var.cast<float>().cast<double>());
  CHECK(back.f().bn_mean == coder.f().bn_mean.cast<float>().cast<double>());

  // Saving the loaded coder again reproduces every file byte for byte.
  save_coder(back, dir / "again");
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    if (!e.is_regular_file() || e.path().extension() != ".ika") continue;
    std::ifstream a(e.path(), std::ios::binary), b(dir / "again" / e.path().filename(), std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
}

TEST_CASE("dimension checks") {
  CouplingCoder coder(4);
  CHECK_THROWS_AS(coder.encode(MatrixXd::Zero(6, 6)), Error);
  CHECK_THROWS_AS(coder.decode(MatrixXd::Zero(4, 6)), Error);
  CHECK_THROWS_AS(CouplingCoder(4, EtBlock(6), EtBlock(6)), Error);
}
