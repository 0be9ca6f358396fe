#include <cmath>

#include "doctest.h"
#include "mapfuse/adamw.hpp"
#include "mapfuse/field.hpp"
#include "mapfuse/mlp.hpp"

using namespace mapfuse;

TEST_CASE("mlp bias-only network") {
  Mlp<double> geo(4, 8, 2, Activation::kSoftplus100);
  geo.bias_out(0) = 0.5;
  geo.bias_out(1) = -1.25;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4);
  x(1, 2) = 7.0;  // weights are zero, inputs cannot matter
  const auto y = geo.forward(x);
  for (int i = 0; i < 3; ++i) {
    CHECK(y(i, 0) == doctest::Approx(0.5));
    CHECK(y(i, 1) == doctest::Approx(-1.25));
  }
}

TEST_CASE("mlp forward matches a scalar-loop oracle") {
  Rng rng(21);
  Mlp<double> net(3, 5, 2, Activation::kRelu);
  net.init_weights(rng);
  const double* p = net.params();
  const int in = 3, hid = 5, out = 2;
  const size_t off_b0 = size_t(hid) * in;
  const size_t off_w1 = off_b0 + hid;
  const size_t off_b1 = off_w1 + size_t(hid) * hid;
  const size_t off_w2 = off_b1 + hid;
  const size_t off_b2 = off_w2 + size_t(out) * hid;

  Eigen::MatrixXd x(1, 3);
  x << 0.3, -0.7, 1.1;
  const auto y = net.forward(x);

  // Column-major W (rows = outputs of the layer).
  auto w = [&](size_t off, int r, int c, int rows) { return p[off + size_t(c) * rows + r]; };
  double h0[5], h1[5];
  for (int i = 0; i < hid; ++i) {
    double z = p[off_b0 + i];
    for (int j = 0; j < in; ++j) z += w(0, i, j, hid) * x(0, j);
    h0[i] = std::max(0.0, z);
  }
  for (int i = 0; i < hid; ++i) {
    double z = p[off_b1 + i];
    for (int j = 0; j < hid; ++j) z += w(off_w1, i, j, hid) * h0[j];
    h1[i] = std::max(0.0, z);
  }
  for (int k = 0; k < out; ++k) {
    double z = p[off_b2 + k];
    for (int j = 0; j < hid; ++j) z += w(off_w2, k, j, out) * h1[j];
    CHECK(y(0, k) == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("mlp backward matches finite differences") {
  Rng rng(22);
  for (Activation act : {Activation::kSoftplus100, Activation::kRelu}) {
    Mlp<double> net(4, 6, 3, act);
    net.init_weights(rng);
    Eigen::MatrixXd x(5, 4);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd dy(5, 3);
    for (int i = 0; i < dy.size(); ++i) dy.data()[i] = rng.uniform(-1.0, 1.0);

    Mlp<double>::Cache cache;
    net.forward(x, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    Eigen::MatrixXd dx;
    net.backward(cache, dy, grad.data(), &dx);

    auto loss = [&]() { return (net.forward(x).cwiseProduct(dy)).sum(); };
    const double h = 1e-6;
    int checked = 0;
    for (size_t i = 0; i < net.param_count(); i += 7) {
      const double save = net.param_vector()[i];
      net.param_vector()[i] = save + h;
      const double hi = loss();
      net.param_vector()[i] = save - h;
      const double lo = loss();
      net.param_vector()[i] = save;
      const double fd = (hi - lo) / (2 * h);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-4).scale(
                           std::max(1.0, std::abs(fd))));
      ++checked;
    }
    CHECK(checked > 10);

    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 4; ++c) {
        const double save = x(r, c);
        x(r, c) = save + h;
        const double hi = loss();
        x(r, c) = save - h;
        const double lo = loss();
        x(r, c) = save;
        const double fd = (hi - lo) / (2 * h);
        CHECK(dx(r, c) == doctest::Approx(fd).epsilon(1e-4).scale(
                              std::max(1.0, std::abs(fd))));
      }
  }
}

TEST_CASE("positional encoding") {
  PosEncConfig pe;
  pe.num_frequencies = 6;
  pe.include_raw = true;
  CHECK(pe.dim() == 3 + 2 * 6 * 3);

  // p = 0: raw zeros, sin terms 0, cos terms 1.
  double p0[3] = {0, 0, 0};
  std::vector<double> enc(pe.dim());
  pos_enc(pe, p0, enc.data());
  for (int i = 0; i < 3; ++i) CHECK(enc[i] == 0.0);
  for (int j = 0; j < 6; ++j)
    for (int a = 0; a < 3; ++a) {
      CHECK(enc[3 + (2 * j + 0) * 3 + a] == doctest::Approx(0.0));
      CHECK(enc[3 + (2 * j + 1) * 3 + a] == doctest::Approx(1.0));
    }

  // F = 0 with raw: identity encoding.
  PosEncConfig raw;
  raw.num_frequencies = 0;
  raw.include_raw = true;
  CHECK(raw.dim() == 3);
  double p[3] = {0.3, -0.4, 0.9};
  std::vector<double> enc3(3);
  pos_enc(raw, p, enc3.data());
  for (int a = 0; a < 3; ++a) CHECK(enc3[a] == p[a]);

  // Derivative vs finite differences.
  Rng rng(23);
  std::vector<double> up(pe.dim());
  for (auto& u : up) u = rng.uniform(-1.0, 1.0);
  double q[3] = {0.21, 0.55, 0.83};
  double dp[3] = {0, 0, 0};
  pos_enc_backward(pe, q, up.data(), dp);
  const double h = 1e-7;
  for (int a = 0; a < 3; ++a) {
    double hi_p[3] = {q[0], q[1], q[2]}, lo_p[3] = {q[0], q[1], q[2]};
    hi_p[a] += h;
    lo_p[a] -= h;
    std::vector<double> hi(pe.dim()), lo(pe.dim());
    pos_enc(pe, hi_p, hi.data());
    pos_enc(pe, lo_p, lo.data());
    double fd = 0;
    for (int i = 0; i < pe.dim(); ++i) fd += up[i] * (hi[i] - lo[i]) / (2 * h);
    CHECK(dp[a] == doctest::Approx(fd).epsilon(1e-6).scale(
                       std::max(1.0, std::abs(fd))));
  }
}

TEST_CASE("adamw closed forms") {
  SUBCASE("zero gradient, zero decay: parameter unchanged") {
    AdamW<double> opt(1, 1);
    double p = 3.0, g = 0.0;
    AdamWConfig cfg;
    for (int i = 0; i < 10; ++i) opt.update_dense(&p, &g, cfg);
    CHECK(p == 3.0);
  }

  SUBCASE("first step matches the hand formula") {
    AdamW<double> opt(1, 1);
    double p = 1.0, g = 0.7;
    AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.0;
    opt.update_dense(&p, &g, cfg);
    // Step 1: m-hat = g, v-hat = g^2 -> update = g / (|g| + eps) ~ sign(g).
    const double expected = 1.0 - 0.01 * (0.7 / (std::sqrt(0.49) + 1e-8));
    CHECK(p == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("constant gradient: step magnitude approaches lr") {
    AdamW<double> opt(1, 1);
    double p = 0.0;
    const double g = -0.3;
    AdamWConfig cfg;
    cfg.lr = 0.01;
    double prev = p;
    for (int i = 0; i < 500; ++i) {
      prev = p;
      opt.update_dense(&p, &g, cfg);
    }
    CHECK(std::abs(p - prev) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(p > 0);  // moves against the gradient
  }

  SUBCASE("weight decay only: geometric shrink") {
    AdamW<double> opt(1, 1);
    double p = 2.0;
    const double g = 0.0;
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    opt.update_dense(&p, &g, cfg);
    CHECK(p == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
    opt.update_dense(&p, &g, cfg);
    CHECK(p == doctest::Approx(2.0 * std::pow(1.0 - 0.1 * 0.5, 2)).epsilon(1e-12));
  }

  SUBCASE("lazy slots: untouched entries keep their state") {
    AdamW<double> opt(6, 2);  // 3 slots of stride 2
    std::vector<double> p = {1, 1, 1, 1, 1, 1};
    std::vector<double> g = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    AdamWConfig cfg;
    cfg.lr = 0.01;
    opt.update_slots(p.data(), g.data(), {1}, cfg);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 1.0);
    CHECK(p[2] != 1.0);
    CHECK(p[3] != 1.0);
    CHECK(p[4] == 1.0);

    // Touching slot 1 again advances only its step count; the bias
    // correction there differs from a fresh slot's.
    opt.update_slots(p.data(), g.data(), {1, 2}, cfg);
    CHECK(p[4] != 1.0);
  }

  SUBCASE("global norm clip") {
    std::vector<double> g = {3.0, 4.0};  // norm 5
    clip_global_norm(g.data(), 2, 10.0);
    CHECK(g[0] == 3.0);
    clip_global_norm(g.data(), 2, 1.0);
    CHECK(std::sqrt(g[0] * g[0] + g[1] * g[1]) == doctest::Approx(1.0));
    CHECK(g[0] / g[1] == doctest::Approx(0.75));
  }
}
