#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "embedtree/model_file.hpp"
#include "embedtree/nn.hpp"
#include "gradcheck.hpp"

using namespace embedtree;
using testutil::check_module;
using testutil::max_grad_err;
using testutil::rel_err;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("linear forward examples") {
  LinearLayer identity(2, 2);
  identity.w = DenseMatrix::identity(2);
  CHECK(identity.forward(DenseMatrix::column({2.0, 3.0})).data() ==
        std::vector<double>{2.0, 3.0});

  LinearLayer biased(2, 2);
  biased.b = DenseMatrix::column({1.0, 1.0});
  CHECK(biased.forward(DenseMatrix::column({5.0, -4.0})).data() ==
        std::vector<double>{1.0, 1.0});

  LinearLayer layer(2, 2);
  layer.w = DenseMatrix(2, 2, {1.0, 2.0, 3.0, 4.0});
  layer.b = DenseMatrix::column({1.0, 0.0});
  CHECK(layer.forward(DenseMatrix::column({1.0, 1.0})).data() ==
        std::vector<double>{4.0, 7.0});

  CHECK_THROWS_AS(layer.forward(DenseMatrix::column({1.0, 1.0, 1.0})),
                  std::invalid_argument);
}

TEST_CASE("linear backward basics") {
  Rng rng(3);
  LinearLayer layer(2, 2, rng);
  CHECK_THROWS_AS(layer.backward(DenseMatrix(2, 1), DenseMatrix(2, 1)),
                  std::invalid_argument);

  const DenseMatrix x = DenseMatrix::column({0.5, -0.25});
  layer.forward(x);
  const DenseMatrix zero_grad(2, 1);
  const DenseMatrix gin = layer.backward(x, zero_grad);
  CHECK(gin.data() == std::vector<double>{0.0, 0.0});
  CHECK(layer.grad_w.data() == std::vector<double>{0.0, 0.0, 0.0, 0.0});
  CHECK(layer.grad_b.data() == std::vector<double>{0.0, 0.0});

  LinearLayer identity(2, 2);
  identity.w = DenseMatrix::identity(2);
  identity.forward(x);
  const DenseMatrix g = DenseMatrix::column({1.5, -2.0});
  CHECK(identity.backward(x, g).data() == g.data());
}

// The closed-form update rules against a brute-force Jacobian assembly:
// grad_W[j][k] = sum_r g[r] * dOut[r]/dW[j][k], with the partials written out
// entry by entry. Both routes are exact, so they must agree to 1e-12.
TEST_CASE("linear backward matches explicit Jacobian route to 1e-12") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int out_n = 2 + rng.uniform_int(4);
    const int in_n = 2 + rng.uniform_int(4);
    LinearLayer layer(out_n, in_n, rng);
    const DenseMatrix x = uniform_init(rng, in_n, 1, -2.0, 2.0);
    const DenseMatrix g = uniform_init(rng, out_n, 1, -2.0, 2.0);
    layer.forward(x);
    layer.zero_grads();
    const DenseMatrix grad_in = layer.backward(x, g);

    for (int j = 0; j < out_n; ++j) {
      for (int k = 0; k < in_n; ++k) {
        double acc = 0.0;
        for (int r = 0; r < out_n; ++r) {
          const double partial = (r == j) ? x[k] : 0.0;  // dOut_r/dW_jk
          acc += g[r] * partial;
        }
        CHECK(std::abs(layer.grad_w(j, k) - acc) < 1e-12);
      }
      CHECK(std::abs(layer.grad_b[j] - g[j]) < 1e-12);
    }
    for (int k = 0; k < in_n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < out_n; ++j) {
        acc += g[j] * layer.w(j, k);  // dOut_j/dIn_k = W_jk
      }
      CHECK(std::abs(grad_in[k] - acc) < 1e-12);
    }
  }
}

TEST_CASE("linear gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    LinearLayer layer(3, 4, rng);
    const DenseMatrix x = uniform_init(rng, 4, 1, -1.0, 1.0);
    CHECK(check_module(layer, x, rng).worst() < 1e-6);
  }
}

TEST_CASE("hardtanh forward piecewise values") {
  HardTanhLayer layer;
  const DenseMatrix out =
      layer.forward(DenseMatrix::column({2.0, -3.0, 0.5, 1.0, -1.0}));
  CHECK(out.data() == std::vector<double>{1.0, -1.0, 0.5, 1.0, -1.0});
}

TEST_CASE("hardtanh backward: slope 1 inside, 0 outside and at the kinks") {
  HardTanhLayer layer;
  CHECK_THROWS_AS(layer.backward(DenseMatrix(1, 1), DenseMatrix(1, 1)),
                  std::invalid_argument);
  const DenseMatrix x = DenseMatrix::column({0.5, 2.0, -2.0, 1.0, -1.0});
  layer.forward(x);
  DenseMatrix g(5, 1);
  g.fill(2.0);
  CHECK(layer.backward(x, g).data() == std::vector<double>{2.0, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("hardtanh gradients match finite differences away from the kinks") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 13);
    HardTanhLayer layer;
    DenseMatrix x = uniform_init(rng, 6, 1, -2.0, 2.0);
    while (testutil::min_kink_distance(x) < 1e-3) {
      x = uniform_init(rng, 6, 1, -2.0, 2.0);
    }
    CHECK(check_module(layer, x, rng).worst() < 1e-6);
  }
}

TEST_CASE("embedding lookup extracts columns") {
  Rng rng(5);
  EmbeddingTable table(3, 4, rng);
  const DenseMatrix one = table.forward({1});
  for (int i = 0; i < 3; ++i) {
    CHECK(one(i, 0) == table.w(i, 0));
  }
  const DenseMatrix repeated = table.forward({3, 3});
  for (int i = 0; i < 3; ++i) {
    CHECK(repeated(i, 0) == repeated(i, 1));
    CHECK(repeated(i, 0) == table.w(i, 2));
  }
  CHECK_THROWS_WITH_AS(table.forward({5}), doctest::Contains("5"),
                       std::invalid_argument);
  CHECK_THROWS_AS(table.forward({0}), std::invalid_argument);
}

TEST_CASE("embedding backward accumulates per occurrence, untouched stay zero") {
  Rng rng(6);
  EmbeddingTable table(2, 5, rng);
  const TokenSequence s = {3, 3};
  table.forward(s);
  DenseMatrix g(2, 2);
  g(0, 0) = 1.0;
  g(1, 0) = 2.0;
  g(0, 1) = 10.0;
  g(1, 1) = 20.0;
  table.backward(s, g);
  CHECK(table.grad_w(0, 2) == 11.0);
  CHECK(table.grad_w(1, 2) == 22.0);
  for (int col : {0, 1, 3, 4}) {
    CHECK(table.grad_w(0, col) == 0.0);
    CHECK(table.grad_w(1, col) == 0.0);
  }
}

TEST_CASE("embedding table gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 7);
    EmbeddingTable table(3, 6, rng);
    const TokenSequence s = {2, 5, 2};  // repetition on purpose
    const DenseMatrix g = uniform_init(rng, 3, 3, -1.0, 1.0);
    const auto loss = [&]() {
      const DenseMatrix out = table.forward(s);
      double acc = 0.0;
      for (int i = 0; i < out.size(); ++i) {
        acc += g[i] * out[i];
      }
      return acc;
    };
    table.zero_grads();
    table.forward(s);
    table.backward(s, g);
    const DenseMatrix analytic = table.grad_w;
    CHECK(max_grad_err(table.w, analytic, loss) < 1e-6);
  }
}

TEST_CASE("mean layer examples and gradients") {
  MeanLayer mean;
  DenseMatrix x(2, 2);
  x(0, 0) = 0.0;
  x(1, 0) = 2.0;
  x(0, 1) = 2.0;
  x(1, 1) = 0.0;
  const DenseMatrix out = mean.forward(x);
  CHECK(out.data() == std::vector<double>{1.0, 1.0});

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed + 100);
    MeanLayer layer;
    const DenseMatrix input = uniform_init(rng, 3, 4, -1.0, 1.0);
    CHECK(check_module(layer, input, rng).worst() < 1e-6);
  }
}

TEST_CASE("sequential [Linear, HardTanh, Linear] chain matches finite differences") {
  int checked = 0;
  std::uint64_t seed = 1;
  while (checked < 20) {
    Rng rng(seed++);
    auto first = std::make_shared<LinearLayer>(5, 3, rng);
    auto mid = std::make_shared<HardTanhLayer>();
    auto last = std::make_shared<LinearLayer>(2, 5, rng);
    Sequential net;
    net.add(first).add(mid).add(last);
    const DenseMatrix x = uniform_init(rng, 3, 1, -1.0, 1.0);
    if (testutil::min_kink_distance(first->forward(x)) < 1e-3) {
      continue;  // too close to a hardTanh kink for finite differences
    }
    CHECK(check_module(net, x, rng).worst() < 1e-5);
    ++checked;
  }
}

TEST_CASE("parallel pair stacks outputs and splits gradients") {
  Rng rng(12);
  auto first = std::make_shared<LinearLayer>(2, 3, rng);
  auto second = std::make_shared<LinearLayer>(4, 3, rng);
  ParallelPair pair(first, second);
  const DenseMatrix a = uniform_init(rng, 3, 1, -1.0, 1.0);
  const DenseMatrix b = uniform_init(rng, 3, 1, -1.0, 1.0);
  const DenseMatrix out = pair.forward(a, b);
  CHECK(out.rows() == 6);
  CHECK(pair.parameters().size() == 4);

  const DenseMatrix g = uniform_init(rng, 6, 1, -1.0, 1.0);
  const auto loss = [&]() {
    const DenseMatrix o = pair.forward(a, b);
    double acc = 0.0;
    for (int i = 0; i < o.size(); ++i) {
      acc += g[i] * o[i];
    }
    return acc;
  };
  pair.zero_grads();
  pair.forward(a, b);
  auto [grad_a, grad_b] = pair.backward(a, b, g);
  DenseMatrix a_copy = a;
  DenseMatrix b_copy = b;
  CHECK(max_grad_err(a_copy, grad_a, [&]() {
          const DenseMatrix o = pair.forward(a_copy, b);
          double acc = 0.0;
          for (int i = 0; i < o.size(); ++i) {
            acc += g[i] * o[i];
          }
          return acc;
        }) < 1e-6);
  for (const Parameter& p : pair.parameters()) {
    const DenseMatrix analytic = *p.grad;
    CHECK(max_grad_err(*p.value, analytic, loss) < 1e-6);
  }
  (void)grad_b;
}

TEST_CASE("mse criterion examples and gradient") {
  const MseResult perfect =
      mse_criterion(DenseMatrix::column({1.0, 2.0}), DenseMatrix::column({1.0, 2.0}));
  CHECK(perfect.loss == 0.0);
  CHECK(perfect.grad_output.data() == std::vector<double>{0.0, 0.0});

  const MseResult off =
      mse_criterion(DenseMatrix::column({0.0}), DenseMatrix::column({2.0}));
  CHECK(off.loss == 4.0);
  CHECK(off.grad_output[0] == -4.0);

  CHECK_THROWS_AS(mse_criterion(DenseMatrix(2, 1), DenseMatrix(3, 1)),
                  std::invalid_argument);

  Rng rng(9);
  DenseMatrix output = uniform_init(rng, 5, 1, -1.0, 1.0);
  const DenseMatrix target = uniform_init(rng, 5, 1, -1.0, 1.0);
  const MseResult res = mse_criterion(output, target);
  const auto loss = [&]() { return mse_criterion(output, target).loss; };
  CHECK(max_grad_err(output, res.grad_output, loss, 1e-6) < 1e-8);
}

TEST_CASE("margin ranking criterion") {
  CHECK(margin_ranking_criterion(5.0, 0.0, 1.0).loss == 0.0);
  const MarginResult tie = margin_ranking_criterion(2.0, 2.0, 1.0);
  CHECK(tie.loss == 1.0);
  CHECK(tie.d_pos == -1.0);
  CHECK(tie.d_neg == 1.0);
  // m = sqrt(25) = 5, pos 3, neg 1 -> max(0, 5 - 3 + 1) = 3
  CHECK(margin_ranking_criterion(3.0, 1.0, 5.0).loss == 3.0);
  CHECK_THROWS_AS(margin_ranking_criterion(1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(margin_ranking_criterion(1.0, 0.0, -1.0), std::invalid_argument);

  // Away from the hinge the two slopes match finite differences.
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    double pos = rng.uniform(-2.0, 2.0);
    double neg = rng.uniform(-2.0, 2.0);
    const double m = 1.0;
    if (std::abs(m - pos + neg) < 1e-4) {
      continue;
    }
    const MarginResult res = margin_ranking_criterion(pos, neg, m);
    const auto loss = [&]() { return margin_ranking_criterion(pos, neg, m).loss; };
    CHECK(rel_err(res.d_pos, testutil::central_diff(loss, &pos)) < 1e-6);
    CHECK(rel_err(res.d_neg, testutil::central_diff(loss, &neg)) < 1e-6);
  }
}

TEST_CASE("sgd_step applies w -= gamma*grad and clears") {
  LinearLayer layer(1, 1);
  layer.w(0, 0) = 1.0;
  layer.grad_w(0, 0) = 0.5;
  sgd_step(layer, 0.1);
  CHECK(layer.w(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(layer.grad_w(0, 0) == 0.0);

  sgd_step(layer, 0.1);  // zero gradient: parameters unchanged
  CHECK(layer.w(0, 0) == doctest::Approx(0.95).epsilon(1e-15));

  CHECK_THROWS_AS(sgd_step(layer, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sgd_step(layer, -1.0), std::invalid_argument);
}

TEST_CASE("two steps with re-accumulated gradient equal one step of 2*gamma") {
  Rng rng(30);
  LinearLayer a(3, 3, rng);
  LinearLayer b = a;
  const DenseMatrix grad = uniform_init(rng, 3, 3, -1.0, 1.0);

  a.grad_w = grad;
  sgd_step(a, 0.05);
  a.grad_w = grad;
  sgd_step(a, 0.05);

  b.grad_w = grad;
  sgd_step(b, 0.1);

  for (int i = 0; i < a.w.size(); ++i) {
    CHECK(std::abs(a.w[i] - b.w[i]) < 1e-12);
  }
}

TEST_CASE("sgd strictly decreases a smooth convex loss for small gamma") {
  Rng rng(33);
  LinearLayer layer(3, 3, rng);
  const DenseMatrix x = uniform_init(rng, 3, 1, -1.0, 1.0);
  const DenseMatrix target = uniform_init(rng, 3, 1, -1.0, 1.0);
  double previous = mse_criterion(layer.forward(x), target).loss;
  for (int step = 0; step < 50; ++step) {
    const DenseMatrix out = layer.forward(x);
    const MseResult res = mse_criterion(out, target);
    layer.backward(x, res.grad_output);
    sgd_step(layer, 1e-3);
    const double now = mse_criterion(layer.forward(x), target).loss;
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("model file round-trips bit-exactly") {
  Rng rng(40);
  std::vector<NamedMatrix> params;
  params.push_back({"alpha", uniform_init(rng, 3, 5, -1.0, 1.0)});
  params.push_back({"beta.W", uniform_init(rng, 1, 1, -1e-9, 1e-9)});
  // Values with awkward decimal expansions round-trip too.
  params[0].value(0, 0) = 0.1 + 0.2;
  params[0].value(1, 1) = 1.0 / 3.0;
  params[0].value(2, 4) = -1e-300;

  const auto path = temp_file("embedtree_model_roundtrip.model");
  save_model(params, path.string());
  const std::vector<NamedMatrix> loaded = load_model(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "alpha");
  CHECK(loaded[0].value.data() == params[0].value.data());
  CHECK(loaded[1].value.data() == params[1].value.data());

  // Identical parameters produce identical bytes.
  const auto path2 = temp_file("embedtree_model_roundtrip2.model");
  save_model(params, path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
  const std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(bytes1 == bytes2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("model file rejects bad version and truncation") {
  const auto path = temp_file("embedtree_model_bad.model");
  {
    std::ofstream out(path);
    out << "EMBEDNN v2\nend\n";
  }
  CHECK_THROWS_WITH_AS(load_model(path.string()), doctest::Contains("version"),
                       DataError);
  {
    std::ofstream out(path);
    out << "EMBEDNN v1\nparam weights 2 2\n1.0 2.0\n";
  }
  CHECK_THROWS_WITH_AS(load_model(path.string()), doctest::Contains("weights"),
                       DataError);
  {
    std::ofstream out(path);
    out << "EMBEDNN v1\nparam weights 1 2\n1.0 2.0\n";  // missing end
  }
  CHECK_THROWS_WITH_AS(load_model(path.string()), doctest::Contains("end"), DataError);
  CHECK_THROWS_AS(load_model("/nonexistent/embedtree.model"), DataError);
  std::filesystem::remove(path);
}
