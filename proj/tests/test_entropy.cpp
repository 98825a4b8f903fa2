#include <cmath>
#include <random>

#include "testing.hpp"
#include "sddc/entropy.hpp"
#include "sddc/error.hpp"
#include "sddc/range_coder.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace sddc;
using test::laplace_grid;
using test::oracle_bits;


TEST_SUITE("entropy") {
  TEST_CASE("inference quantization rounds half to even") {
    auto q = quantize(torch::tensor({0.4f, 0.6f, -1.5f, 2.5f, -0.5f}), QuantMode::infer);
    CHECK(torch::equal(q, torch::tensor({0.f, 1.f, -2.f, 2.f, -0.f})));
    CHECK(torch::equal(quantize(q, QuantMode::infer), q));
  }

  TEST_CASE("training quantization is seeded additive uniform noise") {
    auto v = torch::randn({1000});
    auto a = quantize(v, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(5));
    auto b = quantize(v, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(5));
    auto c = quantize(v, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(6));
    CHECK(torch::equal(a, b));
    CHECK_FALSE(torch::equal(a, c));
    CHECK((a - v).abs().max().item<double>() <= 0.5);
  }

  TEST_CASE("training noise is unbiased") {
    auto v = torch::zeros({1000000});
    auto u = quantize(v, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(9)).to(torch::kFloat64);
    const double sigma_mean = std::sqrt(1.0 / 12.0) / 1000.0;
    CHECK(std::abs(u.mean().item<double>()) < 3 * sigma_mean);
    CHECK(u.var().item<double>() == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  }

  TEST_CASE("laplace bits at the origin match the closed form") {
    LaplaceParams p{torch::zeros({1}), torch::ones({1})};
    const double expect = static_cast<double>(oracle_bits(0, 0, 1));
    CHECK(std::abs(expect - 1.3456768717) < 1e-9);
    CHECK(std::abs(laplace_bits(torch::zeros({1}), p).bits - expect) <= 1e-6);
    CHECK(std::abs(laplace_bits_tensor(torch::zeros({1}), p).item<double>() - expect) <= 1e-5);
  }

  TEST_CASE("laplace bits match the oracle on seeded grids") {
    auto g = laplace_grid(2000, 3);
    LaplaceParams p{g.mu, g.scale};
    for (int64_t i = 0; i < 2000; i += 97) {
      LaplaceParams one{g.mu.slice(0, i, i + 1), g.scale.slice(0, i, i + 1)};
      const auto expect = oracle_bits(g.q[i].item<float>(), g.mu[i].item<float>(), g.scale[i].item<float>());
      CHECK(std::abs(laplace_bits(g.q.slice(0, i, i + 1), one).bits - static_cast<double>(expect)) <= 1e-6);
    }
    long double total = 0;
    for (int64_t i = 0; i < 2000; ++i) {
      total += oracle_bits(g.q[i].item<float>(), g.mu[i].item<float>(), g.scale[i].item<float>());
    }
    CHECK(std::abs(laplace_bits(g.q, p).bits - static_cast<double>(total)) <= 1e-6 * static_cast<double>(total));
  }

  TEST_CASE("laplace bits symmetry and limits") {
    auto g = laplace_grid(500, 4);
    LaplaceParams p{g.mu, g.scale}, neg{-g.mu, g.scale};
    CHECK(laplace_bits(g.q, p).bits == doctest::Approx(laplace_bits(-g.q, neg).bits).epsilon(1e-12));
    double prev = 1e9;
    for (double b : {1.0, 0.3, 0.1, 0.03, 0.01}) {
      LaplaceParams sharp{torch::full({1}, 3.0), torch::full({1}, b)};
      const double bits = laplace_bits(torch::full({1}, 3.0), sharp).bits;
      CHECK(bits >= 0.0);
      CHECK(bits < prev);
      prev = bits;
    }
    CHECK(prev < 1e-6);
    // Floor: an absurd symbol costs at most 16 bits.
    LaplaceParams tight{torch::zeros({1}), torch::full({1}, 0.01)};
    CHECK(laplace_bits(torch::full({1}, 1000.0), tight).bits == doctest::Approx(16.0));
  }

  TEST_CASE("range coder round trip on 10^4 Laplace symbols") {
    auto g = laplace_grid(10000, 11);
    LaplaceParams p{g.mu, g.scale};
    auto bytes = encode_latent(g.q, p);
    CHECK(torch::equal(decode_latent(bytes, p), g.q));
  }

  TEST_CASE("coded size tracks the estimate") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      auto g = laplace_grid(4000, 100 + seed);
      LaplaceParams p{g.mu, g.scale};
      const double est = laplace_bits(g.q, p).bits;
      const double actual = 8.0 * static_cast<double>(encode_latent(g.q, p).size());
      CHECK(std::abs(actual - est) <= 0.02 * est + 256.0);
    }
  }

  TEST_CASE("out-of-table symbols use the escape path") {
    torch::Tensor q = torch::tensor({0.f, 5000.f, -70000.f, 3.f, 2147483000.f, -2147483000.f});
    LaplaceParams p{torch::zeros({6}), torch::full({6}, 0.5f)};
    auto bytes = encode_latent(q, p);
    CHECK(torch::equal(decode_latent(bytes, p), q));
  }

  TEST_CASE("empty grid") {
    LaplaceParams p{torch::zeros({0}), torch::ones({0})};
    auto bytes = encode_latent(torch::zeros({0}), p);
    CHECK(bytes.size() <= 8);
    CHECK(decode_latent(bytes, p).numel() == 0);
    CHECK(estimate_rate({}).bits == 0.0);
  }

  TEST_CASE("mismatched parameters are detected") {
    auto g = laplace_grid(3000, 21);
    LaplaceParams p{g.mu, g.scale};
    auto bytes = encode_latent(g.q, p);
    LaplaceParams wrong{g.mu + 0.7, g.scale};
    CHECK_THROWS_AS(decode_latent(bytes, wrong), BitstreamError);
    auto corrupt = bytes;
    corrupt[corrupt.size() / 2] ^= 0x40;
    bool detected = false;
    try {
      detected = !torch::equal(decode_latent(corrupt, p), g.q);
    } catch (const BitstreamError&) {
      detected = true;
    }
    CHECK(detected);
    CHECK_THROWS_AS(decode_latent(Bytes(bytes.begin(), bytes.end() - 3), p), BitstreamError);
  }

  TEST_CASE("every single-byte change is detected") {
    auto g = laplace_grid(400, 22, 2.0);
    LaplaceParams p{g.mu, g.scale};
    const auto bytes = encode_latent(g.q, p);
    for (size_t i = 0; i < bytes.size(); ++i) {
      for (uint8_t mask : {0x01, 0x80}) {
        auto corrupt = bytes;
        corrupt[i] ^= mask;
        bool detected = false;
        try {
          detected = !torch::equal(decode_latent(corrupt, p), g.q);
        } catch (const BitstreamError&) {
          detected = true;
        }
        CHECK(detected);
      }
    }
  }

  TEST_CASE("raw range coder interface") {
    RangeEncoder enc;
    std::vector<uint32_t> vals;
    std::mt19937 rng(1);
    for (int i = 0; i < 5000; ++i) {
      vals.push_back(rng() & 0xFFFF);
      enc.encode_bits(vals.back(), 16);
    }
    auto bytes = enc.finish();
    CHECK(bytes.size() <= 10000 + 8);
    RangeDecoder dec(bytes);
    for (uint32_t v : vals) CHECK(dec.decode_bits(16) == v);
    CHECK(dec.overrun() == 0);
  }

  TEST_CASE("estimate_rate is additive over latents") {
    auto a = laplace_grid(300, 1), b = laplace_grid(200, 2), c = laplace_grid(100, 3), d = laplace_grid(50, 4);
    std::vector<CodedLatent> all{{a.q, {a.mu, a.scale}}, {b.q, {b.mu, b.scale}}, {c.q, {c.mu, c.scale}},
                                 {d.q, {d.mu, d.scale}}};
    double sum = 0;
    for (const auto& l : all) sum += laplace_bits(l.q, l.params).bits;
    CHECK(estimate_rate(all).bits == doctest::Approx(sum).epsilon(1e-12));
    std::vector<CodedLatent> with_empty{all[0], {torch::zeros({0}), {torch::zeros({0}), torch::ones({0})}}};
    CHECK(estimate_rate(with_empty).bits == doctest::Approx(laplace_bits(a.q, {a.mu, a.scale}).bits));
  }

  TEST_CASE("bits scale linearly with i.i.d. latent size") {
    std::vector<double> ratios;
    for (uint64_t seed = 0; seed < 5; ++seed) {
      auto small = laplace_grid(20000, 500 + seed, 2.0);
      auto large = laplace_grid(40000, 900 + seed, 2.0);
      ratios.push_back(laplace_bits(large.q, {large.mu, large.scale}).bits /
                       laplace_bits(small.q, {small.mu, small.scale}).bits);
    }
    for (double r : ratios) CHECK(std::abs(r - 2.0) <= 0.1);
  }

  TEST_CASE("parameter predictor clamps scales and handles an absent prior") {
    torch::manual_seed(3);
    ParamPredictor with_prior(8, 4, 6), without(8, 0, 6);
    {
      torch::NoGradGuard ng;
      for (auto& p : with_prior->parameters()) p.normal_(0, 3.0);
    }
    auto h = torch::randn({2, 8, 4, 5}) * 10;
    auto lp = with_prior->forward(h, torch::randn({2, 4, 4, 5}));
    CHECK(lp.mu.sizes() == torch::IntArrayRef({2, 6, 4, 5}));
    CHECK(lp.scale.sizes() == lp.mu.sizes());
    CHECK(lp.scale.min().item<double>() >= kScaleMin - 1e-9);
    auto lq = without->forward(h);
    CHECK(lq.mu.sizes() == torch::IntArrayRef({2, 6, 4, 5}));
    CHECK(lq.scale.min().item<double>() >= kScaleMin - 1e-9);
    CHECK_THROWS_AS(with_prior->forward(h, torch::randn({2, 4, 4, 6})), ShapeError);
  }

  TEST_CASE("hyper density gives per-channel zero-mean scales") {
    HyperDensity d(5);
    auto p = d->params({2, 5, 3, 4});
    CHECK(p.mu.sizes() == torch::IntArrayRef({2, 5, 3, 4}));
    CHECK(p.mu.abs().max().item<float>() == 0.0f);
    CHECK(p.scale.min().item<double>() >= kScaleMin);
    CHECK(torch::equal(p.scale[0][2], p.scale[1][2]));
  }

  TEST_CASE("lower bound passes gradients that raise the value") {
    auto x = torch::tensor({-1.0, 0.5, 2.0}, torch::kFloat64).requires_grad_(true);
    auto y = lower_bound(x, 1.0);
    CHECK(torch::equal(y.detach(), torch::tensor({1.0, 1.0, 2.0}, torch::kFloat64)));
    (y * torch::tensor({-1.0, 1.0, 1.0}, torch::kFloat64)).sum().backward();
    // below the bound: -1 (would raise x) passes, +1 (would lower it) is blocked
    CHECK(torch::equal(x.grad(), torch::tensor({-1.0, 0.0, 1.0}, torch::kFloat64)));
  }

  TEST_CASE("far-off symbols under a collapsed scale still get a gradient") {
    // b at its floor and the symbol one step away: p underflows float32 and
    // sits at the floor, but rate must still pull the scale up.
    auto s = torch::full({1}, 0.01f).requires_grad_(true);
    auto mu = torch::zeros({1}).requires_grad_(true);
    auto bits = laplace_bits_tensor(torch::ones({1}), {mu, s});
    CHECK(bits.item<float>() == doctest::Approx(16.0));
    bits.backward();
    CHECK(s.grad().item<float>() < 0.0f);
    CHECK(mu.grad().item<float>() < 0.0f);
    CHECK(torch::isfinite(s.grad()).all().item<bool>());
  }

  TEST_CASE("likelihood is differentiable in mu and scale") {
    auto mu = torch::randn({50}, torch::kFloat64).requires_grad_(true);
    auto s = (torch::rand({50}, torch::kFloat64) + 0.2).requires_grad_(true);
    auto q = torch::randn({50}, torch::kFloat64).round();
    laplace_bits_tensor(q, {mu, s}).backward();
    auto num = test::numeric_gradient(
        [&](const torch::Tensor& m) { return laplace_bits_tensor(q, {m, s.detach()}).item<double>(); }, mu.detach());
    CHECK(test::relative_error(mu.grad(), num) < 1e-3);
  }
}
