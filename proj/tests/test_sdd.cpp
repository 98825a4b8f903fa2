#include "testing.hpp"
#include "sddc/error.hpp"
#include "sddc/sdd.hpp"
#include "test_util.hpp"

using namespace sddc;

TEST_SUITE("sdd") {
  TEST_CASE("bilinear resize matches the scalar oracle") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const int64_t h = 4 + static_cast<int64_t>(seed % 5) * 2, w = 6 + static_cast<int64_t>(seed % 3) * 4;
      auto img = test::rand_image(h, w, seed, 1)[0];
      for (auto [oh, ow] : {std::pair<int64_t, int64_t>{h / 2, w / 2}, {h * 2, w * 2}, {h + 3, w - 1}}) {
        auto got = bilinear_resize(img, oh, ow);
        auto expect = test::from_grid(test::resize_oracle(test::to_grid(img), static_cast<size_t>(oh), static_cast<size_t>(ow)));
        CHECK(test::max_abs(got, expect) <= 1e-6);
      }
    }
  }

  TEST_CASE("constant grid has zero detail") {
    auto g = torch::full({3, 16, 16}, 0.5);
    auto p = decompose(g, 2);
    CHECK(test::max_abs(p.structure, g) == 0.0);
    CHECK(p.detail.abs().max().item<double>() == 0.0);
    CHECK(p.factor == 2);
  }

  TEST_CASE("structure + detail reproduces the input") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
      auto g = test::rand_image(32, 48, seed);
      auto p = decompose(g, 2);
      CHECK(test::max_abs(p.structure + p.detail, g) <= 1e-6);
      CHECK(test::max_abs(recompose(p), g) <= 1e-6);
    }
  }

  TEST_CASE("ramp row matches direct down/up interpolation") {
    auto row = torch::arange(8, torch::kFloat32);
    auto g = row.expand({4, 8}).contiguous().unsqueeze(0);
    auto p = decompose(g, 2);
    auto grid = test::to_grid(g[0]);
    auto expect = test::resize_oracle(test::resize_oracle(grid, 2, 4), 4, 8);
    auto es = test::from_grid(expect);
    CHECK(test::max_abs(p.structure[0], es) <= 1e-6);
    CHECK(test::max_abs(p.detail[0], g[0].to(torch::kFloat64) - es) <= 1e-6);
    // Interior of a ramp survives down/up sampling unchanged.
    CHECK(test::max_abs(p.structure[0].slice(1, 2, 6), g[0].slice(1, 2, 6)) <= 1e-6);
  }

  TEST_CASE("structure equals Up(Down(g)) for factors 2 and 4") {
    auto g = test::rand_image(16, 32, 3);
    for (int f : {2, 4}) {
      auto p = decompose(g, f);
      CHECK(test::max_abs(p.structure, upsample(downsample(g, f), f)) == 0.0);
    }
  }

  TEST_CASE("recompose identities") {
    auto s = test::rand_image(8, 8, 4);
    CHECK(torch::equal(recompose({s, torch::zeros_like(s), 2}), s));
    CHECK(torch::equal(recompose({torch::zeros_like(s), s, 2}), s));
    CHECK_THROWS_AS(recompose({s, torch::zeros({3, 8, 4}), 2}), ShapeError);
  }

  TEST_CASE("non-divisible dims are rejected") {
    CHECK_THROWS_AS(decompose(torch::zeros({3, 15, 16}), 2), ShapeError);
    CHECK_THROWS_AS(decompose(torch::zeros({3, 16, 18}), 4), ShapeError);
  }

  TEST_CASE("works channel-wise on batched feature maps") {
    auto f = torch::randn({2, 5, 8, 8});
    auto p = decompose(f, 2);
    CHECK(p.structure.sizes() == f.sizes());
    for (int64_t c = 0; c < 5; ++c) {
      CHECK(torch::equal(decompose(f.select(1, c), 2).structure, p.structure.select(1, c)));
    }
  }

  TEST_CASE("down then up then down reproduces a [1/8, 3/4, 1/8] smoothing") {
    // Up o Down is not a projection: re-extracting structure from structure
    // leaves a residual. Down(Up(z)) equals z filtered by [1/8, 3/4, 1/8]
    // along each axis (replicate border).
    auto z = test::rand_image(8, 8, 5, 1)[0].to(torch::kFloat64);
    auto du = downsample(upsample(z, 2), 2);
    auto k = [&](const torch::Tensor& t, int64_t dim) {
      const int64_t n = t.size(dim);
      auto prev = t.index_select(dim, torch::arange(n, torch::kLong).sub(1).clamp_min(0));
      auto next = t.index_select(dim, torch::arange(n, torch::kLong).add(1).clamp_max(n - 1));
      return 0.125 * prev + 0.75 * t + 0.125 * next;
    };
    CHECK(test::max_abs(du, k(k(z, 0), 1)) <= 1e-6);
    auto x = test::natural(0).pixels;
    auto p = decompose(x, 2);
    auto again = decompose(p.structure, 2);
    CHECK(again.detail.abs().mean().item<double>() < p.detail.abs().mean().item<double>());
  }

  TEST_CASE("detail carries high frequencies") {
    for (int i = 0; i < 10; ++i) {
      auto x = test::natural(i).pixels;
      auto blurred = test::gaussian_blur(x, 1.5, 4);
      CHECK(decompose(x, 2).detail.abs().mean().item<double>() >
            decompose(blurred, 2).detail.abs().mean().item<double>());
    }
  }

  TEST_CASE("composite gradient matches finite differences") {
    auto x = test::rand_image(8, 8, 9, 1).to(torch::kFloat64).unsqueeze(0);
    auto ws = torch::randn({1, 1, 8, 8}, torch::kFloat64);
    auto wd = torch::randn({1, 1, 8, 8}, torch::kFloat64);
    auto fn = [&](const torch::Tensor& in) {
      auto p = decompose(in, 2);
      return ((p.structure * ws).sum() + (p.detail.pow(2) * wd).sum() + p.structure.sin().sum()).item<double>();
    };
    auto xv = x.clone().requires_grad_(true);
    auto p = decompose(xv, 2);
    ((p.structure * ws).sum() + (p.detail.pow(2) * wd).sum() + p.structure.sin().sum()).backward();
    CHECK(test::relative_error(xv.grad(), test::numeric_gradient(fn, x)) < 1e-3);
  }
}
