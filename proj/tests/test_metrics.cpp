#include "testing.hpp"
#include "sddc/metrics.hpp"
#include "test_util.hpp"

using namespace sddc;

TEST_SUITE("metrics") {
  TEST_CASE("psnr closed forms") {
    auto a = test::rand_image(32, 32, 1) * 0.9;
    CHECK(std::abs(psnr(a, a + 1.0 / 255.0) - 20.0 * std::log10(255.0)) < 1e-3);
    CHECK(std::abs(psnr(a, a + 1.0 / 255.0) - 48.131) < 0.01);
    CHECK(std::abs(psnr(a, a + 0.1) - 20.0) < 0.01);
    // checkerboard of +-0.1 also has MSE 0.01
    auto sign = (torch::arange(32 * 32).reshape({32, 32}) % 2) * 2 - 1;
    CHECK(std::abs(psnr(a, a + 0.1 * sign.to(torch::kFloat32)) - 20.0) < 0.01);
    CHECK(mse(a, a + 0.1) == doctest::Approx(0.01).epsilon(1e-5));
  }

  TEST_CASE("identical inputs are flagged lossless") {
    auto a = test::rand_image(16, 16, 2);
    CHECK(is_lossless(psnr(a, a)));
    CHECK_FALSE(is_lossless(psnr(a, a + 0.01)));
  }

  TEST_CASE("ms-ssim of identical frames is exactly one") {
    for (uint64_t s = 0; s < 5; ++s) {
      auto a = test::rand_image(64 + 16 * static_cast<int64_t>(s), 96, s);
      CHECK(ms_ssim(a, a) == 1.0);
    }
    auto n = test::natural(0).pixels;
    CHECK(ms_ssim(n, n) == 1.0);
  }

  TEST_CASE("ms-ssim is symmetric and in (0, 1]") {
    for (uint64_t s = 0; s < 10; ++s) {
      auto a = test::rand_image(64, 64, s);
      auto b = (a + 0.1 * torch::randn_like(a)).clamp(0, 1);
      const double ab = ms_ssim(a, b), ba = ms_ssim(b, a);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
      CHECK(ab > 0.0);
      CHECK(ab <= 1.0);
    }
  }

  TEST_CASE("ms-ssim decreases with noise level") {
    auto a = test::natural(1).pixels;
    auto g = at::make_generator<at::CPUGeneratorImpl>(5);
    auto noise = torch::randn(a.sizes(), g);
    double prev = 1.0;
    for (double sigma : {0.01, 0.03, 0.1, 0.3}) {
      const double v = ms_ssim(a, (a + sigma * noise).clamp(0, 1));
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("scale count follows input size") {
    CHECK(ms_ssim_scales(256, 256) == 5);
    CHECK(ms_ssim_scales(160, 160) == 5);
    CHECK(ms_ssim_scales(64, 64) == 3);
    CHECK(ms_ssim_scales(64, 512) == 3);
    CHECK(ms_ssim_scales(11, 11) == 1);
  }

  TEST_CASE("differentiable ms-ssim matches the scalar one") {
    auto a = test::rand_image(64, 64, 3);
    auto b = (a + 0.05).clamp(0, 1);
    CHECK(ms_ssim_tensor(a.to(torch::kFloat64), b.to(torch::kFloat64)).item<double>() ==
          doctest::Approx(ms_ssim(a, b)).epsilon(1e-9));
  }

  TEST_CASE("shape mismatch is rejected") {
    CHECK_THROWS(psnr(test::rand_image(8, 8, 0), test::rand_image(8, 9, 0)));
    CHECK_THROWS(ms_ssim(test::rand_image(32, 32, 0), test::rand_image(32, 16, 0)));
  }
}
