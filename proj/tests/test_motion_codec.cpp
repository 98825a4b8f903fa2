#include "testing.hpp"
#include "sddc/error.hpp"
#include "sddc/motion_codec.hpp"
#include "test_util.hpp"

using namespace sddc;

namespace {

std::pair<FlowField, FlowField> random_flows(int64_t h, int64_t w, uint64_t seed) {
  auto g = at::make_generator<at::CPUGeneratorImpl>(seed);
  return {FlowField{torch::randn({1, 2, h, w}, g) * 2, FlowKind::structure},
          FlowField{torch::randn({1, 2, h, w}, g) * 0.5, FlowKind::detail}};
}

}  // namespace

TEST_SUITE("motion_codec") {
  TEST_CASE("latent geometry is 1/16 and hyper 1/64") {
    torch::manual_seed(0);
    MotionCodec codec(MotionCodecConfig{16, 8});
    torch::NoGradGuard ng;
    for (auto [h, w] : {std::pair<int64_t, int64_t>{64, 64}, {64, 128}, {128, 192}}) {
      auto [vs, vd] = random_flows(h, w, 1);
      auto m = codec->encode(vs, vd, QuantMode::infer);
      CHECK(m.y.sizes() == torch::IntArrayRef({1, 16, h / 16, w / 16}));
      CHECK(m.hyper.sizes() == torch::IntArrayRef({1, 8, h / 64, w / 64}));
      CHECK(m.params.mu.sizes() == m.y.sizes());
      CHECK(m.params.scale.min().item<double>() >= kScaleMin);
      CHECK(m.hyper_params.scale.sizes() == m.hyper.sizes());
      auto [ds, dd] = codec->decode(m.y);
      CHECK(ds.vectors.sizes() == vs.vectors.sizes());
      CHECK(dd.vectors.sizes() == vd.vectors.sizes());
      CHECK(ds.kind == FlowKind::structure);
      CHECK(dd.kind == FlowKind::detail);
    }
  }

  TEST_CASE("zero flows through zeroed final analysis block give a zero latent") {
    torch::manual_seed(1);
    MotionCodec codec(MotionCodecConfig{16, 8});
    nn::zero_(codec->analysis_output()->last_conv());
    nn::zero_(codec->analysis_output()->skip_conv());
    torch::NoGradGuard ng;
    FlowField z{torch::zeros({1, 2, 64, 64}), FlowKind::structure};
    FlowField zd{torch::zeros({1, 2, 64, 64}), FlowKind::detail};
    auto m = codec->encode(z, zd, QuantMode::infer);
    CHECK(m.y.abs().max().item<float>() == 0.0f);
  }

  TEST_CASE("inference round trip is deterministic") {
    torch::manual_seed(2);
    MotionCodec codec(MotionCodecConfig{16, 8});
    torch::NoGradGuard ng;
    auto [vs, vd] = random_flows(64, 64, 3);
    auto a = codec->encode(vs, vd, QuantMode::infer);
    auto b = codec->encode(vs, vd, QuantMode::infer);
    CHECK(torch::equal(a.y, b.y));
    CHECK(torch::equal(a.hyper, b.hyper));
    CHECK(torch::equal(a.y, a.y.round()));
    auto [s1, d1] = codec->decode(a.y);
    auto [s2, d2] = codec->decode(b.y);
    CHECK(torch::equal(s1.vectors, s2.vectors));
    CHECK(torch::equal(d1.vectors, d2.vectors));
  }

  TEST_CASE("training-mode noise is reproducible with a seed") {
    torch::manual_seed(4);
    MotionCodec codec(MotionCodecConfig{16, 8});
    torch::NoGradGuard ng;
    auto [vs, vd] = random_flows(64, 64, 5);
    auto a = codec->encode(vs, vd, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(9));
    auto b = codec->encode(vs, vd, QuantMode::train, at::make_generator<at::CPUGeneratorImpl>(9));
    CHECK(torch::equal(a.y, b.y));
    CHECK(torch::equal(a.hyper, b.hyper));
    CHECK_FALSE(torch::equal(a.y, a.y.round()));
  }

  TEST_CASE("zero latent decodes to a constant field per channel") {
    torch::manual_seed(5);
    MotionCodec codec(MotionCodecConfig{16, 8});
    torch::NoGradGuard ng;
    auto [s, d] = codec->decode(torch::zeros({1, 16, 4, 4}));
    for (const auto& f : {s.vectors, d.vectors}) {
      for (int c = 0; c < 2; ++c) {
        auto ch = f[0][c];
        CHECK(test::max_abs(ch, ch.flatten()[0].expand_as(ch)) == 0.0);
      }
    }
  }

  TEST_CASE("bad geometry is rejected") {
    MotionCodec codec(MotionCodecConfig{16, 8});
    torch::NoGradGuard ng;
    auto [vs, vd] = random_flows(48, 64, 1);
    CHECK_THROWS_AS(codec->encode(vs, vd, QuantMode::infer), ShapeError);
    auto [as, ad] = random_flows(64, 64, 1);
    auto [bs, bd] = random_flows(64, 128, 1);
    CHECK_THROWS_AS(codec->encode(as, bd, QuantMode::infer), ShapeError);
    CHECK_THROWS_AS(codec->decode(torch::zeros({1, 8, 4, 4})), ShapeError);
  }
}
