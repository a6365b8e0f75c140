#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "softseg/labels.hpp"

#include "oracles.hpp"

using namespace softseg;

namespace {

SoftMask random_soft(int w, int h, std::mt19937_64& rng) {
  SoftMask m(w, h);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("soften_binary is a pixelwise max") {
  SoftMask soft(2, 1);
  soft.data() = {0.4, 0.4};
  BinaryMask binary(2, 1);
  binary.data() = {1, 0};
  const SoftMask out = soften_binary(soft, binary);
  CHECK(out.data()[0] == 1.0);
  CHECK(out.data()[1] == 0.4);

  const BinaryMask zeros(2, 1);
  CHECK(soften_binary(soft, zeros) == soft);

  CHECK_THROWS_AS(soften_binary(soft, BinaryMask(3, 1)), Error);
}

TEST_CASE("soften_binary dominates its inputs and is idempotent") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const SoftMask s = random_soft(8, 6, rng);
    const BinaryMask m = oracles::random_mask(8, 6, rng);
    const SoftMask out = soften_binary(s, m);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(out.data()[i] >= s.data()[i]);
      CHECK(out.data()[i] >= double(m.data()[i]));
    }
    CHECK(soften_binary(out, m) == out);
  }
}

TEST_CASE("binarize thresholds and stays monotone") {
  SoftMask soft(2, 1);
  soft.data() = {0.2, 0.6};
  const BinaryMask b = binarize(soft);  // default threshold 128/255
  CHECK(int(b.data()[0]) == 0);
  CHECK(int(b.data()[1]) == 1);

  CHECK(count_set(binarize(soft, 0.0)) == soft.size());

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const SoftMask s = random_soft(6, 6, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double t1 = u(rng), t2 = u(rng);
    if (t1 > t2) std::swap(t1, t2);
    const BinaryMask hi = binarize(s, t2), lo = binarize(s, t1);
    for (std::size_t i = 0; i < s.size(); ++i)
      CHECK(hi.data()[i] <= lo.data()[i]);
  }
}

TEST_CASE("binarizing a softened mask near 1 keeps the binary mask") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const SoftMask s = random_soft(5, 5, rng);
    const BinaryMask m = oracles::random_mask(5, 5, rng);
    const BinaryMask out = binarize(soften_binary(s, m), 0.999);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.data()[i]) CHECK(out.data()[i] == 1);
  }
}

TEST_CASE("mix_labels follows the convex combination") {
  const LabelDistribution q({1.0, 0.0});
  const LabelDistribution u({0.5, 0.5});

  SECTION("epsilon 0 is the identity") {
    const LabelDistribution mixed = mix_labels(q, u, 0.0);
    CHECK(mixed[0] == 1.0);
    CHECK(mixed[1] == 0.0);
  }
  SECTION("epsilon 0.1") {
    const LabelDistribution mixed = mix_labels(q, u, 0.1);
    CHECK(mixed[0] == Catch::Approx(0.95));
    CHECK(mixed[1] == Catch::Approx(0.05));
  }
  SECTION("output is always a distribution, and the mix is affine") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> p(4), r(4);
      double ps = 0.0, rs = 0.0;
      for (auto& v : p) ps += (v = unit(rng));
      for (auto& v : r) rs += (v = unit(rng));
      for (auto& v : p) v /= ps;
      for (auto& v : r) v /= rs;
      const LabelDistribution qq(p), uu(r);
      const double eps = unit(rng);
      const LabelDistribution mixed = mix_labels(qq, uu, eps);
      double sum = 0.0;
      for (std::size_t i = 0; i < mixed.classes(); ++i) {
        sum += mixed[i];
        CHECK(mixed[i] ==
              Catch::Approx((1 - eps) * qq[i] + eps * uu[i]).margin(1e-15));
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  SECTION("mismatched classes and bad epsilon are rejected") {
    CHECK_THROWS_AS(mix_labels(q, LabelDistribution({1.0, 0.0, 0.0}), 0.1),
                    Error);
    CHECK_THROWS_AS(mix_labels(q, u, 1.5), Error);
    CHECK_THROWS_AS(mix_labels(q, u, -0.1), Error);
  }
  SECTION("the mixing partner defaults to uniform") {
    const LabelDistribution mixed = mix_labels(q, 0.1);
    CHECK(mixed[0] == Catch::Approx(0.95));
    CHECK(mixed[1] == Catch::Approx(0.05));
  }
}

TEST_CASE("consensus counts votes against ceil(fraction * raters)") {
  BinaryMask a(2, 1), b(2, 1), c(2, 1), d(2, 1);
  a.data() = {1, 1};
  b.data() = {1, 0};
  c.data() = {0, 0};
  d.data() = {0, 0};

  SECTION("two of four votes pass at fraction one half") {
    const BinaryMask out = consensus({a, b, c, d}, 0.5);
    CHECK(int(out.data()[0]) == 1);  // 2 votes
    CHECK(int(out.data()[1]) == 0);  // 1 vote
  }
  SECTION("fraction 1 is the intersection") {
    const BinaryMask out = consensus({a, b}, 1.0);
    CHECK(int(out.data()[0]) == 1);
    CHECK(int(out.data()[1]) == 0);
  }
  SECTION("a single mask passes through at any fraction") {
    CHECK(consensus({b}, 0.25) == b);
    CHECK(consensus({b}, 1.0) == b);
  }
  SECTION("consensus shrinks as the fraction grows") {
    std::mt19937_64 rng(5);
    std::vector<BinaryMask> masks;
    for (int r = 0; r < 5; ++r)
      masks.push_back(oracles::random_mask(6, 6, rng));
    const BinaryMask loose = consensus(masks, 0.2);
    const BinaryMask strict = consensus(masks, 0.8);
    for (std::size_t i = 0; i < loose.size(); ++i)
      CHECK(strict.data()[i] <= loose.data()[i]);
  }
  SECTION("empty input is rejected") {
    CHECK_THROWS_AS(consensus({}, 0.5), Error);
  }
}

TEST_CASE("mse loss and gradient") {
  SECTION("zero at the minimum") {
    SoftMask p(2, 2, 0.3);
    CHECK(mse_loss(p, p, 1, 2, 2) == 0.0);
    const Plane<double> g = grad_mse(p, p, 1, 2, 2);
    for (double v : g.data()) CHECK(v == 0.0);
  }
  SECTION("single pixel worked example") {
    SoftMask pred(1, 1, 0.5), target(1, 1, 1.0);
    CHECK(mse_loss(pred, target, 1, 1, 1) == Catch::Approx(0.25));
    CHECK(grad_mse(pred, target, 1, 1, 1).data()[0] == Catch::Approx(-1.0));
  }
  SECTION("normalization by r^2 W H") {
    SoftMask pred(2, 2, 0.0), target(2, 2, 1.0);
    CHECK(mse_loss(pred, target, 2, 1, 1) == Catch::Approx(1.0));
  }
  SECTION("dimension mismatch with the declared factors") {
    SoftMask pred(2, 2, 0.0);
    CHECK_THROWS_AS(mse_loss(pred, pred, 1, 3, 3), Error);
    CHECK_THROWS_AS(mse_loss(pred, SoftMask(4, 4, 0.0), 2, 1, 1), Error);
  }
}

TEST_CASE("l1 loss and subgradient") {
  SoftMask pred(2, 1), target(2, 1);
  pred.data() = {0.0, 1.0};
  target.data() = {1.0, 1.0};
  CHECK(l1_loss(pred, target) == Catch::Approx(0.5));
  CHECK(l1_loss(target, target) == 0.0);

  const auto g = grad_l1(pred, target);
  CHECK(g.data()[0] == Catch::Approx(-0.5));
  CHECK(g.data()[1] == 0.0);  // tie pinned to zero
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(6);
  const SoftMask target = random_soft(5, 5, rng);
  SoftMask pred = random_soft(5, 5, rng);
  std::uniform_int_distribution<std::size_t> pick(0, pred.size() - 1);

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t i = pick(rng);

    const auto mse_at = [&](double v) {
      SoftMask p = pred;
      p.data()[i] = v;
      return mse_loss(p, target, 1, 5, 5);
    };
    const double mse_fd = oracles::central_difference(mse_at, pred.data()[i]);
    const double mse_an = grad_mse(pred, target, 1, 5, 5).data()[i];
    CHECK(mse_an == Catch::Approx(mse_fd).epsilon(1e-4).margin(1e-9));

    if (std::abs(pred.data()[i] - target.data()[i]) > 1e-3) {
      const auto l1_at = [&](double v) {
        SoftMask p = pred;
        p.data()[i] = v;
        return l1_loss(p, target);
      };
      const double l1_fd = oracles::central_difference(l1_at, pred.data()[i]);
      const double l1_an = grad_l1(pred, target).data()[i];
      CHECK(l1_an == Catch::Approx(l1_fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("adversarial losses in least-squares form") {
  SECTION("fooled discriminator zeroes the generator loss") {
    const SoftMask ones(3, 3, 1.0), half(3, 3, 0.5);
    CHECK(adversarial_losses(ones, half).generator == 0.0);
  }
  SECTION("perfect discriminator zeroes its own loss") {
    const SoftMask zeros(3, 3, 0.0), ones(3, 3, 1.0);
    CHECK(adversarial_losses(zeros, ones).discriminator == 0.0);
  }
  SECTION("uncertain discriminator worked example") {
    const SoftMask half(2, 2, 0.5);
    const AdversarialLosses l = adversarial_losses(half, half);
    CHECK(l.generator == Catch::Approx(0.25));
    CHECK(l.discriminator == Catch::Approx(0.5));
  }
  SECTION("out-of-range probabilities are rejected") {
    SoftMask bad(1, 1, 1.5);
    CHECK_THROWS_AS(adversarial_losses(bad, SoftMask(1, 1, 0.5)), Error);
  }
}

TEST_CASE("objective composition is linear") {
  CHECK(total_objective(0.25, 0.5, 100.0) == Catch::Approx(50.25));
  CHECK(total_objective(0.7, 0.0, 100.0) == Catch::Approx(0.7));
  CHECK_THROWS_AS(total_objective(-0.1, 0.5, 100.0), Error);

  CHECK(distill_combine(0.2, 0.4, 1.0) == Catch::Approx(0.2));
  CHECK(distill_combine(0.2, 0.4, 0.5) == Catch::Approx(0.3));
  CHECK(distill_combine(0.2, 0.4, 0.0) == Catch::Approx(0.4));
  CHECK_THROWS_AS(distill_combine(0.2, 0.4, 1.5), Error);

  // Exact linearity in each argument.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), lambda = 100.0 * u(rng);
    CHECK(total_objective(2.0 * a, b, lambda) - total_objective(a, b, lambda) ==
          Catch::Approx(a));
    const double alpha = u(rng);
    CHECK(distill_combine(a, b, alpha) ==
          Catch::Approx(alpha * a + (1 - alpha) * b));
  }
}

TEST_CASE("loss breakdown composes total = adversarial + lambda * l1") {
  std::mt19937_64 rng(8);
  const SoftMask pred = random_soft(4, 4, rng);
  const SoftMask target = random_soft(4, 4, rng);
  const SoftMask d_fake(4, 4, 0.3), d_real(4, 4, 0.9);
  const LossBreakdown b =
      compute_loss_breakdown(pred, target, d_fake, d_real, 100.0, 2, 2, 2);
  CHECK(b.total == Catch::Approx(b.adversarial + b.lambda * b.l1));
  CHECK(b.mse >= 0.0);
  CHECK(b.l1 >= 0.0);
  CHECK(b.adversarial >= 0.0);
  CHECK(b.r == 2);
}
