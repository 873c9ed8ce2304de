#include <cmath>
#include <limits>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "rae/autoencoder.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/rng.hpp"

using rae::Activation;
using rae::Autoencoder;
using rae::Image;

namespace {

Image random_image(int w, int h, std::uint64_t seed, double lo = 0.1, double hi = 0.9) {
  Image img(w, h);
  rae::Rng rng(seed);
  for (double& v : img.pixels) v = rng.uniform(lo, hi);
  return img;
}

// central finite differences against the analytic gradient; returns the
// worst relative error over every weight and bias
double max_gradient_rel_error(Autoencoder& ae, const Image& img, double step) {
  const rae::Gradients analytic = rae::gradient(ae, img);
  double worst = 0.0;
  auto probe = [&](double& param, double grad) {
    const double saved = param;
    param = saved + step;
    const double up = rae::training_loss(ae, img);
    param = saved - step;
    const double down = rae::training_loss(ae, img);
    param = saved;
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(fd - grad) / std::max(1e-8, std::abs(fd) + std::abs(grad));
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < ae.weights().size(); ++l) {
    for (std::size_t i = 0; i < ae.weights()[l].size(); ++i)
      probe(ae.mutable_weights()[l][i], analytic.weights[l][i]);
    for (std::size_t i = 0; i < ae.biases()[l].size(); ++i)
      probe(ae.mutable_biases()[l][i], analytic.biases[l][i]);
  }
  return worst;
}

double min_abs_preact(const Autoencoder& ae, const Image& img) {
  std::vector<std::vector<double>> acts, preacts;
  ae.forward(img.pixels, acts, preacts);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l < preacts.size(); ++l)
    for (const double z : preacts[l]) lo = std::min(lo, std::abs(z));
  return lo;
}

}  // namespace

TEST_CASE("default architecture is the quarter/sixteenth pyramid") {
  const Autoencoder ae(4, 4);
  CHECK(ae.layer_sizes() == std::vector<int>{16, 4, 1, 4, 16});
  CHECK(ae.activations().size() == 4);
  CHECK(ae.activations().front() == Activation::kRelu);
  CHECK(ae.activations().back() == Activation::kSigmoid);

  const Autoencoder tiny(2, 2);  // hidden floor of one unit
  CHECK(tiny.layer_sizes() == std::vector<int>{4, 1, 1, 1, 4});
}

TEST_CASE("layer validation") {
  CHECK_THROWS_AS(Autoencoder(2, 2, {4, 3, 5}), rae::InvalidInput);      // not palindromic
  CHECK_THROWS_AS(Autoencoder(2, 2, {5, 3, 5}), rae::InvalidInput);      // first != D
  CHECK_THROWS_AS(Autoencoder(2, 2, {4, 0, 4}), rae::InvalidInput);      // nonpositive layer
  CHECK_THROWS_AS(Autoencoder(2, 2, {4, 3, 4}, {Activation::kRelu}), rae::InvalidInput);
  CHECK_NOTHROW(Autoencoder(2, 2, {4, 3, 4}));
}

TEST_CASE("zero weights reconstruct to sigmoid midpoint") {
  const Autoencoder ae(3, 3);
  const Image img = random_image(3, 3, 1);
  const Image recon = ae.reconstruct(img);
  for (const double v : recon.pixels) CHECK(v == 0.5);
}

TEST_CASE("check_input rejects mismatched shapes") {
  const Autoencoder ae(3, 3);
  CHECK_THROWS_AS(ae.reconstruct(Image(3, 4)), rae::ShapeError);
}

TEST_CASE("reconstruction error sums absolute pixel differences") {
  Image a(2, 2, 0.75);
  Image b(2, 2, 0.5);
  CHECK(rae::reconstruction_error(a, b) == Catch::Approx(1.0).margin(1e-15));

  const std::vector<std::size_t> region{0, 3};
  CHECK(rae::reconstruction_error(a, b, region) == Catch::Approx(0.5).margin(1e-15));
  CHECK(rae::reconstruction_error(a, b, std::vector<std::size_t>{}) == 0.0);
  CHECK_THROWS_AS(rae::reconstruction_error(a, b, std::vector<std::size_t>{4}), rae::InvalidInput);
  CHECK_THROWS_AS(rae::reconstruction_error(a, Image(2, 3)), rae::ShapeError);
}

TEST_CASE("reconstruction error matches a brute-force loop on random pairs") {
  rae::Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int w = 1 + static_cast<int>(rng.next_below(64));
    const int h = 1 + static_cast<int>(rng.next_below(64));
    const Image a = random_image(w, h, rng.next_u64(), 0.0, 1.0);
    const Image b = random_image(w, h, rng.next_u64(), 0.0, 1.0);
    double expected = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) expected += std::abs(a.at(x, y) - b.at(x, y));
    CHECK(rae::reconstruction_error(a, b) == expected);  // identical arithmetic order not required
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  SECTION("4-6-4 with default activations") {
    Autoencoder ae = rae::make_autoencoder(2, 2, 31, 1.0, {4, 6, 4});
    const Image img = random_image(2, 2, 32);
    REQUIRE(min_abs_preact(ae, img) > 1e-3);  // keep finite differences away from relu kinks
    CHECK(max_gradient_rel_error(ae, img, 1e-5) < 1e-4);
  }
  SECTION("deeper all-sigmoid stack") {
    Autoencoder ae = rae::make_autoencoder(3, 3, 33, 1.0, {9, 4, 2, 4, 9},
                                           std::vector<Activation>(4, Activation::kSigmoid));
    const Image img = random_image(3, 3, 34);
    CHECK(max_gradient_rel_error(ae, img, 1e-5) < 1e-4);
  }
  SECTION("linear output") {
    Autoencoder ae = rae::make_autoencoder(2, 2, 35, 1.0, {4, 3, 4},
                                           {Activation::kSigmoid, Activation::kLinear});
    const Image img = random_image(2, 2, 36);
    CHECK(max_gradient_rel_error(ae, img, 1e-5) < 1e-4);
  }
}

TEST_CASE("fit lowers the training loss") {
  // Noisy views of one scene, the shape of a real training cluster.
  const Image base = random_image(4, 4, 100, 0.3, 0.7);
  std::vector<Image> images;
  rae::Rng noise(101);
  for (int i = 0; i < 6; ++i) {
    Image img = base;
    for (double& p : img.pixels) p = std::clamp(p + 0.01 * noise.next_gaussian(), 0.0, 1.0);
    images.push_back(std::move(img));
  }
  Autoencoder ae = rae::make_autoencoder(4, 4, 50, 1.0, {16, 8, 16});
  double before = 0.0;
  for (const Image& img : images) before += rae::training_loss(ae, img);
  rae::TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 2.0;
  cfg.batch_size = 4;
  cfg.seed = 9;
  rae::fit(ae, images, cfg);
  double after = 0.0;
  for (const Image& img : images) after += rae::training_loss(ae, img);
  CHECK(after < 0.5 * before);
  CHECK(ae.parameters_finite());
}

TEST_CASE("fit is deterministic and learning_rate zero is a no-op") {
  std::vector<Image> images{random_image(3, 3, 4), random_image(3, 3, 5)};
  rae::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.5;
  cfg.batch_size = 2;
  cfg.seed = 123;

  Autoencoder a = rae::make_autoencoder(3, 3, 77);
  Autoencoder b = rae::make_autoencoder(3, 3, 77);
  rae::fit(a, images, cfg);
  rae::fit(b, images, cfg);
  CHECK(a.weights() == b.weights());
  CHECK(a.biases() == b.biases());

  Autoencoder frozen = rae::make_autoencoder(3, 3, 77);
  const auto weights_before = frozen.weights();
  rae::TrainConfig noop = cfg;
  noop.learning_rate = 0.0;
  rae::fit(frozen, images, noop);
  CHECK(frozen.weights() == weights_before);
}

TEST_CASE("fit validates inputs") {
  Autoencoder ae = rae::make_autoencoder(3, 3, 1);
  rae::TrainConfig cfg;
  CHECK_THROWS_AS(rae::fit(ae, std::vector<Image>{}, cfg), rae::InvalidInput);
  CHECK_THROWS_AS(rae::fit(ae, std::vector<Image>{Image(2, 2)}, cfg), rae::ShapeError);
  rae::TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(rae::fit(ae, std::vector<Image>{Image(3, 3)}, bad), rae::InvalidInput);
}

TEST_CASE("weight init is reproducible and respects the scale") {
  Autoencoder a = rae::make_autoencoder(4, 4, 21, 0.5);
  Autoencoder b = rae::make_autoencoder(4, 4, 21, 0.5);
  CHECK(a.weights() == b.weights());
  const double bound = 0.5 / std::sqrt(16.0);
  for (const double w : a.weights()[0]) {
    CHECK(w >= -bound);
    CHECK(w <= bound);
  }
  for (const double bias : a.biases()[0]) CHECK(bias == 0.0);
  Autoencoder c = rae::make_autoencoder(4, 4, 22, 0.5);
  CHECK(a.weights() != c.weights());
}
