#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "json.hpp"
#include "rae/aeset.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/pgm.hpp"
#include "rae/scoring.hpp"

using rae::AeSet;
using rae::Image;
using rae::LoCMap;
using rae::RankedPixel;

namespace {

// Zero-weight AEs reconstruct everything to 0.5, so residuals are exact and
// the LoC values reduce to |pixel - 0.5| / (sigma * c).
AeSet two_zero_aes() {
  AeSet set;
  set.threshold = 2.0;
  set.aes.emplace_back(4, 4);
  set.aes.emplace_back(4, 4);
  set.aes[0].id = 1;
  set.aes[1].id = 2;
  set.aes[0].normalizer.update(2.0);
  set.aes[0].normalizer.update(4.0);  // mean 3, sigma 1
  set.aes[1].normalizer.update(4.0);
  set.aes[1].normalizer.update(6.0);  // mean 5, sigma 1
  return set;
}

Image quadrant_query(int size, double inside, double outside) {
  Image img(size, size, outside);
  for (int y = 0; y < size / 2; ++y)
    for (int x = 0; x < size / 2; ++x) img.at(x, y) = inside;
  return img;
}

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "rae_scoring_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("score_image_with_ae divides the residual by sigma times coefficient") {
  const AeSet set = two_zero_aes();
  // Top-left quadrant at 1.0 (residual 0.5), rest at 0.5 (residual 0).
  const Image query = quadrant_query(4, 1.0, 0.5);
  const LoCMap map = rae::score_image_with_ae(set, query, 1, "img-a");

  CHECK(map.image_id == "img-a");
  CHECK(map.width == 4);
  CHECK(map.height == 4);
  CHECK(map.source_ae == 1);
  REQUIRE(map.values.size() == 16);
  // sigma 1, coefficient 0.8 -> 0.5 / 0.8 = 0.625 exactly.
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double want = (x < 2 && y < 2) ? 0.625 : 0.0;
      CHECK(map.at(x, y) == Catch::Approx(want).margin(1e-15));
    }
  }
}

TEST_CASE("score_image_with_ae carries the residual back to native resolution") {
  const AeSet set = two_zero_aes();
  // 8x8 query; the model works at 4x4 so each model pixel covers a 2x2 block.
  const Image query = quadrant_query(8, 1.0, 0.5);
  const LoCMap map = rae::score_image_with_ae(set, query, 2, "img-b");

  CHECK(map.width == 8);
  CHECK(map.height == 8);
  CHECK(map.source_ae == 2);
  REQUIRE(map.values.size() == 64);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double want = (x < 4 && y < 4) ? 0.625 : 0.0;
      CHECK(map.at(x, y) == Catch::Approx(want).margin(1e-15));
    }
  }
}

TEST_CASE("score_image_with_ae floors a degenerate normalizer's sigma") {
  AeSet set = two_zero_aes();
  set.aes[0].normalizer = rae::Normalizer{};  // count 0: degenerate
  const Image query(4, 4, 0.75);
  const LoCMap map = rae::score_image_with_ae(set, query, 1);
  // residual 0.25 scaled by 1e-6 * 0.8.
  const double want = 0.25 / (1e-6 * 0.8);
  for (const double v : map.values) CHECK(v == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("score_image routes the query through the best-matching AE") {
  const AeSet set = two_zero_aes();
  const Image query(4, 4, 0.75);  // raw error 4: z = 1.25 on AE1, -1.25 on AE2
  const LoCMap map = rae::score_image(set, query, "img-c");
  CHECK(map.source_ae == 2);
  const LoCMap direct = rae::score_image_with_ae(set, query, 2, "img-c");
  CHECK(map.values == direct.values);
}

TEST_CASE("score_image_with_ae validates its inputs") {
  const AeSet set = two_zero_aes();
  CHECK_THROWS_AS(rae::score_image_with_ae(set, Image(4, 4), 3), rae::InvalidInput);
  Image bad(4, 4, 0.5);
  bad.pixels[3] = 1.5;
  CHECK_THROWS_AS(rae::score_image_with_ae(set, bad, 1), rae::InvalidInput);
}

TEST_CASE("rank_pixels orders globally by LoC with deterministic tie-breaks") {
  LoCMap a;
  a.image_id = "b-img";
  a.width = 2;
  a.height = 1;
  a.values = {3.0, 1.0};
  LoCMap b;
  b.image_id = "a-img";
  b.width = 2;
  b.height = 2;
  b.values = {3.0, 0.5, 2.0, 3.0};

  const std::vector<LoCMap> maps = {a, b};
  const std::vector<RankedPixel> ranked = rae::rank_pixels(maps);
  REQUIRE(ranked.size() == 6);

  // Three-way tie at 3.0: image id ascending, then y, then x.
  CHECK(ranked[0].image_id == "a-img");
  CHECK(ranked[0].x == 0);
  CHECK(ranked[0].y == 0);
  CHECK(ranked[1].image_id == "a-img");
  CHECK(ranked[1].x == 1);
  CHECK(ranked[1].y == 1);
  CHECK(ranked[2].image_id == "b-img");
  CHECK(ranked[2].x == 0);
  CHECK(ranked[2].y == 0);
  CHECK(ranked[3].loc == 2.0);
  CHECK(ranked[4].loc == 1.0);
  CHECK(ranked[5].loc == 0.5);
}

TEST_CASE("rank_pixels breaks same-image ties in row-major order") {
  LoCMap m;
  m.image_id = "only";
  m.width = 2;
  m.height = 2;
  m.values = {1.0, 1.0, 1.0, 1.0};
  const std::vector<LoCMap> maps = {m};
  const std::vector<RankedPixel> ranked = rae::rank_pixels(maps);
  REQUIRE(ranked.size() == 4);
  CHECK((ranked[0].x == 0 && ranked[0].y == 0));
  CHECK((ranked[1].x == 1 && ranked[1].y == 0));
  CHECK((ranked[2].x == 0 && ranked[2].y == 1));
  CHECK((ranked[3].x == 1 && ranked[3].y == 1));
}

TEST_CASE("write_loc_map min-max scales the PGM and records the range") {
  const auto dir = temp_dir();
  const auto pgm_path = dir / "map.pgm";
  const auto side_path = dir / "map.json";

  LoCMap map;
  map.image_id = "m-1";
  map.width = 2;
  map.height = 2;
  map.source_ae = 7;
  map.values = {0.0, 1.0, 2.0, 4.0};
  rae::write_loc_map(map, pgm_path.string(), side_path.string());

  const Image img = rae::read_pgm(pgm_path.string());
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  // Rescaled to {0, 0.25, 0.5, 1}, quantized to bytes {0, 64, 128, 255}.
  CHECK(img.pixels[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(img.pixels[1] == Catch::Approx(64.0 / 255.0).margin(1e-12));
  CHECK(img.pixels[2] == Catch::Approx(128.0 / 255.0).margin(1e-12));
  CHECK(img.pixels[3] == Catch::Approx(1.0).margin(1e-12));

  const nlohmann::json side = nlohmann::json::parse(slurp(side_path));
  CHECK(side.at("image_id") == "m-1");
  CHECK(side.at("width") == 2);
  CHECK(side.at("height") == 2);
  CHECK(side.at("source_ae") == 7);
  CHECK(side.at("min").get<double>() == 0.0);
  CHECK(side.at("max").get<double>() == 4.0);
}

TEST_CASE("write_loc_map renders a constant map as all zeros") {
  const auto dir = temp_dir();
  LoCMap map;
  map.image_id = "flat";
  map.width = 3;
  map.height = 1;
  map.values = {2.5, 2.5, 2.5};
  rae::write_loc_map(map, (dir / "flat.pgm").string(), (dir / "flat.json").string());
  const Image img = rae::read_pgm((dir / "flat.pgm").string());
  for (const double v : img.pixels) CHECK(v == 0.0);
}

TEST_CASE("write_loc_map rejects empty and non-finite maps") {
  const auto dir = temp_dir();
  LoCMap empty;
  CHECK_THROWS_AS(rae::write_loc_map(empty, (dir / "x.pgm").string(), (dir / "x.json").string()),
                  rae::InvalidInput);
  LoCMap bad;
  bad.width = 1;
  bad.height = 1;
  bad.values = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(rae::write_loc_map(bad, (dir / "y.pgm").string(), (dir / "y.json").string()),
                  rae::NumericError);
}

TEST_CASE("write_ranked_csv emits exact decimal values") {
  const auto dir = temp_dir();
  const auto path = dir / "ranked.csv";
  const std::vector<RankedPixel> ranked = {
      {"img-a", 3, 1, 0.625},
      {"img-b", 0, 2, 0.3125},
      {"img-b", 1, 2, 0.0},
  };
  rae::write_ranked_csv(ranked, path.string());
  CHECK(slurp(path) ==
        "image_id,x,y,loc\n"
        "img-a,3,1,0.625\n"
        "img-b,0,2,0.3125\n"
        "img-b,1,2,0\n");
}

TEST_CASE("scoring is deterministic across repeated calls") {
  const AeSet set = two_zero_aes();
  Image query(6, 6, 0.5);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) query.at(x, y) = (x + 6 * y) / 40.0;
  const LoCMap first = rae::score_image(set, query, "det");
  const LoCMap second = rae::score_image(set, query, "det");
  CHECK(first.source_ae == second.source_ae);
  CHECK(first.values == second.values);
}
