#include "doctest.h"

#include "tpsgeom/errors.hpp"
#include "tpsgeom/gradcheck.hpp"
#include "tpsgeom/image_io.hpp"
#include "tpsgeom/json_io.hpp"
#include "tpsgeom/rng.hpp"

#include "json.hpp"

#include <filesystem>

using namespace tpsgeom;

TEST_CASE("TPS parameter JSON round trip") {
  CounterRng rng(1);
  for (auto d : {FiducialDistribution::Edge, FiducialDistribution::Center, FiducialDistribution::Cross}) {
    TpsParams p;
    p.config = make_fiducials(d, 8);
    p.t.resize(2, 11);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 11; ++c) p.t(r, c) = rng.normal(0, 100);
    const std::string text = tps_params_to_json(p);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["k"] == 8);
    CHECK(j["distribution"] == to_string(d));
    CHECK(j["t"].size() == 2);
    CHECK(j["t"][0].size() == 11);
    CHECK(j["t"][0][1] == p.t(0, 1));
    const auto back = tps_params_from_json(text);
    CHECK(back.config == p.config);
    CHECK((back.t.array() == p.t.array()).all());
  }
  CHECK_THROWS_AS(tps_params_from_json(R"({"k": 8, "distribution": "cross", "t": [[1,2,3]]})"), ConfigError);
  CHECK_THROWS_AS(tps_params_from_json(R"({"k": 8, "distribution": "cross", "t": [[1,2,3],[4,5,6]]})"), ConfigError);
  CHECK_THROWS_AS(tps_params_from_json(R"({"k": 7, "distribution": "cross", "t": [[],[]]})"), ConfigError);
  CHECK_THROWS_AS(tps_params_from_json("[1,"), ConfigError);
}

TEST_CASE("Bezier parameter JSON round trip") {
  const BezierParams p{{{0, 0}, {1.25, 3}, {2, -1}, {3, 0.1}}, {{0, 5}, {1, 6}, {2, 4}, {3, 5}}};
  const auto back = bezier_params_from_json(bezier_params_to_json(p));
  CHECK(back.top == p.top);
  CHECK(back.bottom == p.bottom);
  CHECK_THROWS_AS(bezier_params_from_json(R"({"top": [[0,0],[1,1]]})"), ConfigError);
}

TEST_CASE("raster JSON and PGM round trips") {
  CounterRng rng(2);
  GrayImage img{7, 5, {}, {{-3.5, 12.25}, 2.0}};
  for (int i = 0; i < 35; ++i) img.values.push_back(rng.uniform());
  img.values[0] = 0.0;
  img.values[1] = 1.0;
  const auto back = gray_image_from_json(gray_image_to_json(img));
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.values == img.values);
  CHECK(back.frame.origin == img.frame.origin);
  CHECK(back.frame.scale == img.frame.scale);
  const std::string pgm = encode_pgm(img);
  CHECK(pgm.rfind("P5", 0) == 0);
  const auto dec = decode_pgm(pgm);
  for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(std::abs(dec.values[i] - img.values[i]) <= 0.5 / 255.0 + 1e-12);
  CHECK(quantize(img)[1] == 255);
  CHECK_THROWS_AS(gray_image_from_json(R"({"width": 2, "height": 2, "origin": [0,0], "scale": 1, "values": [1]})"), ConfigError);
}

TEST_CASE("base64 and atomic writes") {
  const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 252, 253, 254, 255, 'a'};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    const std::span<const std::uint8_t> part(bytes.data(), n);
    CHECK(base64_decode(base64_encode(part)) == std::vector<std::uint8_t>(part.begin(), part.end()));
  }
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
  const auto dir = std::filesystem::temp_directory_path() / "tpsgeom_io_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "x.txt", "first");
  write_file_atomic(dir / "x.txt", "second");
  CHECK(read_file(dir / "x.txt") == "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_file(dir / "nope"), IoError);
}

TEST_CASE("fit report JSON") {
  FitReport r;
  r.method = "bezier(degree=3)";
  r.per_instance.push_back({"a", false, "", 0.9, 0.8, 0.85, 0.1});
  r.per_instance.push_back({"b", true, "singular", 0, 0, 0, 0});
  r = aggregate(r.method, r.per_instance, 256);
  const auto j = nlohmann::json::parse(fit_report_to_json(r));
  CHECK(j["method"] == "bezier(degree=3)");
  CHECK(j["resolution"] == 256);
  CHECK(j["aggregate"]["tiou_hmean"].get<double>() == doctest::Approx(r.tiou_hmean));
  CHECK(j["aggregate"]["failures"] == 1);
  CHECK(j["per_instance"].size() == 2);
  CHECK(j["per_instance"][1]["failed"] == true);
}

TEST_CASE("gradient check harness") {
  GradcheckOptions o;
  o.trials = 40;
  const auto ok = run_gradcheck(o);
  CHECK(ok.passed());
  CHECK(ok.ba_max_rel_error < 1e-3);
  CHECK(ok.corner_max_rel_error < 1e-3);
  CHECK(ok.corner_excluded > 0);
  o.corrupt = true;
  const auto bad = run_gradcheck(o);
  CHECK_FALSE(bad.passed());
  CHECK(bad.ba_max_rel_error > 0.3);
  o.trials = 0;
  CHECK_THROWS_AS(run_gradcheck(o), ConfigError);
  o.corrupt = false;
  o.trials = 5;
  CHECK(run_gradcheck(o).summary() == run_gradcheck(o).summary());
}
