#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "spalloc/neighborhoods.hpp"
#include "spalloc/scenario_io.hpp"

using namespace spalloc;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("spalloc_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("scenarios_io") {

TEST_CASE("generation is a pure function of the config") {
  GeneratorConfig cfg;
  cfg.seed = 42;
  const Scenario a = generate(cfg);
  const Scenario b = generate(cfg);
  CHECK(a == b);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  cfg.seed = 43;
  CHECK_FALSE(generate(cfg) == a);
}

TEST_CASE("geometry, powers and loads") {
  GeneratorConfig cfg;
  cfg.n = 6;
  cfg.k = 10;
  cfg.seed = 3;
  const Scenario s = generate(cfg);
  s.validate();
  CHECK(s.ap_positions(0, 0) == 250);
  CHECK(s.ap_positions(0, 1) == 250);
  CHECK(s.tx_psd(0) == 5);
  for (Index i = 1; i < 6; ++i) {
    CHECK(s.tx_psd(i) == 1);
    CHECK(s.ap_positions(i, 0) > 0);
    CHECK(s.ap_positions(i, 0) < 500);
  }
  CHECK((s.noise_psd.array() == 1e-7).all());
  CHECK(s.gain.allFinite());
  CHECK((s.gain.array() > 0).all());
  CHECK((s.arrival_rates.array() > 0).all());
  CHECK((s.arrival_rates.array() < 100).all());
  // A 4 x 3 lattice of cells for 10 UEs, centered in each cell.
  CHECK(s.ue_positions(0, 0) == doctest::Approx(62.5));
  CHECK(s.ue_positions(0, 1) == doctest::Approx(500.0 / 6));
  CHECK(s.ue_positions(4, 1) == doctest::Approx(250));
}

TEST_CASE("pathloss without shadowing") {
  GeneratorConfig cfg;
  cfg.n = 4;
  cfg.k = 9;
  cfg.shadow_sigma_db = 0;
  cfg.seed = 8;
  const Scenario s = generate(cfg);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 9; ++j) {
      const double d = std::max(1.0, (s.ap_positions.row(i) - s.ue_positions.row(j)).norm());
      CHECK(s.gain(i, j) == doctest::Approx(std::pow(d, -3.0)).epsilon(1e-12));
    }
  // Corner UEs of the lattice are equidistant from the central macro.
  CHECK(s.gain(0, 0) == doctest::Approx(s.gain(0, 8)).epsilon(1e-12));
  CHECK(s.gain(0, 2) == doctest::Approx(s.gain(0, 6)).epsilon(1e-12));
}

TEST_CASE("default drop neighborhoods fit the cap") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const Neighborhoods nb = build_neighborhoods(generate(cfg), 4);
    CHECK_NOTHROW(check_neighborhood_cap(nb));
  }
}

TEST_CASE("cell-edge SNR") {
  const Scenario s = spalloc::test::make_scenario((Matrix(2, 2) << 1e-6, 2e-6, 4e-6, 1e-6).finished(),
                                                  spalloc::test::vec({1, 1}), spalloc::test::vec({1e-7, 1e-7}),
                                                  spalloc::test::vec({1, 1}));
  // UE 1's best link is 2e-6 / 1e-7 = 20.
  CHECK(cell_edge_snr_db(s) == doctest::Approx(10 * std::log10(20.0)));
}

TEST_CASE("scaling loads") {
  const Scenario s = spalloc::test::small_drop(3, 4, 1);
  const Scenario t = scale_load(s, 2.5);
  CHECK(t.arrival_rates == s.arrival_rates * 2.5);
  CHECK(t.gain == s.gain);
}

TEST_CASE("json round trip") {
  GeneratorConfig cfg;
  cfg.seed = 11;
  const Scenario s = generate(cfg);
  const std::string path = temp_path("roundtrip.json");
  save_scenario(s, path);
  CHECK(load_scenario(path) == s);
  std::filesystem::remove(path);
}

TEST_CASE("json errors name the problem") {
  const std::string text = scenario_to_json(spalloc::test::small_drop(2, 2, 1));
  std::string missing = text;
  const auto at = missing.find("\"tx_psd\"");
  missing.replace(at, 8, "\"tx_pxd\"");
  CHECK_THROWS_WITH_AS(scenario_from_json(missing), doctest::Contains("missing field 'tx_psd'"), Error);
  CHECK_THROWS_WITH(scenario_from_json("{\"n\": 2,"), doctest::Contains("parse error at byte"));
  std::string wrong = text;
  wrong.replace(wrong.find("\"k\": 2"), 6, "\"k\": 3");
  CHECK_THROWS_WITH(scenario_from_json(wrong), doctest::Contains("ue_positions"));
  CHECK_THROWS_WITH(load_scenario(temp_path("does_not_exist.json")), doctest::Contains("cannot read"));
}

TEST_CASE("result rows") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2) == "2");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  ResultRow r;
  r.scheme = "p0";
  r.seed = 3;
  r.n = 10;
  r.k = 23;
  r.segments = 4;
  r.load_scale = 0.5;
  r.total_arrival_pps = 100.25;
  r.utility = -2;
  r.avg_delay_s = 0.02;
  r.active_patterns = 3;
  CHECK(to_csv(r) == "p0,3,10,23,4,0.5,100.25,-2,0.02,,3,");
  r.max_supported = 1.5;
  r.solve_ms = 12;
  CHECK(to_csv(r) == "p0,3,10,23,4,0.5,100.25,-2,0.02,1.5,3,12");

  const std::string path = temp_path("results.csv");
  std::filesystem::remove(path);
  save_results(path, {r}, true);
  save_results(path, {r}, true);
  const std::string header = std::string(kResultsHeader) + "\n";
  CHECK(slurp(path) == header + to_csv(r) + "\n" + to_csv(r) + "\n");
  save_results(path, {r});
  CHECK(slurp(path) == header + to_csv(r) + "\n");
  std::filesystem::remove(path);
}

}  // TEST_SUITE
