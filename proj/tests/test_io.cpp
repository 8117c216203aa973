#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freemoment/free_gibbs_1d.hpp"
#include "freemoment/io.hpp"
#include "freemoment/random_series.hpp"
#include "freemoment/sd_moments.hpp"

using namespace freemoment;
using json = nlohmann::json;

namespace {

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-15 * std::max(1.0, std::abs(a[i]))) << i;
}

GridMeasure round_trip(const GridMeasure& m) { return io::measure_from_json(json::parse(io::measure_to_json(m).dump())); }

void expect_same_measure(const GridMeasure& a, const GridMeasure& b) {
  const auto sa = a.samples(), sb = b.samples();
  expect_close(sa.nodes, sb.nodes);
  expect_close(sa.density, sb.density);
  expect_close(sa.cdf, sb.cdf);
  expect_close(a.quantiles(), b.quantiles());
  ASSERT_EQ(a.atoms().size(), b.atoms().size());
  for (std::size_t i = 0; i < a.atoms().size(); ++i) {
    EXPECT_EQ(a.atoms()[i].first, b.atoms()[i].first);
    EXPECT_EQ(a.atoms()[i].second, b.atoms()[i].second);
  }
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(moment(a, k), moment(b, k), 1e-14) << k;
}

}  // namespace

TEST(MeasureJson, RoundTripDensity) {
  const auto m = free_gibbs_measure(EvenPotential({0.0, 0.25})).measure;
  expect_same_measure(m, round_trip(m));
}

TEST(MeasureJson, RoundTripAtomsAndParticles) {
  const auto atoms = GridMeasure::from_atoms({{-1.0, 0.25}, {0.5, 0.75}});
  expect_same_measure(atoms, round_trip(atoms));
  const auto particles = GridMeasure::from_particles({-1.0, -0.2, 0.1, 0.7, 2.0});
  expect_same_measure(particles, round_trip(particles));
}

TEST(MeasureJson, Layout) {
  const auto j = io::measure_to_json(GridMeasure::uniform(0.0, 2.0));
  EXPECT_EQ(j["support"], json({0.0, 2.0}));
  EXPECT_EQ(j["nodes"], json({0.0, 2.0}));
  EXPECT_EQ(j["density"], json({0.5, 0.5}));
  EXPECT_TRUE(j["atoms"].empty());
  EXPECT_EQ(j["quantiles"].size(), GridMeasure::kQuantileGrid);
}

TEST(MeasureJson, MinimalInputs) {
  const auto m = io::measure_from_json(json::parse(R"({"nodes":[0,1],"density":[1,1]})"));
  EXPECT_NEAR(moment(m, 1), 0.5, 1e-15);
  const auto a = io::measure_from_json(json::parse(R"({"atoms":[[0,0.5],[2,0.5]]})"));
  EXPECT_NEAR(moment(a, 2), 2.0, 1e-15);
  EXPECT_THROW(io::measure_from_json(json::parse("{}")), Error);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"atoms":[[0]]})")), Error);
}

TEST(MeasureJson, DensityCsv) {
  const auto csv = io::density_csv(GridMeasure::uniform(0.0, 2.0));
  EXPECT_EQ(csv, "nodes,density\n0,0.5\n2,0.5\n");
}

TEST(SeriesJson, OneBasedWords) {
  NCSeries f(2, 4);
  f.add_term(Word{0, 1}, 0.5);
  f.add_term(Word{}, -1.0);
  const auto j = io::series_to_json(f);
  EXPECT_EQ(j["n_vars"], 2);
  EXPECT_EQ(j["max_degree"], 4);
  EXPECT_EQ(j["terms"][1]["word"], json({1, 2}));
  EXPECT_EQ(j["terms"][1]["coeff"], 0.5);
}

TEST(SeriesJson, RoundTripRandom) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    const auto f = randseries::random_series(rng, n, 9, 15);
    const auto g = io::series_from_json(json::parse(io::series_to_json(f).dump()));
    EXPECT_EQ(g.n_vars(), f.n_vars());
    EXPECT_EQ(g.max_degree(), f.max_degree());
    EXPECT_EQ(g.terms(), f.terms());
  }
}

TEST(SeriesJson, RejectsBadInput) {
  EXPECT_THROW(io::series_from_json(json::parse(R"({"n_vars":1,"max_degree":4,"terms":[{"word":[2],"coeff":1}]})")),
               Error);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"n_vars":1,"max_degree":2,"terms":[{"word":[1,1,1],"coeff":1}]})")),
               Error);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"n_vars":1,"terms":[]})")), Error);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"n_vars":1,"max_degree":4,"terms":[{"word":[1]}]})")), Error);
}

TEST(TensorJson, RoundTrip) {
  TensorSeries t(2, 6);
  t.add_term(Word{0, 1}, Word{1}, 2.0);
  t.add_term(Word{}, Word{0, 0}, -0.25);
  const auto j = io::tensor_to_json(t);
  EXPECT_EQ(j["terms"][0]["left"], json::array());
  const auto u = io::tensor_from_json(json::parse(j.dump()));
  EXPECT_EQ(u.terms(), t.terms());
}

TEST(TraceJson, CanonicalWordsAndRoundTrip) {
  const auto tau = solve_sd(NCSeries(2, 4), 6);
  const auto j = io::trace_to_json(tau);
  EXPECT_EQ(j["values"].size(), tau.class_count());
  EXPECT_EQ(j["cutoff"], 3.0);
  const auto back = io::trace_from_json(json::parse(j.dump()));
  ASSERT_EQ(back.class_count(), tau.class_count());
  for (std::size_t id = 0; id < tau.class_count(); ++id) EXPECT_EQ(back.value(id), tau.value(id));
  auto bad = j;
  bad["values"].push_back({{"word", {2, 1}}, {"value", 0.0}});
  EXPECT_THROW(io::trace_from_json(bad), Error);
}
