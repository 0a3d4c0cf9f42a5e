#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fpp/fpp.hpp"
#include "oracles.hpp"

using namespace fpp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fpp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double area(const LatLonGrid& g, std::size_t i) {
  const double r = std::numbers::pi / 180.0;
  return (std::sin(g.lat_edge(i + 1) * r) - std::sin(g.lat_edge(i) * r)) * g.dlon;
}

PrecipGrid random_fine(Rng& rng, const LatLonGrid& g, double keep = 1.0) {
  auto mask = oracle::random_mask(rng, g.nlat, g.nlon, keep);
  std::vector<double> v(g.cells(), kMissing);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (mask->at(k)) v[k] = oracle::random_precip(rng);
  }
  return PrecipGrid{Date(2001, 7, 1), g, mask, std::move(v)};
}

}  // namespace

TEST(DateParse, IsoRoundTripAndErrors) {
  EXPECT_EQ(Date::parse("2000-02-29").iso(), "2000-02-29");
  EXPECT_EQ(Date::parse("2001-03-01") - Date::parse("2001-02-28"), 1);
  EXPECT_THROW(Date::parse("2001-02-29"), Error);
  EXPECT_THROW(Date::parse("2001/02/01"), Error);
  EXPECT_THROW(Date::parse("2001-02-01x"), Error);
}

TEST(Fppg, PrecipGridRoundTrip) {
  Rng rng(1);
  const auto dir = temp_dir("fppg");
  const LatLonGrid g{24.0, -126.0, 0.5, 0.5, 6, 9};
  const auto src = random_fine(rng, g, 0.7);
  write_grid(dir / "a.fppg", src);
  const auto back = read_grid(dir / "a.fppg");
  EXPECT_EQ(back.values, src.values);
  EXPECT_EQ(*back.mask, *src.mask);
  EXPECT_EQ(back.date, src.date);
  EXPECT_EQ(back.grid, g);
  write_grid(dir / "b.fppg", src, DType::F32);
  const auto f = read_grid(dir / "b.fppg");
  for (std::size_t k = 0; k < f.values.size(); ++k) EXPECT_EQ(f.values[k], static_cast<double>(static_cast<float>(src.values[k])));
  EXPECT_EQ(read_fppg(dir / "a.fppg").footer.at("accumulation_end"), "2001-07-01T12:00Z");
}

TEST(Fppg, SeriesMeteoMaskAndStatsRoundTrip) {
  Rng rng(2);
  const auto dir = temp_dir("series");
  auto mask = oracle::random_mask(rng, 5, 7);
  const auto s = oracle::random_series(rng, mask, Date(2003, 1, 30), 4);
  write_precip_series(dir / "s.fppg", s);
  const auto back = read_precip_series(dir / "s.fppg");
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t d = 0; d < s.size(); ++d) {
    EXPECT_EQ(back[d].values, s[d].values);
    EXPECT_EQ(back[d].date, s[d].date);
  }
  write_mask(dir / "m.fppg", *mask, s[0].grid);
  EXPECT_EQ(read_mask(dir / "m.fppg"), *mask);

  MeteoSeries met;
  for (int d = 0; d < 3; ++d) {
    met.push_back({Date(2003, 1, 1) + d, {Channel::T, Channel::V}, oracle::random_tensor(rng, Shape{2, 3, 5, 7})});
  }
  write_meteo_series(dir / "met.fppg", met, s[0].grid);
  LatLonGrid g;
  const auto mb = read_meteo_series(dir / "met.fppg", &g);
  EXPECT_EQ(g, s[0].grid);
  for (int d = 0; d < 3; ++d) {
    EXPECT_EQ(mb[d].data, met[d].data);
    EXPECT_EQ(mb[d].channels, met[d].channels);
  }
  const auto st = compute_norm_stats(met);
  write_norm_stats(dir / "n.fppg", st);
  EXPECT_EQ(read_norm_stats(dir / "n.fppg"), st);
}

TEST(Fppg, CorruptFilesAreFormatErrors) {
  FppgArray a{DType::F64, Shape{2, 3}, {1, 2, 3, 4, 5, 6}, {{"kind", "x"}}};
  const auto good = encode_fppg(a);
  EXPECT_EQ(decode_fppg(good).values, a.values);
  auto kind = [](const std::string& b) {
    try {
      decode_fppg(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::State;
  };
  std::string bad = good;
  bad[1] = 'Q';
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  bad = good;
  bad[8] = 7;
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  EXPECT_EQ(kind(good.substr(0, 30)), ErrorKind::Format);
  // Header claims more rows than the payload holds.
  bad = good;
  bad[10] = 9;
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  EXPECT_EQ(kind(good.substr(0, good.size() - 2)), ErrorKind::Format);
  EXPECT_THROW(encode_fppg({DType::F64, Shape{2, 2}, {1, 2, 3}, {}}), ShapeError);
  const auto dir = temp_dir("kind");
  write_fppg(dir / "x.fppg", a);
  EXPECT_THROW(read_grid(dir / "x.fppg"), Error);
  EXPECT_THROW(read_fppg(dir / "missing.fppg"), Error);
}

TEST(Regrid, BlockMeansAreAreaWeighted) {
  Rng rng(3);
  const LatLonGrid fine{30.0, -100.0, 0.25, 0.25, 8, 8};
  const LatLonGrid coarse{30.0, -100.0, 0.5, 0.5, 4, 4};
  const auto src = random_fine(rng, fine);
  const auto dst = regrid(src, coarse);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      double ws = 0.0, vs = 0.0;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
          const double w = area(fine, 2 * i + a);
          ws += w;
          vs += w * src.values[(2 * i + a) * 8 + 2 * j + b];
        }
      }
      EXPECT_NEAR(dst.values[i * 4 + j], vs / ws, 1e-12);
    }
  }
}

TEST(Regrid, ConservesAreaIntegral) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const LatLonGrid fine{24.0, -126.0, 0.25, 0.25, 96, 240};
    const LatLonGrid coarse{24.0, -126.0, 0.6, 0.75, 40, 80};
    const auto src = random_fine(rng, fine);
    const auto r = regrid_detailed(src, coarse);
    double in = 0.0, out = 0.0;
    for (std::size_t i = 0; i < fine.nlat; ++i)
      for (std::size_t j = 0; j < fine.nlon; ++j) in += src.values[i * fine.nlon + j] * area(fine, i);
    for (std::size_t i = 0; i < coarse.nlat; ++i)
      for (std::size_t j = 0; j < coarse.nlon; ++j) {
        EXPECT_NEAR(r.covered_area[i * coarse.nlon + j], area(coarse, i), 1e-12);
        out += r.grid.values[i * coarse.nlon + j] * area(coarse, i);
      }
    EXPECT_NEAR(out / in, 1.0, 1e-10);
  }
}

TEST(Regrid, ConstantFieldStaysConstant) {
  Rng rng(5);
  const LatLonGrid fine{10.0, -130.0, 0.25, 0.25, 70, 90};
  const LatLonGrid dst = LatLonGrid::era_domain();
  auto src = random_fine(rng, fine, 0.6);
  for (std::size_t k = 0; k < src.values.size(); ++k) {
    if (src.mask->at(k)) src.values[k] = 7.3;
  }
  const auto out = regrid(src, dst);
  std::size_t valid = 0;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    if (!out.mask->at(k)) {
      EXPECT_EQ(out.values[k], kMissing);
      continue;
    }
    ++valid;
    EXPECT_NEAR(out.values[k], 7.3, 7.3 * 1e-15);
  }
  EXPECT_GT(valid, 100u);
}

TEST(Regrid, MaskedSourceCellsAreIgnored) {
  const LatLonGrid fine{0.0, 0.0, 1.0, 1.0, 1, 2};
  const LatLonGrid coarse{0.0, 0.0, 1.0, 2.0, 1, 1};
  auto mask = std::make_shared<const ConusMask>(1, 2, std::vector<std::uint8_t>{1, 0});
  const PrecipGrid src{Date(2000, 1, 1), fine, mask, {4.0, kMissing}};
  const auto r = regrid_detailed(src, coarse);
  EXPECT_EQ(r.grid.values[0], 4.0);
  EXPECT_DOUBLE_EQ(r.covered_area[0], area(fine, 0));
  EXPECT_THROW(regrid(src, LatLonGrid{50.0, 50.0, 1.0, 1.0, 2, 2}), Error);
}

TEST(BuildMask, CoverageThreshold) {
  const LatLonGrid fine{0.0, 0.0, 0.25, 0.25, 4, 8};
  const LatLonGrid coarse{0.0, 0.0, 1.0, 1.0, 1, 2};
  // Left coarse cell fully covered, right cell covered in its western quarter.
  std::vector<std::uint8_t> cells(32, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) cells[i * 8 + j] = 1;
  }
  const ConusMask fp(4, 8, cells);
  const auto m = build_mask(fp, fine, coarse, 0.5);
  EXPECT_TRUE(m.at(0));
  EXPECT_FALSE(m.at(1));
  EXPECT_TRUE(build_mask(fp, fine, coarse, 0.25).at(1));
  EXPECT_THROW(build_mask(ConusMask(4, 8, std::vector<std::uint8_t>(32, 0)), fine, coarse), Error);
}

TEST(Split, ExactYearsFor1980To2018) {
  const auto s = split_years(year_range(1980, 2018));
  EXPECT_EQ(s.validation_years, (std::vector<int>{1997, 2002, 2007, 2012, 2017}));
  EXPECT_EQ(s.test_years, (std::vector<int>{1998, 2003, 2008, 2013, 2018}));
  EXPECT_EQ(s.training_years.size(), 29u);
  EXPECT_EQ(s.partition_of(Date(1997, 6, 1)), Partition::Validation);
  EXPECT_EQ(s.partition_of(Date(2018, 1, 1)), Partition::Test);
  EXPECT_EQ(s.partition_of(Date(1980, 1, 1)), Partition::Train);
  EXPECT_EQ(s.partition_of(Date(2019, 1, 1)), std::nullopt);
}

TEST(Split, RangesAndValidation) {
  const auto j = nlohmann::json::parse(
      R"({"training_ranges": [["2000-01-01", "2000-12-31"]], "validation_ranges": [["2001-01-01", "2001-01-31"]],
          "test_ranges": [["2001-02-01", "2001-02-28"]]})");
  const auto s = j.get<SplitSpec>();
  EXPECT_EQ(s.partition_of(Date(2001, 1, 31)), Partition::Validation);
  EXPECT_EQ(s.partition_of(Date(2001, 3, 1)), std::nullopt);
  EXPECT_EQ(nlohmann::json(s).get<SplitSpec>().id(), s.id());
  const auto bad = nlohmann::json::parse(
      R"({"training_ranges": [["2000-01-01", "2000-12-31"]], "test_ranges": [["2000-12-31", "2001-02-28"]]})");
  EXPECT_THROW(bad.get<SplitSpec>(), Error);
  EXPECT_THROW((nlohmann::json{{"training_years", {2000}}, {"test_years", {2000}}}.get<SplitSpec>()), Error);
}

TEST(PairSamples, IndexArithmeticAtLeadsOneToFive) {
  const Date start(2000, 1, 1);
  const std::size_t n = 40;
  MeteoSeries met;
  for (std::size_t k = 0; k < n; ++k) met.push_back({start + static_cast<long>(k), {Channel::T}, Tensor<double>(Shape{1, 1, 1, 1})});
  auto mask = std::make_shared<const ConusMask>(ConusMask::full(1, 1));
  PrecipSeries pr;
  for (std::size_t k = 1; k <= n; ++k) pr.push_back({start + static_cast<long>(k), LatLonGrid{}, mask, {0.0}});
  for (int lead = 1; lead <= 5; ++lead) {
    const auto r = pair_samples(met, pr, lead);
    ASSERT_EQ(r.pairs.size(), n - static_cast<std::size_t>(lead) + 1) << "lead " << lead;
    ASSERT_EQ(r.skipped.size(), static_cast<std::size_t>(lead) - 1);
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      const auto& p = r.pairs[k];
      EXPECT_EQ(p.meteo_index, k);
      EXPECT_EQ(p.precip_index, k + static_cast<std::size_t>(lead) - 1);
      EXPECT_EQ(p.target_date - p.input_date, lead);
      EXPECT_EQ(met[p.meteo_index].date, p.input_date);
      EXPECT_EQ(pr[p.precip_index].date, p.target_date);
    }
    for (std::size_t k = 0; k < r.skipped.size(); ++k) EXPECT_EQ(r.skipped[k], met[n - r.skipped.size() + k].date);
  }
  // A missing target day drops exactly the one input frame that needs it.
  auto gap = pr;
  gap.erase(gap.begin() + 9);  // target start + 10
  for (int lead = 1; lead <= 5; ++lead) {
    const auto r = pair_samples(met, gap, lead);
    EXPECT_EQ(r.pairs.size(), n - static_cast<std::size_t>(lead));
    EXPECT_NE(std::find(r.skipped.begin(), r.skipped.end(), start + (10 - lead)), r.skipped.end());
  }
  EXPECT_THROW(pair_samples(met, pr, 0), Error);
}

TEST(Normalize, MomentsMatchTwoPassOracle) {
  Rng rng(6);
  std::vector<MeteoCube> cubes;
  for (int d = 0; d < 5; ++d) {
    auto t = oracle::random_tensor(rng, Shape{2, 3, 4, 5}, 250.0, 300.0);
    for (std::size_t k = 60; k < 80; ++k) t[k] = 42.0;  // channel 1, level 0 is constant
    cubes.push_back({Date(2000, 1, 1) + d, {Channel::T, Channel::R}, std::move(t)});
  }
  const auto s = compute_norm_stats(cubes);
  for (std::size_t cl = 0; cl < 6; ++cl) {
    std::vector<double> v;
    for (const auto& c : cubes) v.insert(v.end(), c.data.data().begin() + cl * 20, c.data.data().begin() + cl * 20 + 20);
    double mu = 0.0;
    for (const double x : v) mu += x;
    mu /= 100.0;
    double var = 0.0;
    for (const double x : v) var += (x - mu) * (x - mu);
    EXPECT_NEAR(s.mean[cl], mu, 1e-10);
    EXPECT_NEAR(s.stddev[cl], std::max(std::sqrt(var / 100.0), NormalizationStats::kStdFloor), 1e-10);
  }
  EXPECT_EQ(s.std_at(1, 0), NormalizationStats::kStdFloor);
  // Normalized training data has zero mean and unit variance per (channel, level).
  std::vector<MeteoCube> z;
  for (const auto& c : cubes) z.push_back(normalize(c, s));
  const auto zs = compute_norm_stats(z);
  for (std::size_t cl = 0; cl < 6; ++cl) {
    EXPECT_NEAR(zs.mean[cl], 0.0, 1e-9);
    if (cl != 3) {
      EXPECT_NEAR(zs.stddev[cl], 1.0, 1e-9);
    }
  }
  // Selecting a channel subset normalizes with the matching rows.
  const auto sub = normalize(cubes[0].select({Channel::R}), s);
  for (std::size_t k = 0; k < 60; ++k) EXPECT_EQ(sub.data[k], z[0].data[60 + k]);
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig c;
  c.grid = {24.0, -126.0, 3.0, 5.0, 8, 12};
  c.ndays = 12;
  const auto a = synth_generate(c), b = synth_generate(c);
  for (std::size_t d = 0; d < c.ndays; ++d) {
    EXPECT_EQ(a.meteo[d].data, b.meteo[d].data);
    EXPECT_EQ(a.observed[d].values, b.observed[d].values);
    EXPECT_EQ(a.reference[d].values, b.reference[d].values);
  }
  c.seed = 2;
  EXPECT_NE(synth_generate(c).observed[5].values, a.observed[5].values);
}

TEST(Synth, ObservationsFollowTheStatedFunctional) {
  SynthConfig c;
  c.ndays = 20;
  const auto s = synth_generate(c);
  const std::size_t H = c.grid.nlat, W = c.grid.nlon, L = c.levels, P = H * W, mid = L / 2;
  for (std::size_t d = 0; d < c.ndays; ++d) {
    const auto& cube = s.meteo[d];
    EXPECT_EQ(s.observed[d].date, cube.date + 1);
    auto at = [&](Channel ch, std::size_t l, long i, long j) {
      i = std::clamp<long>(i, 0, static_cast<long>(H) - 1);
      j = std::clamp<long>(j, 0, static_cast<long>(W) - 1);
      return cube.data[(static_cast<std::size_t>(ch) * L + l) * P + static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)];
    };
    auto deriv = [&](Channel ch, long i, long j, bool lon) {
      const long n = static_cast<long>(lon ? W : H), k = lon ? j : i;
      const long lo = std::max<long>(k - 1, 0), hi = std::min<long>(k + 1, n - 1);
      const double fa = lon ? at(ch, mid, i, lo) : at(ch, mid, lo, j), fb = lon ? at(ch, mid, i, hi) : at(ch, mid, hi, j);
      return (fb - fa) / static_cast<double>(hi - lo);
    };
    std::vector<double> f(P);
    for (long i = 0; i < static_cast<long>(H); ++i) {
      for (long j = 0; j < static_cast<long>(W); ++j) {
        double col = 0.0;
        for (std::size_t l = 0; l < L; ++l) col += at(Channel::R, l, i, j);
        const double div = deriv(Channel::U, i, j, true) + deriv(Channel::V, i, j, false);
        f[static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)] =
            std::max(c.a * (col / static_cast<double>(L) - c.r0) - c.b * div, 0.0);
      }
    }
    for (long i = 0; i < static_cast<long>(H); ++i) {
      for (long j = 0; j < static_cast<long>(W); ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j);
        if (!s.mask->at(k)) {
          EXPECT_EQ(s.observed[d].values[k], kMissing);
          continue;
        }
        double num = 0.0, den = 0.0;
        for (long a = -1; a <= 1; ++a) {
          for (long b = -1; b <= 1; ++b) {
            if (i + a < 0 || j + b < 0 || i + a >= static_cast<long>(H) || j + b >= static_cast<long>(W)) continue;
            const double w = (a == 0 ? 2.0 : 1.0) * (b == 0 ? 2.0 : 1.0);
            num += w * f[static_cast<std::size_t>(i + a) * W + static_cast<std::size_t>(j + b)];
            den += w;
          }
        }
        const double clean = num / den;
        EXPECT_NEAR(s.clean[d].values[k], clean, 1e-9);
        const double ob = s.observed[d].values[k];
        EXPECT_GE(ob, 0.0);
        EXPECT_LE(std::abs(ob - std::max(clean, 0.0)), c.noise + 1e-12);
        EXPECT_GE(s.reference[d].values[k], 0.0);
      }
    }
  }
}
