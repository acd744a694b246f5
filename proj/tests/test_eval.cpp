#include <gtest/gtest.h>

#include <cmath>

#include "edfa/eval.hpp"

using namespace edfa;

namespace {

// Copies the input spectrum through a +/- relu pair and adds offset.
MlpModel copy_model(double offset) {
  const std::size_t n = 83;
  MlpModel m({85, 2 * n, 83});
  for (std::size_t k = 0; k < n; ++k) {
    m.mutable_weight(0)(2 * k, k) = 1.0;
    m.mutable_weight(0)(2 * k + 1, k) = -1.0;
    m.mutable_weight(1)(k, 2 * k) = 1.0;
    m.mutable_weight(1)(k, 2 * k + 1) = -1.0;
    m.mutable_bias(1)[k] = offset;
  }
  return m;
}

std::vector<Sample> copy_samples(std::size_t n) {
  SeededRng rng(3);
  std::vector<Sample> out;
  const auto pg = default_power_grid();
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.device_id = "A1";
    const auto& p = pg[i % pg.size()];
    s.p_in_dbm = p.p_in_dbm;
    s.p_out_dbm = p.p_out_dbm;
    s.gain_db = p.gain_db();
    s.psd_in_norm_db = normalize(shape_profile(rng, WalkConfig{}, FrequencyGrid{}, 0.0)).norm_db;
    s.psd_out_norm_db = s.psd_in_norm_db;
    s.split = Split::test;
    out.push_back(s);
  }
  return out;
}

Dataset tiny_dataset(double sigma_dev, std::size_t per_pair = 12) {
  MakeParams m;
  m.sigma_dev = sigma_dev;
  std::vector<AmplifierDevice> devs;
  for (const char* id : {"A1", "A2", "A3"}) {
    devs.push_back(make_device(FrequencyGrid{}, m, id, derive_seed(5, id)));
  }
  WalkConfig w;
  w.n_profiles_per_pair = per_pair;
  return build_dataset(devs, FrequencyGrid{}, w, default_power_grid(), 17);
}

}  // namespace

TEST(GainBin, NearestWithHalfUp) {
  EXPECT_EQ(gain_bin(12.3), 12);
  EXPECT_EQ(gain_bin(12.5), 13);
  EXPECT_EQ(gain_bin(12.49), 12);
  EXPECT_EQ(gain_bin(-0.5), 0);
  EXPECT_THROW(gain_bin(NAN), std::invalid_argument);
}

TEST(GainBin, DefaultGridOccupiesTenToTwentyTwo) {
  for (const auto& p : default_power_grid()) {
    EXPECT_GE(gain_bin(p.gain_db()), 10);
    EXPECT_LE(gain_bin(p.gain_db()), 22);
  }
}

TEST(Evaluate, PerfectModelScoresZero) {
  const auto samples = copy_samples(30);
  const auto r = evaluate(copy_model(0.0), samples);
  EXPECT_EQ(r.count(), 30u);
  for (double v : r.per_sample_mse) EXPECT_NEAR(v, 0.0, 1e-24);
  for (double v : r.per_channel_mse) EXPECT_NEAR(v, 0.0, 1e-24);
}

TEST(Evaluate, UniformOffsetScoresSquare) {
  const auto samples = copy_samples(30);
  const auto r = evaluate(copy_model(0.2), samples, Scenario::inter, "A2", "A1");
  for (double v : r.per_sample_mse) EXPECT_NEAR(v, 0.04, 1e-12);
  EXPECT_NEAR(r.mean_mse, 0.04, 1e-12);
  EXPECT_EQ(r.train_device, "A2");
  EXPECT_EQ(r.scenario, Scenario::inter);
}

TEST(Evaluate, AggregatesAgreeWithBruteForce) {
  const auto ds = tiny_dataset(0.1);
  const MlpModel m = he_init(kGainModelDims, 3);
  const auto test = ds.select(Split::test, "A2");
  const auto r = evaluate(m, test);

  double total = 0;
  std::map<int, std::pair<double, std::size_t>> bins;
  std::vector<double> chan(83, 0.0);
  for (const auto& s : test) {
    const auto y = forward(m, encode_input(s));
    double acc = 0;
    for (std::size_t k = 0; k < 83; ++k) {
      const double e = y[k] - s.psd_out_norm_db[k];
      acc += e * e;
      chan[k] += e * e;
    }
    total += acc / 83;
    auto& b = bins[static_cast<int>(std::floor(s.gain_db + 0.5))];
    b.first += acc / 83;
    ++b.second;
  }
  EXPECT_NEAR(r.mean_mse, total / test.size(), 1e-12 * std::max(1.0, r.mean_mse));

  std::size_t count = 0;
  double weighted = 0;
  for (const auto& [bin, st] : r.per_gain_bin) {
    ASSERT_TRUE(bins.count(bin));
    EXPECT_EQ(st.count, bins[bin].second);
    EXPECT_NEAR(st.mean_mse, bins[bin].first / bins[bin].second, 1e-9);
    count += st.count;
    weighted += st.mean_mse * st.count;
  }
  EXPECT_EQ(count, test.size());
  EXPECT_NEAR(weighted / count, r.mean_mse, 1e-12 * std::max(1.0, r.mean_mse));

  double chan_mean = 0;
  for (std::size_t k = 0; k < 83; ++k) {
    EXPECT_NEAR(r.per_channel_mse[k], chan[k] / test.size(), 1e-9);
    chan_mean += r.per_channel_mse[k] / 83;
  }
  EXPECT_NEAR(chan_mean, r.mean_mse, 1e-12 * std::max(1.0, r.mean_mse));
}

TEST(Evaluate, GridAndWidthMismatchThrow) {
  const auto ds = tiny_dataset(0.0, 2);
  const MlpModel m(kGainModelDims);
  FrequencyGrid other;
  other.f_stop_thz = 195.0;
  EXPECT_THROW(evaluate(m, other, ds, "A1", Scenario::intra, "A1"), std::invalid_argument);
  EXPECT_NO_THROW(evaluate(m, FrequencyGrid{}, ds, "A1", Scenario::intra, "A1"));
  const MlpModel narrow({85, 4, 40});
  EXPECT_THROW(evaluate(narrow, ds.select(Split::test, "A1")), std::invalid_argument);
}

TEST(PerFrequency, PerfectModelAndPooledMean) {
  const auto samples = copy_samples(12);
  const std::vector<EvalReport> perfect = {evaluate(copy_model(0.0), samples)};
  for (double v : per_frequency_mse(perfect)) EXPECT_NEAR(v, 0.0, 1e-24);

  const auto ds = tiny_dataset(0.1);
  const MlpModel m = he_init(kGainModelDims, 9);
  std::vector<EvalReport> reps;
  double total = 0;
  std::size_t n = 0;
  for (const char* id : {"A1", "A2", "A3"}) {
    reps.push_back(evaluate(m, ds.select(Split::test, id), Scenario::inter, "X", id));
    for (double v : reps.back().per_sample_mse) total += v;
    n += reps.back().count();
  }
  const auto pf = per_frequency_mse(reps);
  double mean = 0;
  for (double v : pf) mean += v / pf.size();
  EXPECT_NEAR(mean, total / n, 1e-12 * std::max(1.0, mean));
  EXPECT_THROW(per_frequency_mse({}), std::invalid_argument);
}

TEST(Scenarios, CountsAndMissingModels) {
  const auto ds = tiny_dataset(0.1);
  std::map<std::string, MlpModel> models;
  for (const char* id : {"A1", "A2", "A3", "joint"}) models.emplace(id, he_init(kGainModelDims, 1));
  const Scenario all[] = {Scenario::intra, Scenario::inter, Scenario::joint};
  const auto r = evaluate_scenarios(ds, models, all);
  EXPECT_EQ(r.intra.size(), 3u);
  EXPECT_EQ(r.inter.size(), 6u);
  EXPECT_EQ(r.joint.size(), 3u);
  EXPECT_EQ(r.all().size(), 12u);
  for (const auto& rep : r.inter) EXPECT_NE(rep.train_device, rep.test_device);

  models.erase("A2");
  models.erase("joint");
  try {
    evaluate_scenarios(ds, models, all);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("A2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("joint"), std::string::npos);
  }
  const Scenario only_joint[] = {Scenario::joint};
  models.emplace("joint", he_init(kGainModelDims, 1));
  EXPECT_EQ(evaluate_scenarios(ds, models, only_joint).joint.size(), 3u);
}

TEST(Scenarios, IdenticalDevicesGiveMatchingIntraAndInter) {
  const auto ds = tiny_dataset(0.0, 20);
  TrainConfig c;
  c.epochs = 40;
  c.seed = 3;
  const auto r = run_scenarios(ds, c);
  ASSERT_EQ(r.intra.size() + r.inter.size() + r.joint.size(), 12u);
  EXPECT_LT(std::abs(mean_of_reports(r.inter) - mean_of_reports(r.intra)), 0.005);
  EXPECT_EQ(r.loss_traces.size(), 4u);
  EXPECT_EQ(r.models.size(), 4u);
}

TEST(Scenarios, ModelSeedsAreDerivedPerModel) {
  TrainConfig base;
  base.seed = 5;
  EXPECT_NE(model_train_config(base, "A1").seed, model_train_config(base, "A2").seed);
  EXPECT_EQ(model_train_config(base, "A1").seed, model_train_config(base, "A1").seed);
}

TEST(OracleGap, MonotoneInSigmaAndZeroAtZero) {
  const FrequencyGrid g;
  const WalkConfig w;
  const auto pg = default_power_grid();
  double prev = -1.0;
  for (double s : {0.0, 0.02, 0.05, 0.1, 0.2}) {
    const double gap = expected_device_gap(g, MakeParams{}, s, w, pg, 60, 7);
    if (s == 0.0) EXPECT_EQ(gap, 0.0);
    EXPECT_GE(gap, prev);
    prev = gap;
  }
}

TEST(Calibration, TargetZeroAndDefaultTarget) {
  const FrequencyGrid g;
  const WalkConfig w;
  const auto pg = default_power_grid();
  EXPECT_EQ(calibrate_device_sigma(g, MakeParams{}, w, pg, 0.0, 50, 1).sigma_dev, 0.0);
  const auto r = calibrate_device_sigma(g, MakeParams{}, w, pg, 0.04, 200, 11);
  EXPECT_GE(r.achieved_gap, 0.036);
  EXPECT_LE(r.achieved_gap, 0.044);
  EXPECT_NEAR(expected_device_gap(g, MakeParams{}, r.sigma_dev, w, pg, 200, 11), r.achieved_gap, 0.0);
}

TEST(Calibration, UnreachableTargetRaises) {
  const FrequencyGrid g;
  const WalkConfig w;
  const auto pg = default_power_grid();
  EXPECT_THROW(calibrate_device_sigma(g, MakeParams{}, w, pg, 1e30, 5, 1), CalibrationError);
  EXPECT_THROW(calibrate_device_sigma(g, MakeParams{}, w, pg, -1.0, 5, 1), std::invalid_argument);
}

TEST(Calibration, OracleGapSplitsByKnee) {
  MakeParams m;
  m.sigma_dev = 0.1;
  const FrequencyGrid g;
  const auto a = make_device(g, m, "A1", 1);
  const auto b = make_device(g, m, "A2", 2);
  SeededRng rng(4);
  const auto pts = random_operating_points(rng, g, WalkConfig{}, default_power_grid(), 10);
  const auto split = oracle_gap_split(a, b, pts, 195.5);
  const double all = oracle_gap(a, b, pts);
  std::size_t hi = 0;
  for (double f : g.frequencies()) hi += f > 195.5;
  const double n = static_cast<double>(g.n_channels);
  EXPECT_NEAR(all, (split.low * (n - hi) + split.high * hi) / n, 1e-12);
}
