#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "twinpose/losses.hpp"
#include "twinpose/metrics.hpp"

using namespace twinpose;

namespace {

PoseErrorRecord record(const std::string& cls, double add, bool accepted, double iota = 1.0) {
  PoseErrorRecord r;
  r.class_name = cls;
  r.add = add;
  r.add_accepted = accepted;
  r.iota = iota;
  return r;
}

RigidPose compose(const RigidPose& outer, const RigidPose& inner) {
  const Mat3 r = outer.rotation_matrix() * inner.rotation_matrix();
  return {outer.rotation_matrix() * inner.translation + outer.translation, matrix_to_euler(r)};
}

}  // namespace

TEST(Labeling, HandValues) {
  const RigidPose gt{{1, 2, 3}, {0.2, 0.4, 0.6}};
  const RigidPose label{{1 + std::log(2.0), 2, 3 - std::log(2.0)}, {0.2 + kPi / 3, 0.4, 0.6 - kPi / 3}};
  const LabelingScores s = labeling_scores(label, gt);
  EXPECT_NEAR(s.iota_x, 0.5, 1e-15);
  EXPECT_EQ(s.iota_y, 1.0);
  EXPECT_NEAR(s.iota_z, 0.5, 1e-15);
  EXPECT_NEAR(s.alpha_rx, 0.5, 1e-15);
  EXPECT_EQ(s.alpha_ry, 1.0);
  EXPECT_NEAR(s.alpha_rz, 0.5, 1e-15);
}

TEST(Labeling, BoundedAndPerfectAtTruth) {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const RigidPose g{oracle::random_vec(rng, -5, 5), {u(rng), u(rng), u(rng)}};
    const RigidPose l{oracle::random_vec(rng, -5, 5), {u(rng), u(rng), u(rng)}};
    const LabelingScores s = labeling_scores(l, g);
    for (double v : {s.iota_x, s.iota_y, s.iota_z}) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (double v : {s.alpha_rx, s.alpha_ry, s.alpha_rz}) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    const LabelingScores same = labeling_scores(g, g);
    EXPECT_EQ(same.iota_x + same.iota_y + same.iota_z + same.alpha_rx + same.alpha_ry + same.alpha_rz, 6.0);
  }
}

TEST(Iota, HandValues) {
  EXPECT_EQ(gaussian_translation({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_NEAR(gaussian_translation({1, 0, 0}, {0, 0, 0}), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(gaussian_translation({3, 4, 0}, {0, 0, 0}), std::exp(-5.0), 1e-18);
}

TEST(Iota, MonotoneInDistance) {
  double last = 1.0;
  for (double d = 0.1; d < 10; d += 0.1) {
    const double v = gaussian_translation({0, d, 0}, {0, 0, 0});
    EXPECT_LT(v, last);
    EXPECT_GT(v, 0.0);
    last = v;
  }
}

TEST(Eta, HandValuesAndWrap) {
  EXPECT_NEAR(angular_difference(0.1, -0.2), 0.3, 1e-15);
  EXPECT_NEAR(angular_difference(kPi - 0.1, -kPi + 0.1), 0.2, 1e-14);
  EXPECT_NEAR(angular_difference(0.5, 0.5 + 2 * kPi), 0.0, 1e-14);
  const EulerErrors e = euler_abs_errors({0.1, kPi - 0.1, 0.0}, {-0.2, -kPi + 0.1, 0.0});
  EXPECT_NEAR(e.rx, 0.3, 1e-15);
  EXPECT_NEAR(e.ry, 0.2, 1e-14);
  EXPECT_EQ(e.rz, 0.0);
}

TEST(Eta, RangeAndSymmetry) {
  std::mt19937_64 rng(92);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d = angular_difference(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, kPi);
    EXPECT_NEAR(d, angular_difference(b, a), 1e-12);
    // Independent: distance to the nearest multiple of 2*pi.
    const double raw = std::fmod(std::abs(a - b), 2 * kPi);
    EXPECT_NEAR(d, std::min(raw, 2 * kPi - raw), 1e-12);
  }
}

TEST(Add, TranslationOffset) {
  const TriMesh cube = oracle::unit_cube();
  const RigidPose g{{0, 0, 5}, {0.3, 0.2, 0.1}};
  RigidPose p = g;
  p.translation.y() += 0.1;
  EXPECT_NEAR(add_distance(cube.vertices, p, g), 0.1, 1e-15);
  EXPECT_EQ(add_distance(cube.vertices, g, g), 0.0);
  EXPECT_THROW(add_distance(std::vector<Vec3>{}, p, g), std::invalid_argument);
}

TEST(Add, Threshold) {
  const double d = diameter(oracle::unit_cube());
  EXPECT_NEAR(d, std::sqrt(3.0), 1e-15);
  EXPECT_TRUE(add_accept(0.1, d));
  EXPECT_FALSE(add_accept(0.2, d));
  EXPECT_FALSE(add_accept(0.1 * d, d));
}

TEST(Add, MatchesDirectMeanAndRigidInvariance) {
  std::mt19937_64 rng(93);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 57; ++i) pts.push_back(oracle::random_vec(rng, -1, 1));
    const RigidPose p{oracle::random_vec(rng, -3, 3), {u(rng), u(rng), u(rng)}};
    const RigidPose g{oracle::random_vec(rng, -3, 3), {u(rng), u(rng), u(rng)}};
    const Mat3 rp = oracle::euler_columns(p.rotation.rx, p.rotation.ry, p.rotation.rz);
    const Mat3 rg = oracle::euler_columns(g.rotation.rx, g.rotation.ry, g.rotation.rz);
    double sum = 0;
    for (const auto& x : pts) sum += ((rp * x + p.translation) - (rg * x + g.translation)).norm();
    const double add = add_distance(pts, p, g);
    EXPECT_NEAR(add, sum / pts.size(), 1e-12 * (1 + add));
    const RigidPose m{oracle::random_vec(rng, -3, 3), {u(rng), u(rng) / 2, u(rng)}};
    EXPECT_NEAR(add_distance(pts, compose(m, p), compose(m, g)), add, 1e-9);
  }
}

TEST(EvaluatePose, FieldsAgreeWithComponents) {
  const TriMesh car = oracle::unit_cube().scaled({4, 1.6, 1.8});
  const RigidPose g{{2, 1.5, 15}, {0, 0.3, 0}};
  const RigidPose p{{2.3, 1.5, 14.6}, {0, 0.35, 0.05}};
  const PoseErrorRecord r = evaluate_pose("Car", car, p, g);
  EXPECT_EQ(r.class_name, "Car");
  EXPECT_NEAR(r.translation_error, 0.5, 1e-14);
  EXPECT_NEAR(r.iota, std::exp(-0.5), 1e-15);
  EXPECT_EQ(r.eta_rx, 0.0);
  EXPECT_NEAR(r.eta_ry, 0.05, 1e-15);
  EXPECT_NEAR(r.eta_rz, 0.05, 1e-15);
  EXPECT_NEAR(r.add, add_distance(car.vertices, p, g), 1e-15);
  EXPECT_EQ(r.add_accepted, r.add < 0.1 * std::sqrt(21.8));
  EXPECT_NEAR(r.l6d, sixdof_loss(car, p, g), 1e-15);
}

TEST(Aggregate, MicroAverage) {
  const std::vector<PoseErrorRecord> rs{record("B", 0.8, false, 0.2), record("A", 0.2, true), record("A", 0.2, true),
                                        record("A", 0.2, false)};
  const MetricsReport rep = aggregate_report(rs);
  ASSERT_EQ(rep.classes.size(), 2u);
  EXPECT_EQ(rep.classes[0].name, "A");
  EXPECT_EQ(rep.classes[1].name, "B");
  EXPECT_EQ(rep.classes[0].count, 3u);
  EXPECT_NEAR(rep.classes[0].add_accuracy, 200.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.classes[1].add_accuracy, 0.0);
  EXPECT_EQ(rep.mean.name, "Mean");
  EXPECT_EQ(rep.mean.count, 4u);
  // Mean over records (0.35), not over classes (0.5).
  EXPECT_NEAR(rep.mean.add, 0.35, 1e-15);
  EXPECT_NEAR(rep.mean.add_accuracy, 50.0, 1e-12);
  EXPECT_NEAR(rep.mean.iota, 0.8, 1e-15);
  EXPECT_THROW(aggregate_report(std::vector<PoseErrorRecord>{}), std::invalid_argument);
}

TEST(Aggregate, OrderInvariant) {
  std::mt19937_64 rng(94);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<PoseErrorRecord> rs;
  const char* names[] = {"Car", "Pedestrian", "Cyclist"};
  for (int i = 0; i < 40; ++i) rs.push_back(record(names[i % 3], u(rng), u(rng) < 0.5, u(rng)));
  const Json a = report_to_json(aggregate_report(rs));
  std::shuffle(rs.begin(), rs.end(), rng);
  const Json b = report_to_json(aggregate_report(rs));
  EXPECT_EQ(dump_fixed(a, 12), dump_fixed(b, 12));
}

TEST(ReportJson, FixedPrecisionRoundTrip) {
  const std::vector<PoseErrorRecord> rs{record("Car", 0.123456789, true, 0.9), record("Car", 0.3, false, 0.4)};
  const MetricsReport rep = aggregate_report(rs);
  const std::string text = dump_fixed(report_to_json(rep));
  const MetricsReport back = report_from_json(Json::parse(text));
  ASSERT_EQ(back.classes.size(), 1u);
  EXPECT_NEAR(back.mean.add, rep.mean.add, 5e-7);
  EXPECT_NEAR(back.mean.iota, rep.mean.iota, 5e-7);
  EXPECT_EQ(back.mean.count, 2u);
  EXPECT_NE(text.find("\"add\":0.211728"), std::string::npos) << text;
  EXPECT_NE(text.find("\"count\":2"), std::string::npos);
  const std::string table = format_report_table(rep);
  EXPECT_NE(table.find("Car"), std::string::npos);
  EXPECT_NE(table.find("Mean"), std::string::npos);
}

TEST(DumpFixed, Formatting) {
  const Json j = {{"a", -0.0}, {"b", 1}, {"c", {1.5, -2.25e-7}}, {"d", "x"}, {"e", nullptr}, {"f", true}};
  EXPECT_EQ(dump_fixed(j), R"({"a":0.000000,"b":1,"c":[1.500000,0.000000],"d":"x","e":null,"f":true})");
  EXPECT_EQ(dump_fixed(Json(3.14159), 2), "3.14");
  EXPECT_EQ(dump_fixed(Json::array({1.0, 2.0}), 1, 2), "[1.0, 2.0]");
  EXPECT_EQ(dump_fixed(Json::array({1.0, 2.0, 3.0, 4.0, 5.0}), 1, 2), "[\n  1.0,\n  2.0,\n  3.0,\n  4.0,\n  5.0\n]");
}

TEST(Stats, EmptyIsZero) {
  const DatasetStats s = dataset_stats(std::vector<AnnotationSet>{}, ModelRegistry{});
  EXPECT_EQ(s.frames, 0u);
  EXPECT_EQ(s.objects, 0u);
  EXPECT_EQ(s.max_diameter, 0.0);
  EXPECT_EQ(s.max_camera_distance, 0.0);
}

TEST(Stats, FixtureMatchesIndependentComputation) {
  const Dataset ds = load_dataset(TWINPOSE_FIXTURES "/dataset");
  std::vector<AnnotationSet> sets;
  for (const auto& f : ds.frames) sets.push_back(f.annotations);
  const DatasetStats s = dataset_stats(sets, ds.registry);
  const Json expected = Json::parse(oracle::read_file(TWINPOSE_FIXTURES "/expected_stats.json"));
  EXPECT_EQ(s.frames, expected["frames"].get<std::size_t>());
  EXPECT_EQ(s.objects, expected["objects"].get<std::size_t>());
  EXPECT_NEAR(s.max_diameter, expected["max_diameter"].get<double>(), 5e-7);
  EXPECT_NEAR(s.max_camera_distance, expected["max_camera_distance"].get<double>(), 5e-7);
  EXPECT_EQ(dump_fixed(stats_to_json(s), 6, 2) + "\n", oracle::read_file(TWINPOSE_FIXTURES "/expected_stats.json"));

  AnnotationSet bad = sets.front();
  bad.objects.front().model_id = "truck";
  EXPECT_THROW(dataset_stats(std::vector<AnnotationSet>{bad}, ds.registry), DataError);
}
