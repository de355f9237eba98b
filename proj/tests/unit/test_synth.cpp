#include "mpnav/synth.hpp"
#include "mpnav/trajectory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

using namespace mpnav;
using namespace mpnav::synth;

namespace {

scene::Pose pose_at(const Vec3& p, double t = 0.0) {
  scene::Pose pose;
  pose.t = t;
  pose.p = p;
  return pose;
}

template <typename T>
bool bitwise_equal(const T& a, const T& b) {
  return std::memcmp(&a.rtt, &b.rtt, sizeof(double)) == 0;
}

std::vector<scene::Pose> straight(double speed, double duration, double rate) {
  scene::WaypointSpec spec;
  spec.points = {{0, 0}, {1000, 0}};
  spec.closed = false;
  spec.height = 1.5;
  spec.speed_profile = {{0, speed}};
  spec.duration = duration;
  return scene::sample_trajectory(spec, rate);
}

}  // namespace

TEST(SynthLos, ReferenceGeometry) {
  const scene::BaseStation bs{"bs", {0, 0, 10}};
  const LosObs o = synth_los(bs, pose_at({30, 40, 0}), PathLossModel{});
  const double d = std::sqrt(2600.0);
  EXPECT_NEAR(o.rtt, 2 * d / kSpeedOfLight, 1e-20);
  EXPECT_NEAR(o.rtt, 3.4016e-7, 1e-10);
  EXPECT_NEAR(o.aod_az, std::atan2(40.0, 30.0), 1e-12);
  EXPECT_NEAR(o.aod_el, std::asin(-10.0 / d), 1e-12);
  const PathLossModel plm;
  EXPECT_NEAR(o.rss, plm.tx_power - plm.pl0 - 10 * plm.exponent * std::log10(d), 1e-12);
  EXPECT_TRUE(o.truth_los);
}

TEST(SynthLos, AxisAlignedAndAntipodal) {
  const scene::BaseStation bs{"bs", {0, 0, 10}};
  const LosObs e = synth_los(bs, pose_at({10, 0, 10}), PathLossModel{});
  EXPECT_NEAR(e.aod_az, 0.0, 1e-15);
  EXPECT_NEAR(e.aod_el, 0.0, 1e-15);
  for (const Vec3& ue : {Vec3(30, 40, 0), Vec3(-5, 2, 30), Vec3(-40, -1e-3, 1.5)}) {
    const LosObs o = synth_los(bs, pose_at(ue), PathLossModel{});
    EXPECT_NEAR(wrap_pi(o.aoa_az - o.aod_az - kPi), 0.0, 1e-12);
    EXPECT_NEAR(o.aoa_el, -o.aod_el, 1e-12);
  }
  EXPECT_THROW(synth_los(bs, pose_at(bs.p), PathLossModel{}), GeometryError);
}

TEST(SynthSbr, ToaAndReflectionLoss) {
  const scene::BaseStation bs{"bs", {0, 0, 10}};
  const scene::Wall w("x50", {50, 0}, {50, 100}, 0, 20);
  const auto path = scene::specular_path(bs, {20, 30, 0}, w);
  ASSERT_TRUE(path);
  const PathLossModel plm;
  const SbrObs o = synth_sbr(*path, pose_at({20, 30, 0}), plm);
  EXPECT_NEAR(o.toa, std::sqrt(7400.0) / kSpeedOfLight, 1e-20);
  EXPECT_NEAR(o.toa, 2.8694e-7, 1e-11);
  EXPECT_GT(o.toa * kSpeedOfLight, (bs.p - Vec3(20, 30, 0)).norm());
  EXPECT_NEAR(plm.rss_at(path->length) - o.rss, plm.reflection_loss_db, 1e-12);
  EXPECT_EQ(o.truth_bounces, 1);
  EXPECT_NEAR(o.aoa_el, -o.aod_el, 1e-12);
}

TEST(PathLoss, InverseAndValidation) {
  PathLossModel plm;
  for (double d : {1.0, 12.5, 300.0}) EXPECT_NEAR(plm.distance_for(plm.rss_at(d)), d, 1e-9 * d);
  plm.exponent = 0;
  EXPECT_THROW(plm.validate(), ConfigError);
}

TEST(ApplyNoise, ZeroNoiseIsBitwiseIdentity) {
  const LosObs o = synth_los({"bs", {0, 0, 10}}, pose_at({30, 40, 0}), PathLossModel{});
  Rng rng = make_stream(1, 0);
  const LosObs n = apply_noise(o, NoiseCfg{}, rng);
  EXPECT_TRUE(bitwise_equal(o, n));
  EXPECT_EQ(std::memcmp(&o.aod_az, &n.aod_az, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&o.aoa_el, &n.aoa_el, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&o.rss, &n.rss, sizeof(double)), 0);
}

TEST(ApplyNoise, RangeVarianceMonteCarlo) {
  const LosObs o = synth_los({"bs", {0, 0, 10}}, pose_at({30, 40, 0}), PathLossModel{});
  const double d0 = 0.5 * kSpeedOfLight * o.rtt;
  NoiseCfg cfg;
  cfg.var_range = 1.0;
  cfg.var_angle = 0.01;
  Rng rng = make_stream(2024, 0);
  const int n = 100000;
  double sum = 0, sum2 = 0, az_sum = 0;
  for (int i = 0; i < n; ++i) {
    const LosObs x = apply_noise(o, cfg, rng);
    const double e = 0.5 * kSpeedOfLight * x.rtt - d0;
    sum += e;
    sum2 += e * e;
    az_sum += x.aod_az - o.aod_az;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(n));
  EXPECT_LT(std::abs(az_sum / n), 3.0 * cfg.sigma_angle_rad() / std::sqrt(n));
}

TEST(ApplyNoise, DeterministicStreams) {
  Epoch e;
  e.t = 1.0;
  e.los.push_back(synth_los({"bs", {0, 0, 10}}, pose_at({30, 40, 0}), PathLossModel{}));
  NoiseCfg cfg;
  cfg.var_range = 0.5;
  cfg.var_angle = 0.01;
  cfg.seed = 7;
  const Epoch a = apply_noise(e, cfg, 3);
  const Epoch b = apply_noise(e, cfg, 3);
  EXPECT_EQ(a.los[0].rtt, b.los[0].rtt);
  EXPECT_EQ(a.los[0].aod_az, b.los[0].aod_az);
  cfg.seed = 8;
  const Epoch c = apply_noise(e, cfg, 3);
  EXPECT_NE(a.los[0].rtt, c.los[0].rtt);
  cfg.seed = 7;
  EXPECT_NE(a.los[0].rtt, apply_noise(e, cfg, 4).los[0].rtt);
}

TEST(ApplyNoise, RejectsNegativeVariance) {
  NoiseCfg cfg;
  cfg.var_range = -1;
  Rng rng = make_stream(1, 0);
  EXPECT_THROW(apply_noise(LosObs{}, cfg, rng), ConfigError);
}

TEST(Outages, ClosedIntervalOnLosOnly) {
  const std::vector<OutageWindow> windows{{20, 40}};
  Epoch e;
  e.los.resize(2);
  e.sbr.resize(3);
  auto stamp = [&](double t) {
    e.t = t;
    for (auto& o : e.los) o.t = t;
    for (auto& o : e.sbr) o.t = t;
  };
  for (double t : {10.0, 41.0}) {
    stamp(t);
    EXPECT_EQ(apply_outages(e, windows).los.size(), 2u);
  }
  for (double t : {20.0, 30.0, 40.0}) {
    stamp(t);
    const Epoch out = apply_outages(e, windows);
    EXPECT_TRUE(out.los.empty());
    EXPECT_EQ(out.sbr.size(), 3u);
  }
  EXPECT_TRUE(in_outage(20.0, windows));
  EXPECT_FALSE(in_outage(19.999, windows));
}

TEST(SynthImu, StationaryAndUniformMotionSenseGravityOnly) {
  Rng rng = make_stream(1, 0);
  std::vector<scene::Pose> still(50);
  for (std::size_t k = 0; k < still.size(); ++k) still[k] = pose_at({1, 2, 3}, 0.01 * k);
  for (const auto& poses : {still, straight(8.0, 2.0, 100)}) {
    const auto imu = synth_imu(poses, ImuErrors{}, 100, rng);
    ASSERT_EQ(imu.size(), poses.size() - 1);
    for (const ImuSample& s : imu) {
      EXPECT_LT((s.accel - Vec3(0, 0, kGravity)).norm(), 1e-9);
      EXPECT_LT(s.gyro.norm(), 1e-12);
    }
  }
  EXPECT_THROW(synth_imu(std::vector<scene::Pose>(2), ImuErrors{}, 100, rng), ConfigError);
}

TEST(SynthOdo, SpeedPlusNoise) {
  Rng rng = make_stream(1, 0);
  const auto poses = straight(8.0, 5.0, 100);
  const auto odo = synth_odo(poses, 10, OdoErrors{0.0}, rng);
  ASSERT_FALSE(odo.empty());
  for (const OdoSample& s : odo) EXPECT_NEAR(s.speed, 8.0, 1e-9);
}

TEST(SynthEpoch, BlockedBsYieldsFirstArrivalRecord) {
  World world;
  world.base_stations = {{"bs", {0, 0, 10}}};
  world.walls.emplace_back("block", Vec2(50, -20), Vec2(50, 20), 0, 30);
  world.walls.emplace_back("mirror", Vec2(0, 40), Vec2(200, 40), 0, 30);
  const Epoch e = synth_epoch(world, pose_at({100, 0, 1.5}), PathLossModel{}, ObservationOptions{});
  ASSERT_EQ(e.los.size(), 1u);
  EXPECT_FALSE(e.los[0].truth_los);
  ASSERT_FALSE(e.sbr.empty());
  for (const SbrObs& s : e.sbr) EXPECT_GE(s.toa * kSpeedOfLight, std::sqrt(10000 + 8.5 * 8.5));
}
