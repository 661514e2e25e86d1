#include "helpers.hpp"
#include "gazecoach/simulator.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace gazecoach;
using testing::unit;

namespace {

FaceDetection face(double x, int who, int dim = 8) {
  return make_detection(Point2(x, 360), 50, 0.9, unit(dim, who));
}

FrameObservation sweep_frame(std::int64_t id, std::vector<FaceDetection> dets) {
  FrameObservation f;
  f.frame_id = id;
  f.t = id * 33;
  f.detections = std::move(dets);
  return f;
}

}  // namespace

TEST_SUITE("registration") {

TEST_CASE("stationary faces form one track each") {
  SweepState s;
  for (int i = 0; i < 3; ++i) s = ingest_sweep_frame(s, sweep_frame(i, {face(300, 0), face(700, 1)}));
  REQUIRE(s.tracks.size() == 2);
  for (const auto& t : s.tracks) CHECK(t.observations == 3);
}

TEST_CASE("pan right by 100 px links the shared face") {
  // A, B in frame 1; B, C in frame 2 with B moved -100 px.
  SweepState s;
  s = ingest_sweep_frame(s, sweep_frame(0, {face(400, 0), face(600, 1)}));
  s = ingest_sweep_frame(s, sweep_frame(1, {face(500, 1), face(800, 2)}));
  REQUIRE(s.tracks.size() == 3);
  CHECK(s.last_frame_shift == doctest::Approx(-100));
  auto offset_of = [&](int who) {
    for (const auto& t : s.tracks) {
      if (t.best.descriptor(who) == 1) return t.offset;
    }
    FAIL("track missing");
    return 0.0;
  };
  CHECK(offset_of(0) < offset_of(1));
  CHECK(offset_of(1) < offset_of(2));
  // B observed twice at the same global position.
  CHECK(offset_of(1) == doctest::Approx(600));
  CHECK(offset_of(2) == doctest::Approx(900));
}

TEST_CASE("finalize orders tracks by offset") {
  SweepState s;
  for (double x : {500.0, 100.0, 300.0}) {
    SweepTrack t;
    t.offset = t.last_global = x;
    t.best = face(x, static_cast<int>(x / 100));
    t.observations = 2;
    s.tracks.push_back(t);
  }
  const AudienceLayout layout = finalize_layout(s);
  REQUIRE(layout.size() == 3);
  CHECK(layout.member(MemberId{1}).global_offset == 100);
  CHECK(layout.member(MemberId{2}).global_offset == 300);
  CHECK(layout.member(MemberId{3}).global_offset == 500);
}

TEST_CASE("single track gives N = 1") {
  SweepState s;
  SweepTrack t;
  t.offset = 42;
  t.best = face(42, 0);
  t.observations = 5;
  s.tracks.push_back(t);
  const AudienceLayout layout = finalize_layout(s);
  REQUIRE(layout.size() == 1);
  CHECK(layout.members().front().id == MemberId{1});
}

TEST_CASE("no sweep data is an empty audience") {
  CHECK_THROWS_AS(finalize_layout(SweepState{}), Error);
  try {
    finalize_layout(SweepState{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAudience);
  }
}

TEST_CASE("single-sighting tracks are discarded") {
  SweepState s;
  s = ingest_sweep_frame(s, sweep_frame(0, {face(400, 0), face(600, 1)}));
  s = ingest_sweep_frame(s, sweep_frame(1, {face(500, 1), face(800, 2)}));
  const AudienceLayout layout = finalize_layout(s);
  CHECK(layout.size() == 1);
  RegistrationConfig keep_all;
  keep_all.min_track_observations = 1;
  CHECK(finalize_layout(s, keep_all).size() == 3);
}

TEST_CASE("out-of-order sweep frame is rejected") {
  SweepState s = ingest_sweep_frame({}, sweep_frame(5, {face(400, 0)}));
  try {
    ingest_sweep_frame(s, sweep_frame(4, {face(400, 0)}));
    FAIL("expected ordering error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Ordering);
  }
}

TEST_CASE("frame without detections leaves the state unchanged") {
  SweepState s = ingest_sweep_frame({}, sweep_frame(0, {face(400, 0)}));
  SweepState after = ingest_sweep_frame(s, sweep_frame(1, {}));
  CHECK(after.tracks.size() == s.tracks.size());
  CHECK(after.pan_total == s.pan_total);
}

TEST_CASE("six-member synthetic sweep yields S_1..S_6 in seat order") {
  const ScenarioSpec spec = reference_scenario("static");
  const AudienceLayout layout = register_audience(generate_sweep(spec).frames);
  REQUIRE(layout.size() == 6);
  const Eigen::MatrixXd basis = member_basis(spec);
  for (int k = 1; k <= 6; ++k) {
    const auto& m = layout.member(MemberId{k});
    // Template descriptor belongs to seat k.
    Eigen::Index best = 0;
    (basis.transpose() * m.descriptor).maxCoeff(&best);
    CHECK(best == k - 1);
    if (k > 1) CHECK(m.global_offset > layout.member(MemberId{k - 1}).global_offset);
  }
}

TEST_CASE("detection order within frames does not change the layout") {
  const ScenarioSpec spec = reference_scenario("slow-pan");
  auto frames = generate_sweep(spec).frames;
  const AudienceLayout a = register_audience(frames);
  std::mt19937_64 rng(7);
  for (auto& f : frames) std::shuffle(f.detections.begin(), f.detections.end(), rng);
  const AudienceLayout b = register_audience(frames);
  CHECK(a == b);
}

}  // TEST_SUITE
