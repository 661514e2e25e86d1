#include "gazecoach/advisor.hpp"

#include <doctest.h>

#include <cmath>

using namespace gazecoach;

namespace {

TimeMs frame_t(std::int64_t i) { return static_cast<TimeMs>(std::llround(i * 1000.0 / 30.0)); }

FrameAttention frame(std::int64_t i, std::optional<int> member) {
  FrameAttention fa;
  fa.frame_id = i;
  fa.t = frame_t(i);
  if (member) {
    fa.classification = Classification::AudienceIdentified;
    fa.member = MemberId{*member};
  }
  return fa;
}

GazeDistribution window(std::int64_t total, std::vector<std::int64_t> xi, TimeMs t_end = 30000) {
  GazeDistribution d = GazeDistribution::open(static_cast<int>(xi.size()), 0, 0, t_end);
  d.total = total;
  for (std::size_t i = 0; i < xi.size(); ++i) d.per_member(static_cast<Eigen::Index>(i)) = xi[i];
  d.audience = d.per_member.sum();
  return d;
}

/// Runs a 30 Hz stream of `seconds` through the advisor; `who(i)` picks the gazed member.
template <typename Who>
std::vector<AdviceEvent> run(double seconds, Who who, AdvisorConfig cfg = {}, int n = 6) {
  Advisor advisor(cfg, n);
  std::vector<AdviceEvent> all;
  const auto frames = static_cast<std::int64_t>(std::llround(seconds * 30));
  for (std::int64_t i = 0; i < frames; ++i) {
    for (auto& e : advisor.on_frame(frame(i, who(i)))) all.push_back(e);
  }
  for (auto& e : advisor.tick(static_cast<TimeMs>(std::llround(seconds * 1000)))) all.push_back(e);
  return all;
}

}  // namespace

TEST_SUITE("advisor") {

TEST_CASE("ten percent contact for 90 s gives three prompts") {
  const auto events = run(90, [](std::int64_t i) -> std::optional<int> {
    if (i % 10 == 0) return 1 + static_cast<int>((i / 10) % 6);
    return std::nullopt;
  });
  std::vector<AdviceEvent> insufficient;
  for (const auto& e : events) {
    if (e.kind == AdviceKind::InsufficientEyeContact) insufficient.push_back(e);
  }
  REQUIRE(insufficient.size() == 3);
  CHECK(insufficient[0].t == 30000);
  CHECK(insufficient[1].t == 60000);
  CHECK(insufficient[2].t == 90000);
  for (const auto& e : insufficient) CHECK(e.prompt_text == "look at the audience");
}

TEST_CASE("75 s starving the rightmost member") {
  const auto events = run(75, [](std::int64_t i) -> std::optional<int> { return 1 + static_cast<int>(i % 5); });
  std::vector<AdviceEvent> imbalance;
  for (const auto& e : events) {
    if (e.kind == AdviceKind::ImbalancedAttention) imbalance.push_back(e);
  }
  REQUIRE(imbalance.size() == 1);
  CHECK(imbalance[0].t == 75000);
  CHECK(imbalance[0].side == Side::Right);
  CHECK(imbalance[0].member == MemberId{6});
  CHECK(imbalance[0].prompt_text == "look right more");
}

TEST_CASE("session shorter than n is silent") {
  const auto events = run(29, [](std::int64_t) -> std::optional<int> { return std::nullopt; });
  CHECK(events.empty());
}

TEST_CASE("check_insufficient boundary") {
  CHECK(check_insufficient(window(100, {15, 0}), 20).has_value());
  CHECK_FALSE(check_insufficient(window(100, {20, 0}), 20).has_value());
  CHECK_FALSE(check_insufficient(window(100, {100, 0}), 20).has_value());
  CHECK_FALSE(check_insufficient(window(0, {0, 0}), 20).has_value());
  const auto e = check_insufficient(window(100, {15, 0}, 60000), 20);
  CHECK(e->t == 60000);
}

TEST_CASE("check_imbalance side and tie-break") {
  const AdvisorConfig cfg;
  auto right = check_imbalance(window(200, {30, 30, 30, 30, 30, 0}), cfg);
  REQUIRE(right);
  CHECK(right->member == MemberId{6});
  CHECK(right->prompt_text == "look right more");

  auto left = check_imbalance(window(200, {0, 30, 30, 30, 30, 30}), cfg);
  REQUIRE(left);
  CHECK(left->member == MemberId{1});
  CHECK(left->prompt_text == "look left more");

  auto tie = check_imbalance(window(200, {30, 30, 30, 30, 30, 30}), cfg);
  REQUIRE(tie);
  CHECK(tie->member == MemberId{1});
  CHECK(tie->side == Side::Left);
}

TEST_CASE("odd audiences put the middle member on the right") {
  CHECK(side_of(MemberId{2}, 5) == Side::Left);
  CHECK(side_of(MemberId{3}, 5) == Side::Right);
  CHECK(side_of(MemberId{3}, 6) == Side::Left);
  CHECK(side_of(MemberId{4}, 6) == Side::Right);
}

TEST_CASE("imbalance is silent without contact or with one member") {
  const AdvisorConfig cfg;
  CHECK_FALSE(check_imbalance(window(100, {0, 0, 0}), cfg).has_value());
  CHECK_FALSE(check_imbalance(window(100, {50}), cfg).has_value());
}

TEST_CASE("entropy suppression") {
  AdvisorConfig cfg;
  cfg.suppress_entropy_fraction = 0.9;
  // Near-uniform: GDE close to ln 6.
  CHECK_FALSE(check_imbalance(window(200, {30, 30, 30, 30, 30, 29}), cfg).has_value());
  // ln 5 < 0.9 ln 6, so a fully starved member still fires.
  CHECK(check_imbalance(window(200, {30, 30, 30, 30, 30, 0}), cfg).has_value());
  CHECK(check_imbalance(window(200, {90, 10, 0, 0, 0, 0}), cfg).has_value());
}

TEST_CASE("coincident window ends emit insufficient first") {
  AdvisorConfig cfg;
  cfg.n_ms = 30000;
  cfg.k_ms = 30000;
  const auto events = run(30, [](std::int64_t i) -> std::optional<int> {
    return i % 20 == 0 ? std::optional<int>(1) : std::nullopt;
  }, cfg);
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == AdviceKind::InsufficientEyeContact);
  CHECK(events[1].kind == AdviceKind::ImbalancedAttention);
  CHECK(events[0].t == events[1].t);
}

TEST_CASE("event cadence bound") {
  const auto events = run(200, [](std::int64_t) -> std::optional<int> { return 2; });
  int insufficient = 0, imbalance = 0;
  for (const auto& e : events) (e.kind == AdviceKind::InsufficientEyeContact ? insufficient : imbalance)++;
  CHECK(insufficient <= 200 / 30);
  CHECK(imbalance <= 200 / 75);
  CHECK(imbalance == 2);
}

TEST_CASE("dropped frames count toward X only") {
  Advisor advisor({}, 2);
  advisor.on_frame(frame(0, 1));
  advisor.on_dropped(frame_t(1));
  CHECK(advisor.contact_window().total == 2);
  CHECK(advisor.contact_window().audience == 1);
}

TEST_CASE("invalid config is rejected") {
  AdvisorConfig cfg;
  cfg.r_p = 0;
  CHECK_THROWS_AS(Advisor(cfg, 6), Error);
}

}  // TEST_SUITE
