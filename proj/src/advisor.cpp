#include "gazecoach/advisor.hpp"

#include <algorithm>

namespace gazecoach {

const char* to_string(AdviceKind k) {
  return k == AdviceKind::InsufficientEyeContact ? "insufficient_eye_contact"
                                                 : "imbalanced_attention";
}

const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

const char* to_string(WindowRule r) { return r == WindowRule::Contact ? "contact" : "balance"; }

void AdvisorConfig::validate() const {
  if (!(r_p > 0 && r_p < 100)) throw Error(ErrorCode::Validation, "r_p must be in (0, 100)");
  if (n_ms <= 0 || k_ms <= 0) throw Error(ErrorCode::Validation, "check periods must be positive");
  if (suppress_entropy_fraction &&
      !(*suppress_entropy_fraction > 0 && *suppress_entropy_fraction <= 1)) {
    throw Error(ErrorCode::Validation, "suppress_entropy_fraction must be in (0, 1]");
  }
}

Side side_of(MemberId member, int n_members) {
  return member.ordinal <= n_members / 2 ? Side::Left : Side::Right;
}

std::optional<AdviceEvent> check_insufficient(const GazeDistribution& window, scalar_t r_p) {
  if (window.total == 0) return std::nullopt;
  // EP < r_p  <=>  100 X-bar < r_p X; both sides exact for integral r_p.
  const scalar_t lhs = static_cast<scalar_t>(window.audience) * 100;
  const scalar_t rhs = r_p * static_cast<scalar_t>(window.total);
  if (!(lhs < rhs)) return std::nullopt;
  AdviceEvent e;
  e.t = window.t_end;
  e.kind = AdviceKind::InsufficientEyeContact;
  e.prompt_text = kPromptLookAtAudience;
  e.window_id = window.window_id;
  return e;
}

std::optional<AdviceEvent> check_imbalance(const GazeDistribution& window,
                                           const AdvisorConfig& config) {
  const int n = window.n_members();
  if (window.audience == 0 || n <= 1) return std::nullopt;
  if (config.suppress_entropy_fraction && window.per_member.sum() > 0) {
    const scalar_t gde = gaze_distribution_entropy(window.per_member);
    if (gde >= *config.suppress_entropy_fraction * std::log(static_cast<scalar_t>(n))) {
      return std::nullopt;
    }
  }
  Eigen::Index argmin = 0;
  window.per_member.minCoeff(&argmin);  // first minimum, i.e. lowest ordinal
  const MemberId member{static_cast<int>(argmin) + 1};
  AdviceEvent e;
  e.t = window.t_end;
  e.kind = AdviceKind::ImbalancedAttention;
  e.side = side_of(member, n);
  e.member = member;
  e.prompt_text = *e.side == Side::Left ? kPromptLookLeft : kPromptLookRight;
  e.window_id = window.window_id;
  return e;
}

Advisor::Advisor(AdvisorConfig config, int n_members, TimeMs origin)
    : config_(std::move(config)), n_members_(n_members) {
  config_.validate();
  contact_ = GazeDistribution::open(n_members_, 0, origin, origin + config_.n_ms);
  balance_ = GazeDistribution::open(n_members_, 0, origin, origin + config_.k_ms);
}

std::vector<AdviceEvent> Advisor::tick(TimeMs clock, std::vector<ClosedWindow>* closed) {
  std::vector<AdviceEvent> events;
  while (contact_.t_end <= clock || balance_.t_end <= clock) {
    const TimeMs next = std::min(contact_.t_end, balance_.t_end);
    if (contact_.t_end == next) {
      if (auto e = check_insufficient(contact_, config_.r_p)) events.push_back(std::move(*e));
      if (closed) closed->push_back({WindowRule::Contact, contact_});
      contact_ = GazeDistribution::open(n_members_, contact_.window_id + 1, contact_.t_end,
                                        contact_.t_end + config_.n_ms);
    }
    if (balance_.t_end == next) {
      if (auto e = check_imbalance(balance_, config_)) events.push_back(std::move(*e));
      if (closed) closed->push_back({WindowRule::Balance, balance_});
      balance_ = GazeDistribution::open(n_members_, balance_.window_id + 1, balance_.t_end,
                                        balance_.t_end + config_.k_ms);
    }
  }
  return events;
}

std::vector<AdviceEvent> Advisor::on_frame(const FrameAttention& fa,
                                           std::vector<ClosedWindow>* closed) {
  auto events = tick(fa.t, closed);
  contact_.add(fa);
  balance_.add(fa);
  return events;
}

std::vector<AdviceEvent> Advisor::on_dropped(TimeMs t, std::vector<ClosedWindow>* closed) {
  auto events = tick(t, closed);
  contact_.add_dropped(t);
  balance_.add_dropped(t);
  return events;
}

}  // namespace gazecoach
