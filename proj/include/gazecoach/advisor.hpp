#pragma once

#include "gazecoach/metrics.hpp"

namespace gazecoach {

inline constexpr const char* kPromptLookAtAudience = "look at the audience";
inline constexpr const char* kPromptLookLeft = "look left more";
inline constexpr const char* kPromptLookRight = "look right more";

struct AdvisorConfig {
  scalar_t r_p = 20;      ///< percent
  TimeMs n_ms = 30'000;   ///< insufficient-contact check period
  TimeMs k_ms = 75'000;   ///< imbalance check period
  /// When set, imbalance is not reported while GDE >= fraction x ln N.
  std::optional<scalar_t> suppress_entropy_fraction;

  void validate() const;
};

enum class AdviceKind { InsufficientEyeContact, ImbalancedAttention };
enum class Side { Left, Right };

const char* to_string(AdviceKind k);
const char* to_string(Side s);

struct AdviceEvent {
  TimeMs t = 0;
  AdviceKind kind = AdviceKind::InsufficientEyeContact;
  std::optional<Side> side;
  std::optional<MemberId> member;
  std::string prompt_text;
  std::int64_t window_id = 0;

  friend bool operator==(const AdviceEvent&, const AdviceEvent&) = default;
};

/// Left iff ordinal <= floor(N/2); the middle member of an odd audience is right.
Side side_of(MemberId member, int n_members);

/// "look at the audience" iff EP < r_p (strict). Empty windows never fire.
std::optional<AdviceEvent> check_insufficient(const GazeDistribution& window, scalar_t r_p);

/// Prompt toward the member with the lowest ED (ties to the lowest ordinal).
/// Silent when X-bar = 0 or N = 1.
std::optional<AdviceEvent> check_imbalance(const GazeDistribution& window,
                                           const AdvisorConfig& config);

enum class WindowRule { Contact, Balance };

const char* to_string(WindowRule r);

struct ClosedWindow {
  WindowRule rule = WindowRule::Contact;
  GazeDistribution window;
};

/// Tumbling-window rule engine driven by the frame clock.
class Advisor {
 public:
  /// Windows tile the clock from `origin` onward.
  Advisor(AdvisorConfig config, int n_members, TimeMs origin = 0);

  /// Closes every window ending at or before `clock` and evaluates its rule.
  /// Events come out in time order, insufficient before imbalance at equal t.
  /// Closed windows are appended to `closed` when given.
  std::vector<AdviceEvent> tick(TimeMs clock, std::vector<ClosedWindow>* closed = nullptr);

  /// tick(fa.t), then accumulate the frame into both open windows.
  std::vector<AdviceEvent> on_frame(const FrameAttention& fa,
                                    std::vector<ClosedWindow>* closed = nullptr);
  std::vector<AdviceEvent> on_dropped(TimeMs t, std::vector<ClosedWindow>* closed = nullptr);

  const GazeDistribution& contact_window() const { return contact_; }
  const GazeDistribution& balance_window() const { return balance_; }
  const AdvisorConfig& config() const { return config_; }

 private:
  AdvisorConfig config_;
  int n_members_;
  GazeDistribution contact_;
  GazeDistribution balance_;
};

}  // namespace gazecoach
