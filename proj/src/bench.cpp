#include "gazecoach/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace gazecoach {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  if (q == 0.5) {
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
  // Nearest rank.
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

const BenchRow& BenchReport::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw Error(ErrorCode::Validation, "no bench row for method '" + method + "'");
}

std::string BenchReport::csv() const {
  std::ostringstream out;
  out << "scenario,method,accuracy_pct,invocation_fraction_pct,latency_mean_ms,latency_median_ms,"
         "latency_p95_ms,frames,faces,correct\n";
  for (const auto& r : rows) {
    out << scenario << ',' << r.method << ',' << fixed(r.accuracy, 3) << ','
        << fixed(r.invocation_fraction, 3) << ',' << fixed(r.latency_mean_ms, 4) << ','
        << fixed(r.latency_median_ms, 4) << ',' << fixed(r.latency_p95_ms, 4) << ',' << r.frames
        << ',' << r.faces << ',' << r.correct << '\n';
  }
  return out.str();
}

std::string BenchReport::markdown() const {
  std::vector<std::vector<std::string>> cells = {
      {"Method", "Accuracy (%)", "Identifier frames (%)", "Latency median (ms)", "Latency p95 (ms)",
       "Faces"}};
  for (const auto& r : rows) {
    cells.push_back({r.method, fixed(r.accuracy, 1), fixed(r.invocation_fraction, 1),
                     fixed(r.latency_median_ms, 3), fixed(r.latency_p95_ms, 3),
                     std::to_string(r.faces)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  out << "Scenario: " << scenario << "\n\n";
  auto emit = [&](const std::vector<std::string>& row) {
    out << '|';
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << ' ' << row[c] << std::string(width[c] - row[c].size(), ' ') << " |";
    }
    out << '\n';
  };
  emit(cells.front());
  out << '|';
  for (std::size_t c = 0; c < width.size(); ++c) out << std::string(width[c] + 2, '-') << '|';
  out << '\n';
  for (std::size_t r = 1; r < cells.size(); ++r) emit(cells[r]);
  return out.str();
}

BenchRow score_identification(const MethodRun& run, const GroundTruth& truth) {
  if (run.frame_ids.size() != truth.frames.size() || run.detection_ids.size() != run.frame_ids.size()) {
    throw Error(ErrorCode::Alignment, "prediction and truth streams have different lengths");
  }
  BenchRow row;
  row.method = run.method;
  std::int64_t invoked = 0;
  for (std::size_t i = 0; i < truth.frames.size(); ++i) {
    const FrameTruth& ft = truth.frames[i];
    if (run.frame_ids[i] != ft.frame_id) {
      throw Error(ErrorCode::Alignment, "frame id mismatch at position " + std::to_string(i));
    }
    const auto& predicted = run.detection_ids[i];
    if (!predicted.empty() && predicted.size() != ft.detection_ids.size()) {
      throw Error(ErrorCode::Alignment, "detection count mismatch in frame " + std::to_string(ft.frame_id));
    }
    for (std::size_t d = 0; d < ft.detection_ids.size(); ++d) {
      const std::optional<MemberId> p = predicted.empty() ? std::nullopt : predicted[d];
      row.faces += 1;
      if (p == ft.detection_ids[d]) row.correct += 1;
    }
    if (i < run.invoked.size() && run.invoked[i]) ++invoked;
  }
  row.frames = static_cast<std::int64_t>(truth.frames.size());
  row.accuracy = row.faces ? 100.0 * static_cast<double>(row.correct) / static_cast<double>(row.faces) : 100.0;
  row.invocation_fraction =
      row.frames ? 100.0 * static_cast<double>(invoked) / static_cast<double>(row.frames) : 0.0;
  if (!run.latency_ms.empty()) {
    row.latency_mean_ms = std::accumulate(run.latency_ms.begin(), run.latency_ms.end(), 0.0) /
                          static_cast<double>(run.latency_ms.size());
    row.latency_median_ms = percentile(run.latency_ms, 0.5);
    row.latency_p95_ms = percentile(run.latency_ms, 0.95);
  }
  return row;
}

MethodRun method_run_from_attention(const std::vector<FrameAttention>& attention,
                                    std::vector<double> latency_ms) {
  MethodRun run;
  run.method = "anchor";
  for (const auto& fa : attention) {
    run.frame_ids.push_back(fa.frame_id);
    run.detection_ids.push_back(fa.detection_ids);
    run.invoked.push_back(fa.identifier_invoked);
  }
  run.latency_ms = std::move(latency_ms);
  return run;
}

MethodRun run_anchor_method(const std::vector<FrameObservation>& frames,
                            const AudienceLayout& layout, const IdentifierProvider& ident,
                            const IdentificationConfig& config,
                            std::vector<FrameAttention>* attention_out) {
  std::vector<FrameAttention> attention;
  std::vector<double> latency;
  attention.reserve(frames.size());
  latency.reserve(frames.size());
  AnchorIdentifier engine(layout, ident, config);
  for (const auto& f : frames) {
    const auto start = Clock::now();
    FrameAttention fa = engine.process(f);
    latency.push_back(elapsed_ms(start));
    attention.push_back(std::move(fa));
  }
  MethodRun run = method_run_from_attention(attention, std::move(latency));
  if (attention_out) *attention_out = std::move(attention);
  return run;
}

MethodRun run_baseline_method(const std::vector<FrameObservation>& frames,
                              const AudienceLayout& layout, const IdentifierProvider& ident,
                              const IdentificationConfig& config) {
  MethodRun run;
  run.method = "baseline";
  for (const auto& f : frames) {
    const auto start = Clock::now();
    (void)select_target(f, config.target_radius(f.frame_size));
    auto ids = baseline_identify(f, layout, ident, config.baseline_sim_threshold);
    run.latency_ms.push_back(elapsed_ms(start));
    run.frame_ids.push_back(f.frame_id);
    run.detection_ids.push_back(std::move(ids));
    run.invoked.push_back(true);
  }
  return run;
}

BenchReport bench_identify(const ScenarioSpec& spec, const std::vector<std::string>& methods,
                           const IdentificationConfig& config) {
  const SimSession session = generate_session(spec);
  const AudienceLayout layout = register_audience(generate_sweep(spec).frames);
  const auto ident = synthetic_identifier(spec);
  BenchReport report;
  report.scenario = spec.name;
  for (const auto& m : methods) {
    if (m == "anchor") {
      report.rows.push_back(score_identification(
          run_anchor_method(session.frames, layout, *ident, config), session.truth));
    } else if (m == "baseline") {
      report.rows.push_back(score_identification(
          run_baseline_method(session.frames, layout, *ident, config), session.truth));
    } else {
      throw Error(ErrorCode::Validation, "unknown method '" + m + "' (expected anchor or baseline)");
    }
  }
  return report;
}

}  // namespace gazecoach
