#include <cmath>
#include <limits>
#include <numbers>

#include "pnr/discriminate.hpp"

namespace pnr {
namespace {

double normalize_angle(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) a += 180.0;
  a = std::round(a * 1e6) / 1e6;  // grid arithmetic noise
  return a >= 180.0 ? 0.0 : a;
}

// Scores closer than this are ties; quadrature noise would otherwise break them arbitrarily.
constexpr double kScoreTie = 1e-9;

bool improves(const AngleSearchResult& candidate, const std::optional<AngleSearchResult>& best) {
  if (!best) return true;
  const double diff = candidate.projection.score - best->projection.score;
  if (std::abs(diff) > kScoreTie) return diff > 0.0;
  return candidate.projection.angle < best->projection.angle;
}

}  // namespace

std::vector<double> project_angle(std::span<const WeightPoint> points, double angle_deg) {
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.w2 * s + p.w1 * c);
  return out;
}

std::optional<AngleSearchResult> evaluate_angle(std::span<const WeightPoint> points, double angle_deg, int K,
                                                int n_min, const AngleSearchOptions& options) {
  const auto values = project_angle(points, angle_deg);
  MixtureInit init;
  init.n_bar = options.n_bar_hint;
  try {
    AngleSearchResult r;
    r.mixture = fit_mixture(values, K, n_min, init, options.fit);
    r.confidence = confidence(r.mixture);
    r.confidence.angle = normalize_angle(angle_deg);
    r.projection.angle = r.confidence.angle;
    r.projection.score = r.confidence.weighted_mean(r.mixture);
    if (!std::isfinite(r.projection.score)) return std::nullopt;
    return r;
  } catch (const FitFailure&) {
    return std::nullopt;
  } catch (const DegenerateData&) {
    return std::nullopt;
  }
}

AngleSearchResult find_optimal_angle(std::span<const WeightPoint> points, int K, int n_min,
                                     const AngleSearchOptions& options) {
  if (K < 1) throw InvalidArgument("find_optimal_angle: K must be >= 1");
  if (points.size() < static_cast<std::size_t>(10 * K))
    throw InvalidArgument("find_optimal_angle: need at least 10 points per component");
  if (!(options.coarse_step > 0.0) || !(options.fine_step > 0.0) || !(options.fine_halfwidth >= 0.0))
    throw InvalidArgument("find_optimal_angle: angle steps must be positive");
  if (!(options.residual_gate >= 1.0)) throw InvalidArgument("find_optimal_angle: residual_gate must be >= 1");

  std::size_t failed = 0;
  std::vector<AngleSearchResult> coarse;
  const auto coarse_count = static_cast<int>(std::ceil(180.0 / options.coarse_step - 1e-9));
  for (int i = 0; i < coarse_count; ++i) {
    auto r = evaluate_angle(points, normalize_angle(i * options.coarse_step), K, n_min, options);
    if (r)
      coarse.push_back(std::move(*r));
    else
      ++failed;
  }
  if (coarse.empty()) throw FitFailure("mixture fit failed at every projection angle", PoissonMixture{});

  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& r : coarse) best_residual = std::min(best_residual, r.mixture.fit_residual);
  const double gate = options.residual_gate * best_residual;
  auto eligible = [&](const AngleSearchResult& r) { return r.mixture.fit_residual <= gate; };

  std::optional<AngleSearchResult> best;
  for (auto& r : coarse)
    if (eligible(r) && improves(r, best)) best = std::move(r);
  coarse.clear();

  const double center = best->projection.angle;
  const auto fine_count = static_cast<int>(std::floor(options.fine_halfwidth / options.fine_step + 1e-9));
  for (int j = -fine_count; j <= fine_count; ++j) {
    if (j == 0) continue;
    auto r = evaluate_angle(points, normalize_angle(center + j * options.fine_step), K, n_min, options);
    if (!r) {
      ++failed;
      continue;
    }
    if (eligible(*r) && improves(*r, best)) best = std::move(r);
  }
  best->failed_fits = failed;
  return *best;
}

}  // namespace pnr
