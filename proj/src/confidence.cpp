#include <algorithm>
#include <cmath>
#include <limits>

#include "pnr/discriminate.hpp"

namespace pnr {

double ConfidenceReport::weighted_mean(const PoissonMixture& mix) const {
  const auto q = mix.priors();
  double acc = 0.0;
  for (int k = 0; k < mix.K; ++k) {
    const auto it = per_n.find(mix.photon_number(k));
    if (it != per_n.end()) acc += q[k] * it->second;
  }
  return acc;
}

ConfidenceReport confidence(const PoissonMixture& mix) {
  for (double s : mix.sigmas)
    if (!(s > 0.0)) throw InvalidArgument("confidence: component sigma must be positive");
  mix.validate();

  const int K = mix.K;
  const auto q = mix.priors();
  const double max_sigma = *std::max_element(mix.sigmas.begin(), mix.sigmas.end());
  const double min_sigma = *std::min_element(mix.sigmas.begin(), mix.sigmas.end());
  const double lo = *std::min_element(mix.means.begin(), mix.means.end()) - 8.0 * max_sigma;
  const double hi = *std::max_element(mix.means.begin(), mix.means.end()) + 8.0 * max_sigma;
  const double target_step = min_sigma / 50.0;
  const double intervals = std::ceil((hi - lo) / target_step);
  if (!(intervals < 2e7)) throw InvalidArgument("confidence: quadrature grid too fine for this mixture");
  const auto n = static_cast<std::size_t>(std::max(intervals, 1.0));
  const double h = (hi - lo) / static_cast<double>(n);

  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  std::vector<double> log_prior(K), log_sigma(K), integral(K, 0.0), log_joint(K);
  for (int k = 0; k < K; ++k) {
    log_prior[k] = std::log(q[k]);
    log_sigma[k] = std::log(mix.sigmas[k]);
  }

  for (std::size_t i = 0; i <= n; ++i) {
    const double s = lo + h * static_cast<double>(i);
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double u = (s - mix.means[k]) / mix.sigmas[k];
      log_joint[k] = log_prior[k] - log_sigma[k] - kLogSqrt2Pi - 0.5 * u * u;
      top = std::max(top, log_joint[k]);
    }
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(log_joint[k] - top);
    const double log_evidence = top + std::log(sum);
    const double weight = (i == 0 || i == n) ? 0.5 * h : h;
    for (int k = 0; k < K; ++k) {
      // p(s|n)^2 p(n) / p(s) = p(s|n) * posterior(n|s)
      const double log_likelihood = log_joint[k] - log_prior[k];
      integral[k] += weight * std::exp(log_likelihood + log_joint[k] - log_evidence);
    }
  }

  ConfidenceReport rep;
  rep.fit_residual = mix.fit_residual;
  for (int k = 0; k < K; ++k) rep.per_n[mix.photon_number(k)] = std::clamp(integral[k], 0.0, 1.0);

  std::vector<bool> flags = mix.unresolved;
  if (static_cast<int>(flags.size()) != K - 1) {
    PoissonMixture copy = mix;
    copy.refresh();
    flags = copy.unresolved;
  }
  int last = 0;
  while (last + 1 < K && !flags[static_cast<std::size_t>(last)]) ++last;
  rep.n_max_reported = mix.photon_number(last);
  return rep;
}

}  // namespace pnr
