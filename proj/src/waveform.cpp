#include "pnr/waveform.hpp"

#include <cmath>
#include <string>

#include "pnr/errors.hpp"

namespace pnr {

void Trace::validate() const {
  if (samples.empty()) throw InvalidArgument("trace " + std::to_string(id) + " has no samples");
  if (!(sample_period > 0.0) || !std::isfinite(sample_period))
    throw InvalidArgument("trace " + std::to_string(id) + " has non-positive sample period");
  for (double v : samples) {
    if (!std::isfinite(v)) throw InvalidArgument("trace " + std::to_string(id) + " has non-finite samples");
  }
}

void TraceSet::validate() const {
  if (traces.empty()) return;
  const auto& first = traces.front();
  for (const auto& tr : traces) {
    tr.validate();
    if (tr.size() != first.size() || tr.sample_period != first.sample_period)
      throw InvalidArgument("trace set mixes record lengths or sample periods");
  }
  if (mean_photon_number_label && !(*mean_photon_number_label >= 0.0))
    throw InvalidArgument("mean photon number label must be nonnegative");
}

double poisson_pmf(unsigned n, double n_bar) {
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw InvalidArgument("poisson_pmf: n_bar must be positive");
  const double k = static_cast<double>(n);
  return std::exp(k * std::log(n_bar) - n_bar - std::lgamma(k + 1.0));
}

}  // namespace pnr
