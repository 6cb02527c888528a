#include "pnr/calibration.hpp"

#include <cmath>
#include <string>

#include "pnr/errors.hpp"

namespace pnr {

double calibrate_nbar(double count_rate, double repetition_rate) {
  if (!std::isfinite(count_rate) || !std::isfinite(repetition_rate))
    throw InvalidArgument("rates must be finite");
  if (count_rate < 0.0 || !(repetition_rate > 0.0))
    throw InvalidArgument("count rate must be >= 0 and repetition rate > 0");
  if (count_rate >= repetition_rate)
    throw SaturationError("count rate " + std::to_string(count_rate) + " /s saturates the repetition rate " +
                          std::to_string(repetition_rate) + " /s");
  return -std::log1p(-count_rate / repetition_rate);
}

double expected_count_rate(double n_bar, double repetition_rate) {
  if (!(n_bar >= 0.0) || !(repetition_rate > 0.0)) throw InvalidArgument("n_bar must be >= 0 and RR > 0");
  return -repetition_rate * std::expm1(-n_bar);
}

}  // namespace pnr
