#pragma once

namespace pnr {

/// Mean detected photon number per pulse from detector count rate and pulse repetition
/// rate, assuming Poissonian light: -ln(1 - CR / RR).
/// Throws InvalidArgument for negative or non-finite rates, SaturationError when CR >= RR.
double calibrate_nbar(double count_rate, double repetition_rate);

/// Count rate expected for a given mean photon number: RR (1 - e^{-n_bar}).
double expected_count_rate(double n_bar, double repetition_rate);

}  // namespace pnr
