#pragma once

#include <string>

#include "pnr/discriminate.hpp"

namespace pnr {

/// Bar chart of a projected histogram with the fitted mixture drawn on top.
std::string histogram_svg(const Hist1D& hist, const PoissonMixture* mixture, const std::string& title);

/// Gray-scale density image of a 2-D weight histogram.
std::string hist2d_svg(const Hist2D& hist, const std::string& title);

}  // namespace pnr
