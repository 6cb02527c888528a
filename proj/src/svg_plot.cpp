#include "pnr/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pnr {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << escape(title) << "</text>\n"
     << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
     << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
}

}  // namespace

std::string histogram_svg(const Hist1D& hist, const PoissonMixture* mixture, const std::string& title) {
  std::ostringstream os;
  open_svg(os, title);
  if (hist.bins() == 0) {
    os << "</svg>\n";
    return os.str();
  }
  std::vector<double> model;
  if (mixture) model = mixture_bin_counts(*mixture, hist.edges);
  double top = *std::max_element(hist.counts.begin(), hist.counts.end());
  for (double m : model) top = std::max(top, m);
  if (!(top > 0.0)) top = 1.0;

  const double x0 = hist.edges.front();
  const double span = hist.edges.back() - x0;
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto X = [&](double x) { return kMargin + (x - x0) / span * pw; };
  auto Y = [&](double c) { return kHeight - kMargin - c / top * ph; };

  for (std::size_t i = 0; i < hist.bins(); ++i) {
    const double y = Y(hist.counts[i]);
    os << "<rect x=\"" << fmt(X(hist.edges[i])) << "\" y=\"" << fmt(y) << "\" width=\""
       << fmt(std::max(X(hist.edges[i + 1]) - X(hist.edges[i]), 0.0)) << "\" height=\""
       << fmt(kHeight - kMargin - y) << "\" fill=\"#8fb3d9\"/>\n";
  }
  if (!model.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < model.size(); ++i) os << fmt(X(hist.center(i))) << ',' << fmt(Y(model[i])) << ' ';
    os << "\"/>\n";
  }
  os << "<text x=\"" << kMargin << "\" y=\"" << kHeight - 20 << "\" font-family=\"sans-serif\" font-size=\"11\">"
     << fmt(x0) << "</text>\n"
     << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - 20
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(hist.edges.back())
     << "</text>\n</svg>\n";
  return os.str();
}

std::string hist2d_svg(const Hist2D& hist, const std::string& title) {
  std::ostringstream os;
  open_svg(os, title);
  const std::size_t nx = hist.nx();
  const std::size_t ny = hist.ny();
  if (nx == 0 || ny == 0) {
    os << "</svg>\n";
    return os.str();
  }
  const double top = static_cast<double>(*std::max_element(hist.counts.begin(), hist.counts.end()));
  const double cw = (kWidth - 2 * kMargin) / static_cast<double>(nx);
  const double ch = (kHeight - 2 * kMargin) / static_cast<double>(ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const auto c = hist.at(ix, iy);
      if (c == 0) continue;
      // log scale so sparse tails stay visible
      const double level = std::log1p(static_cast<double>(c)) / std::log1p(top);
      const int g = static_cast<int>(std::lround(230.0 * (1.0 - level)));
      os << "<rect x=\"" << fmt(kMargin + ix * cw) << "\" y=\"" << fmt(kHeight - kMargin - (iy + 1) * ch)
         << "\" width=\"" << fmt(cw) << "\" height=\"" << fmt(ch) << "\" fill=\"rgb(" << g << ',' << g << ',' << g
         << ")\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pnr
