#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "pnr/discriminate.hpp"
#include "pnr/waveform.hpp"

namespace pnr {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double u) { return 0.5 * std::erfc(-u * kInvSqrt2); }
double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

std::vector<double> truncated_poisson(double n_bar, int n_min, int K) {
  std::vector<double> q(static_cast<std::size_t>(K));
  // log-space keeps large n / tiny n_bar finite
  double hi = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double n = static_cast<double>(n_min + k);
    q[k] = n * std::log(n_bar) - n_bar - std::lgamma(n + 1.0);
    hi = std::max(hi, q[k]);
  }
  double sum = 0.0;
  for (double& v : q) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : q) v /= sum;
  return q;
}

// Working parameter vector layout, all in standardized value units:
//   [0] log n_bar, [1] log A, [2] mean_0, [3 .. K+1] log gap_j, [K+2 .. 2K+1] log sigma_k
struct Layout {
  int K;
  int size() const { return 2 * K + 2; }
  int mean0() const { return 2; }
  int gap(int j) const { return 2 + j; }  // j = 1 .. K-1
  int sigma(int k) const { return K + 2 + k; }
};

struct Problem {
  // Standardized edges with -inf / +inf appended at both ends: the two overflow cells
  // observe zero counts, so model mass pushed outside the data range is penalized.
  std::vector<double> edges;
  std::vector<double> counts;
  std::vector<double> inv_w;  // 1 / sqrt(max(count, 1))
  int K;
  int n_min;
  double direction;  // +1: means increase with component index
  double bin_width;
  double range;
  double lo_data;
  double hi_data;

  Layout layout() const { return {K}; }

  void unpack(const Eigen::VectorXd& p, double& n_bar, double& A, std::vector<double>& mu,
              std::vector<double>& sigma) const {
    const Layout L = layout();
    n_bar = std::exp(p(0));
    A = std::exp(p(1));
    mu.resize(K);
    sigma.resize(K);
    mu[0] = p(L.mean0());
    for (int j = 1; j < K; ++j) mu[j] = mu[j - 1] + direction * std::exp(p(L.gap(j)));
    for (int k = 0; k < K; ++k) sigma[k] = std::exp(p(L.sigma(k)));
  }

  // Clamp into the box that keeps the model well defined.
  void clamp(Eigen::VectorXd& p) const {
    const Layout L = layout();
    p(0) = std::clamp(p(0), std::log(1e-3), std::log(100.0));
    const double lo_sigma = std::log(0.25 * bin_width);  // narrower is a delta to the histogram
    const double hi_sigma = std::log(4.0 * range);
    for (int k = 0; k < K; ++k) p(L.sigma(k)) = std::clamp(p(L.sigma(k)), lo_sigma, hi_sigma);
    const double lo_gap = std::log(1e-6 * range);
    const double hi_gap = std::log(4.0 * range);
    for (int j = 1; j < K; ++j) p(L.gap(j)) = std::clamp(p(L.gap(j)), lo_gap, hi_gap);
    const double lo_edge = lo_data - 2.0 * range;
    const double hi_edge = hi_data + 2.0 * range;
    p(L.mean0()) = std::clamp(p(L.mean0()), lo_edge, hi_edge);
  }

  // Weighted residuals and, when jac != nullptr, their Jacobian.
  double evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    const Layout L = layout();
    double n_bar, A;
    std::vector<double> mu, sigma;
    unpack(p, n_bar, A, mu, sigma);
    const auto q = truncated_poisson(n_bar, n_min, K);
    double mean_n = 0.0;
    for (int k = 0; k < K; ++k) mean_n += q[k] * static_cast<double>(n_min + k);

    const std::size_t B = counts.size();
    const std::size_t E = edges.size();
    // Per-edge, per-component cdf and pdf.
    std::vector<double> cdf(E * K), pdf(E * K), upd(E * K);
    for (int k = 0; k < K; ++k) {
      for (std::size_t e = 0; e < E; ++e) {
        const double u = (edges[e] - mu[k]) / sigma[k];
        cdf[e * K + k] = normal_cdf(u);
        if (jac) {
          const double ph = std::isfinite(u) ? normal_pdf(u) : 0.0;
          pdf[e * K + k] = ph;
          upd[e * K + k] = std::isfinite(u) ? u * ph : 0.0;
        }
      }
    }

    r.resize(static_cast<Eigen::Index>(B));
    if (jac) jac->setZero(static_cast<Eigen::Index>(B), L.size());
    std::vector<double> dmu(K);
    double cost = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      double model = 0.0;
      double dn = 0.0;
      for (int k = 0; k < K; ++k) {
        const double mass = cdf[(b + 1) * K + k] - cdf[b * K + k];
        const double a = A * q[k];
        model += a * mass;
        if (jac) {
          dn += a * mass * (static_cast<double>(n_min + k) - mean_n);
          dmu[k] = a / sigma[k] * (pdf[b * K + k] - pdf[(b + 1) * K + k]);
          (*jac)(static_cast<Eigen::Index>(b), L.sigma(k)) = a * (upd[b * K + k] - upd[(b + 1) * K + k]) * inv_w[b];
        }
      }
      const double res = (model - counts[b]) * inv_w[b];
      r(static_cast<Eigen::Index>(b)) = res;
      cost += res * res;
      if (jac) {
        auto row = jac->row(static_cast<Eigen::Index>(b));
        row(0) = dn * inv_w[b];
        row(1) = model * inv_w[b];
        double tail = 0.0;  // sum_{k >= j} dmu[k]
        for (int k = K - 1; k >= 0; --k) {
          tail += dmu[k];
          if (k >= 1) row(L.gap(k)) = direction * std::exp(p(L.gap(k))) * tail * inv_w[b];
        }
        row(L.mean0()) = tail * inv_w[b];
      }
    }
    return cost;
  }
};

struct FitOutcome {
  Eigen::VectorXd params;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

FitOutcome levenberg_marquardt(const Problem& prob, Eigen::VectorXd p, const FitOptions& opt) {
  FitOutcome out;
  prob.clamp(p);
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd J;
  double cost = prob.evaluate(p, r, &J);
  double lambda = 1e-3;
  const int P = static_cast<int>(p.size());

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd diag = JtJ.diagonal();
    const double floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
    for (int i = 0; i < P; ++i) diag(i) = std::max(diag(i), floor);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd M = JtJ;
      M.diagonal() += lambda * diag;
      const Eigen::VectorXd step = M.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        if (lambda > 1e16) break;
        continue;
      }
      Eigen::VectorXd trial = p + step;
      prob.clamp(trial);
      const Eigen::VectorXd actual_step = trial - p;
      const double trial_cost = prob.evaluate(trial, r_trial, nullptr);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double predicted = -(2.0 * actual_step.dot(g) + actual_step.dot(JtJ * actual_step));
        const double actual_rel = (cost - trial_cost) / std::max(cost, 1e-300);
        const double pred_rel = std::abs(predicted) / std::max(cost, 1e-300);
        p = trial;
        cost = prob.evaluate(p, r, &J);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (actual_rel < opt.tolerance && pred_rel < opt.tolerance) {
          out.converged = true;
        }
      } else {
        lambda *= 4.0;
        if (lambda > 1e16) break;
      }
    }
    if (!accepted) {
      out.converged = true;  // no descent direction left: stationary point
      break;
    }
    if (out.converged) {
      ++it;
      break;
    }
  }
  out.params = p;
  out.cost = cost;
  out.iterations = it;
  return out;
}

std::vector<double> smoothed_counts(const Hist1D& hist) {
  // Gaussian kernel, bandwidth one bin.
  const std::size_t B = hist.bins();
  const int reach = 4;
  double kern[2 * reach + 1];
  for (int j = -reach; j <= reach; ++j) kern[j + reach] = std::exp(-0.5 * j * j);
  std::vector<double> out(B, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (int j = -reach; j <= reach; ++j) {
      const auto idx = static_cast<std::ptrdiff_t>(i) + j;
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(B)) continue;
      acc += kern[j + reach] * hist.counts[static_cast<std::size_t>(idx)];
      wsum += kern[j + reach];
    }
    out[i] = acc / wsum;
  }
  return out;
}

double histogram_sigma(const Hist1D& hist) {
  double n = 0.0, s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    const double c = hist.center(i);
    n += hist.counts[i];
    s += hist.counts[i] * c;
    ss += hist.counts[i] * c * c;
  }
  if (n <= 0.0) return hist.width();
  const double mean = s / n;
  return std::sqrt(std::max(ss / n - mean * mean, hist.width() * hist.width() / 12.0));
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> PoissonMixture::priors() const { return truncated_poisson(n_bar, n_min, K); }

void PoissonMixture::refresh() {
  const auto q = priors();
  amplitudes.resize(K);
  for (int k = 0; k < K; ++k) amplitudes[k] = A * q[k];
  unresolved.assign(K > 1 ? K - 1 : 0, false);
  overlap_warning = false;
  for (int k = 0; k + 1 < K; ++k) {
    const bool flag = std::abs(means[k + 1] - means[k]) < kOverlapFactor * (sigmas[k] + sigmas[k + 1]);
    unresolved[k] = flag;
    overlap_warning = overlap_warning || flag;
  }
}

void PoissonMixture::validate() const {
  if (K < 1) throw InvalidArgument("mixture needs at least one component");
  if (static_cast<int>(means.size()) != K || static_cast<int>(sigmas.size()) != K)
    throw InvalidArgument("mixture parameter arrays do not match K");
  if (!(n_bar > 0.0) || !std::isfinite(n_bar)) throw InvalidArgument("mixture n_bar must be positive");
  if (n_min < 0) throw InvalidArgument("mixture n_min must be >= 0");
  for (double s : sigmas)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("mixture sigmas must be positive");
  for (double m : means)
    if (!std::isfinite(m)) throw InvalidArgument("mixture means must be finite");
  if (K > 1) {
    const bool up = means[1] > means[0];
    for (int k = 0; k + 1 < K; ++k) {
      if (up ? !(means[k + 1] > means[k]) : !(means[k + 1] < means[k]))
        throw InvalidArgument("mixture means must be strictly monotone");
    }
  }
}

int PoissonMixture::map_component(double s) const {
  const auto q = priors();
  int best = 0;
  double best_log = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double u = (s - means[k]) / sigmas[k];
    const double lp = std::log(q[k]) - std::log(sigmas[k]) - 0.5 * u * u;
    if (lp > best_log) {
      best_log = lp;
      best = k;
    }
  }
  return best;
}

std::vector<double> mixture_bin_counts(const PoissonMixture& mix, std::span<const double> edges) {
  const auto q = mix.priors();
  std::vector<double> out(edges.size() > 0 ? edges.size() - 1 : 0, 0.0);
  for (int k = 0; k < mix.K; ++k) {
    for (std::size_t b = 0; b < out.size(); ++b) {
      const double lo = normal_cdf((edges[b] - mix.means[k]) / mix.sigmas[k]);
      const double hi = normal_cdf((edges[b + 1] - mix.means[k]) / mix.sigmas[k]);
      out[b] += mix.A * q[k] * (hi - lo);
    }
  }
  return out;
}

double mixture_density(const PoissonMixture& mix, double s) {
  const auto q = mix.priors();
  double d = 0.0;
  for (int k = 0; k < mix.K; ++k) d += mix.A * q[k] * normal_pdf((s - mix.means[k]) / mix.sigmas[k]) / mix.sigmas[k];
  return d;
}

double match_nbar(std::span<const double> masses, int n_min) {
  const int K = static_cast<int>(masses.size());
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (K < 2 || !(total > 0.0)) return 1.0;
  double observed = 0.0;
  for (int k = 0; k < K; ++k) observed += masses[k] * static_cast<double>(n_min + k);
  observed /= total;
  // E_q[n] is increasing in log n_bar; bisect.
  double lo = std::log(1e-3), hi = std::log(100.0);
  auto expected = [&](double log_nbar) {
    const auto q = truncated_poisson(std::exp(log_nbar), n_min, K);
    double e = 0.0;
    for (int k = 0; k < K; ++k) e += q[k] * static_cast<double>(n_min + k);
    return e;
  };
  if (observed <= expected(lo)) return std::exp(lo);
  if (observed >= expected(hi)) return std::exp(hi);
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < observed ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

std::vector<double> seed_means(const Hist1D& hist, int K, bool ascending) {
  const std::size_t B = hist.bins();
  if (B == 0 || K < 1) throw InvalidArgument("seed_means needs a histogram and K >= 1");
  const auto sm = smoothed_counts(hist);
  const double top = *std::max_element(sm.begin(), sm.end());

  struct Peak {
    double pos;
    double height;
  };
  std::vector<Peak> peaks;
  for (std::size_t i = 0; i < B; ++i) {
    const double left = i > 0 ? sm[i - 1] : -1.0;
    const double right = i + 1 < B ? sm[i + 1] : -1.0;
    if (!(sm[i] > left && sm[i] >= right)) continue;
    if (sm[i] < 0.02 * top) continue;
    double offset = 0.0;
    if (i > 0 && i + 1 < B) {
      const double denom = sm[i - 1] - 2.0 * sm[i] + sm[i + 1];
      if (denom < 0.0) offset = std::clamp(0.5 * (sm[i - 1] - sm[i + 1]) / denom, -0.5, 0.5);
    }
    peaks.push_back({hist.center(i) + offset * hist.width(), sm[i]});
  }
  if (peaks.empty()) peaks.push_back({hist.center(static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin())), top});

  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
  if (static_cast<int>(peaks.size()) > K) peaks.resize(static_cast<std::size_t>(K));
  std::vector<double> pos;
  for (const auto& p : peaks) pos.push_back(p.pos);
  std::sort(pos.begin(), pos.end());
  if (!ascending) std::reverse(pos.begin(), pos.end());

  const double range = hist.edges.back() - hist.edges.front();
  const double dir = ascending ? 1.0 : -1.0;
  const std::size_t m = pos.size();
  double gap = m >= 2 ? std::abs(pos[m - 1] - pos[m - 2]) : range / (2.0 * K);
  double ratio = 1.0;
  if (m >= 3) {
    const double prev = std::abs(pos[m - 2] - pos[m - 3]);
    if (prev > 0.0) ratio = std::clamp(gap / prev, 0.5, 1.0);
  }
  const double min_gap = 1e-3 * hist.width();
  while (static_cast<int>(pos.size()) < K) {
    gap = std::max(gap * ratio, min_gap);
    pos.push_back(pos.back() + dir * gap);
  }
  return pos;
}

PoissonMixture fit_mixture_binned(const Hist1D& hist, int K, int n_min, const MixtureInit& init,
                                  const FitOptions& options) {
  if (K < 1) throw InvalidArgument("fit_mixture: K must be >= 1");
  if (n_min < 0) throw InvalidArgument("fit_mixture: n_min must be >= 0");
  if (hist.bins() < 2) throw InvalidArgument("fit_mixture: histogram needs at least two bins");
  const double total = std::accumulate(hist.counts.begin(), hist.counts.end(), 0.0);
  if (total < 10.0 * K)
    throw InvalidArgument("fit_mixture: need at least 10 values per component");
  if (!init.means.empty() && static_cast<int>(init.means.size()) != K)
    throw InvalidArgument("fit_mixture: mean seeds must have K entries");
  if (!init.sigmas.empty() && static_cast<int>(init.sigmas.size()) != K)
    throw InvalidArgument("fit_mixture: sigma seeds must have K entries");

  // Standardize: edges map onto [-0.5, 0.5].
  const double center = 0.5 * (hist.edges.front() + hist.edges.back());
  const double scale = hist.edges.back() - hist.edges.front();
  if (!(scale > 0.0)) throw DegenerateData("fit_mixture: histogram has zero width");
  auto to_z = [&](double v) { return (v - center) / scale; };

  Hist1D zh;
  zh.counts = hist.counts;
  zh.edges.resize(hist.edges.size());
  for (std::size_t i = 0; i < hist.edges.size(); ++i) zh.edges[i] = to_z(hist.edges[i]);

  Problem prob;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  prob.edges.push_back(-kInf);
  prob.edges.insert(prob.edges.end(), zh.edges.begin(), zh.edges.end());
  prob.edges.push_back(kInf);
  prob.counts.push_back(0.0);
  prob.counts.insert(prob.counts.end(), zh.counts.begin(), zh.counts.end());
  prob.counts.push_back(0.0);
  prob.inv_w.resize(prob.counts.size());
  for (std::size_t b = 0; b < prob.counts.size(); ++b) prob.inv_w[b] = 1.0 / std::sqrt(std::max(prob.counts[b], 1.0));
  prob.K = K;
  prob.n_min = n_min;
  prob.bin_width = zh.width();
  prob.lo_data = zh.edges.front();
  prob.hi_data = zh.edges.back();
  prob.range = prob.hi_data - prob.lo_data;
  const Layout L{K};

  std::vector<bool> orientations;
  if (!init.means.empty() && K > 1) {
    orientations.push_back(init.means[1] > init.means[0]);
  } else {
    orientations = {true, false};
  }

  FitOutcome best;
  double best_dir = 1.0;
  bool have_best = false;
  for (bool ascending : orientations) {
    std::vector<double> mu;
    if (!init.means.empty()) {
      for (double m : init.means) mu.push_back(to_z(m));
    } else {
      mu = seed_means(zh, K, ascending);
    }
    prob.direction = ascending ? 1.0 : -1.0;

    std::vector<double> sig;
    if (!init.sigmas.empty()) {
      for (double s : init.sigmas) sig.push_back(s / scale);
    } else {
      double s0;
      if (K == 1) {
        s0 = histogram_sigma(zh);
      } else {
        std::vector<double> gaps;
        for (int k = 0; k + 1 < K; ++k) gaps.push_back(std::abs(mu[k + 1] - mu[k]));
        // A quarter of the lower-median gap: wide seeds let LM merge neighbours before they separate.
        const std::size_t mid = (gaps.size() - 1) / 2;
        std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(mid), gaps.end());
        s0 = 0.25 * gaps[mid];
      }
      s0 = std::max(s0, 0.5 * zh.width());
      sig.assign(static_cast<std::size_t>(K), s0);
    }

    double nbar0;
    if (init.n_bar) {
      nbar0 = *init.n_bar;
    } else {
      std::vector<double> masses(static_cast<std::size_t>(K), 0.0);
      for (std::size_t b = 0; b < zh.bins(); ++b) {
        const double c = zh.center(b);
        int nearest = 0;
        for (int k = 1; k < K; ++k)
          if (std::abs(c - mu[k]) < std::abs(c - mu[nearest])) nearest = k;
        masses[nearest] += zh.counts[b];
      }
      nbar0 = match_nbar(masses, n_min);
    }
    if (!(nbar0 > 0.0)) nbar0 = 1.0;

    Eigen::VectorXd p(L.size());
    p(0) = std::log(nbar0);
    p(1) = std::log(total);
    p(L.mean0()) = mu[0];
    for (int j = 1; j < K; ++j) {
      const double g = prob.direction * (mu[j] - mu[j - 1]);
      p(L.gap(j)) = std::log(std::max(g, 1e-3 * zh.width()));
    }
    for (int k = 0; k < K; ++k) p(L.sigma(k)) = std::log(sig[k]);

    auto outcome = levenberg_marquardt(prob, p, options);
    const bool better = !have_best || (outcome.converged && !best.converged) ||
                        (outcome.converged == best.converged && outcome.cost < best.cost);
    if (better) {
      best = std::move(outcome);
      best_dir = prob.direction;
      have_best = true;
    }
  }

  prob.direction = best_dir;
  double n_bar, A;
  std::vector<double> mu, sigma;
  prob.unpack(best.params, n_bar, A, mu, sigma);

  PoissonMixture mix;
  mix.n_bar = n_bar;
  mix.n_min = n_min;
  mix.K = K;
  mix.A = A;
  mix.iterations = best.iterations;
  for (int k = 0; k < K; ++k) {
    mix.means.push_back(center + scale * mu[k]);
    mix.sigmas.push_back(scale * sigma[k]);
  }
  const double dof = static_cast<double>(prob.counts.size()) - static_cast<double>(L.size());
  mix.fit_residual = dof > 0.0 ? best.cost / dof : best.cost;
  mix.refresh();

  if (!best.converged)
    throw FitFailure("mixture fit did not converge within " + std::to_string(options.max_iterations) + " iterations",
                     mix);
  return mix;
}

PoissonMixture fit_mixture(std::span<const double> values, int K, int n_min, const MixtureInit& init,
                           const FitOptions& options) {
  if (K < 1) throw InvalidArgument("fit_mixture: K must be >= 1");
  if (values.size() < static_cast<std::size_t>(10 * K))
    throw InvalidArgument("fit_mixture: need at least 10 values per component");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("fit_mixture: non-finite value");
  const auto hist = fit_histogram(values, options.bins);
  return fit_mixture_binned(hist, K, n_min, init, options);
}

}  // namespace pnr
