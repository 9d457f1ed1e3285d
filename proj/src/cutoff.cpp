#include "narrowlab/cutoff.hpp"

#include <algorithm>
#include <array>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "narrowlab/errors.hpp"

namespace narrowlab {

namespace {

using boost::math::constants::pi;
using cplx = std::complex<double>;

double unit_bump(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

double unit_bump_deriv(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double s = 1.0 - x * x;
  return unit_bump(x) * (-2.0 * x / (s * s));
}

template <class F>
double integrate(F&& f, double a, double b, const QuadratureConfig& cfg, double* err = nullptr) {
  double error = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, cfg.max_depth,
                                                                                 cfg.abs_tol, &error);
  if (err) *err = error;
  return v;
}

// Composite 8-point Gauss-Legendre nodes on [-T, T] with panels of width h.
struct Grid {
  std::vector<double> t;
  std::vector<double> w;
};

Grid legendre_grid(double T, double h) {
  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& xs = GL::abscissa();
  const auto& ws = GL::weights();
  std::vector<double> xi, wi;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xi.push_back(-xs[i]);
    wi.push_back(ws[i]);
    xi.push_back(xs[i]);
    wi.push_back(ws[i]);
  }
  const auto panels = static_cast<long>(std::llround(2.0 * T / h));
  Grid g;
  for (long k = 0; k < panels; ++k) {
    const double lo = -T + static_cast<double>(k) * h;
    const double mid = lo + h / 2;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      g.t.push_back(mid + h / 2 * xi[i]);
      g.w.push_back(h / 2 * wi[i]);
    }
  }
  return g;
}

struct TruncatedSums {
  cplx full;  // over [-T, T]
  cplx half;  // over [-T/2, T/2]
  cplx quarter;
};

TruncatedSums weighted_sums(const CutoffSpec& spec, int m, double T, double h, const QuadratureConfig& cfg) {
  const Grid g = legendre_grid(T, h);
  const std::size_t n = g.t.size();
  std::vector<cplx> a(n), wpsi(n);
  std::vector<int> level(n);  // 0: |t|<=T/4, 1: |t|<=T/2, 2: rest
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = cplx(1.0, g.t[i]);
    wpsi[i] = g.w[i] * fourier_psi(spec, g.t[i], cfg);
    const double at = std::abs(g.t[i]);
    level[i] = at <= T / 4 ? 0 : (at <= T / 2 ? 1 : 2);
  }
  std::array<cplx, 3> acc{};  // acc[l] collects terms whose largest level is l
  if (m == 1) {
    for (std::size_t i = 0; i < n; ++i) acc[level[i]] += wpsi[i] * a[i];
  } else if (m == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const cplx term = wpsi[i] * wpsi[j] * (a[i] * a[j] / (a[i] + a[j]));
        acc[std::max(level[i], level[j])] += term;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const cplx aij = a[i] + a[j];
        const cplx pij = wpsi[i] * wpsi[j] * a[i] * a[j];
        const int lij = std::max(level[i], level[j]);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx num = pij * a[k] * (aij + a[k]);
          const cplx den = aij * (a[i] + a[k]) * (a[j] + a[k]);
          acc[std::max(lij, level[k])] += wpsi[k] * num / den;
        }
      }
    }
  }
  return {acc[0] + acc[1] + acc[2], acc[0] + acc[1], acc[0]};
}

}  // namespace

std::string_view to_string(CutoffKind kind) { return kind == CutoffKind::cosine ? "cosine" : "bump"; }

std::string_view to_string(Normalization norm) {
  return norm == Normalization::half_line ? "half-line" : "full-line";
}

CutoffKind parse_cutoff_kind(std::string_view name) {
  if (name == "cosine") return CutoffKind::cosine;
  if (name == "bump") return CutoffKind::bump;
  throw DomainError("unknown cutoff kind '" + std::string(name) + "' (expected cosine or bump)");
}

Normalization parse_normalization(std::string_view name) {
  if (name == "half-line" || name == "half") return Normalization::half_line;
  if (name == "full-line" || name == "full") return Normalization::full_line;
  throw DomainError("unknown normalization '" + std::string(name) + "' (expected half-line or full-line)");
}

CutoffSpec::CutoffSpec(CutoffKind kind, double norm_constant, Normalization norm)
    : kind_(kind), norm_constant_(norm_constant), normalization_(norm) {
  if (!(norm_constant > 0.0) || !std::isfinite(norm_constant)) {
    throw DomainError("cutoff normalization constant must be positive and finite");
  }
}

double CutoffSpec::value(double x) const noexcept {
  if (!(std::abs(x) < 1.0)) return 0.0;
  if (kind_ == CutoffKind::cosine) return norm_constant_ * std::cos(pi<double>() * x / 2);
  return norm_constant_ * unit_bump(x);
}

double CutoffSpec::deriv(double x) const noexcept {
  if (!(std::abs(x) < 1.0)) return 0.0;
  if (kind_ == CutoffKind::cosine) return -norm_constant_ * pi<double>() / 2 * std::sin(pi<double>() * x / 2);
  return norm_constant_ * unit_bump_deriv(x);
}

CutoffSpec make_cutoff(CutoffKind kind, Normalization norm) {
  // Energy of the unnormalized profile over [0, 1]; the profiles are even.
  double half_energy = 0.0;
  if (kind == CutoffKind::cosine) {
    half_energy = pi<double>() * pi<double>() / 8;  // (pi/2)^2 * int_0^1 sin^2(pi x/2) dx
  } else {
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-15;
    half_energy = integrate([](double x) { return unit_bump_deriv(x) * unit_bump_deriv(x); }, 0.0, 1.0, cfg);
  }
  const double energy = norm == Normalization::half_line ? half_energy : 2 * half_energy;
  return CutoffSpec(kind, 1.0 / std::sqrt(energy), norm);
}

double dirichlet_energy(const CutoffSpec& spec, double lo, double hi, const QuadratureConfig& cfg) {
  lo = std::max(lo, -1.0);
  hi = std::min(hi, 1.0);
  if (hi <= lo) return 0.0;
  auto f = [&](double x) {
    const double d = spec.deriv(x);
    return d * d;
  };
  // split at 0 so each piece is smooth
  if (lo < 0.0 && hi > 0.0) return integrate(f, lo, 0.0, cfg) + integrate(f, 0.0, hi, cfg);
  return integrate(f, lo, hi, cfg);
}

double full_line_residual(const CutoffSpec& spec, const QuadratureConfig& cfg) {
  return std::abs(dirichlet_energy(spec, -1.0, 1.0, cfg) - 1.0);
}

std::complex<double> fourier_psi(const CutoffSpec& spec, double t, const QuadratureConfig&) {
  // The integrand is smooth on [-1, 1] and oscillates |t|/pi times, so composite
  // Gauss-Legendre with O(|t|) panels converges fast; 10 vs 20 nodes bounds the error.
  using G20 = boost::math::quadrature::gauss<double, 20>;
  using G10 = boost::math::quadrature::gauss<double, 10>;
  const int panels = 16 + static_cast<int>(std::ceil(std::abs(t) / 2));
  const double h = 2.0 / panels;
  auto panel_sum = [&](const auto& xs, const auto& ws, double mid) {
    cplx acc{};
    auto at = [&](double x, double w) {
      const double g = std::exp(x) * spec.value(x) * w;
      acc += cplx(g * std::cos(x * t), g * std::sin(x * t));
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] == 0.0) {
        at(mid, ws[i]);
      } else {
        at(mid - h / 2 * xs[i], ws[i]);
        at(mid + h / 2 * xs[i], ws[i]);
      }
    }
    return acc * (h / 2);
  };
  cplx fine{}, coarse{};
  for (int k = 0; k < panels; ++k) {
    const double mid = -1.0 + (k + 0.5) * h;
    fine += panel_sum(G20::abscissa(), G20::weights(), mid);
    coarse += panel_sum(G10::abscissa(), G10::weights(), mid);
  }
  const double residual = std::abs(fine - coarse);
  if (!std::isfinite(fine.real()) || !std::isfinite(fine.imag()) || residual > 1e-6) {
    throw NumericError("fourier_psi did not converge at t = " + std::to_string(t), residual);
  }
  return fine / (2 * pi<double>());
}

double default_truncation(CutoffKind kind) { return kind == CutoffKind::cosine ? 200.0 : 50.0; }

DecayFit fit_psi_decay(const CutoffSpec& spec, double t_lo, double t_hi, const QuadratureConfig& cfg) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("decay fit needs 0 < t_lo < t_hi");
  // Envelope samples: maxima of |psi| over windows of one period 2*pi.
  const double window = 2 * pi<double>();
  std::vector<double> lx, ly;
  std::vector<std::pair<double, double>> samples;
  for (double a = t_lo; a < t_hi; a += window) {
    const double b = std::min(a + window, t_hi);
    double best = 0.0, best_t = a;
    for (double t = a; t <= b; t += 0.05) {
      const double v = std::abs(fourier_psi(spec, t, cfg));
      samples.emplace_back(t, v);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    if (best > 0.0) {
      lx.push_back(std::log(best_t));
      ly.push_back(std::log(best));
    }
  }
  DecayFit fit;
  if (lx.size() < 2) return fit;
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  fit.exponent = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  for (auto [t, v] : samples) fit.constant = std::max(fit.constant, v * std::pow(t, fit.exponent));
  return fit;
}

SieveFactor sieve_factor(const CutoffSpec& spec, int m, const QuadratureConfig& cfg) {
  if (m < 1) throw DomainError("sieve factor index m must be positive");
  if (m > 3) throw UnsupportedError("sieve factor c_{chi,m} with m = " + std::to_string(m) + " > 3 is not supported");
  double T = cfg.truncation > 0 ? cfg.truncation : default_truncation(spec.kind());
  double h = cfg.panel_width;
  if (m == 3) {
    T = cfg.truncation_m3 > 0 ? cfg.truncation_m3 : 20.0;
    h = cfg.panel_width_m3;
  }
  if (!(T > 0.0) || !(h > 0.0)) throw DomainError("truncation and panel width must be positive");
  // panels must align with T/4 so the nested truncations share nodes
  h = (T / 4) / std::max(1.0, std::round((T / 4) / h));

  const DecayFit decay = fit_psi_decay(spec, T / 4, T, cfg);
  if (decay.exponent <= 1.0) {
    throw NumericError("psi decays too slowly (fitted exponent " + std::to_string(decay.exponent) +
                           "); truncated sieve-factor integral diverges",
                       decay.exponent);
  }

  const TruncatedSums sums = weighted_sums(spec, m, T, h, cfg);
  SieveFactor out;
  out.m = m;
  out.truncation = T;
  out.decay_exponent = decay.exponent;
  out.raw_value = sums.full.real();
  out.half_value = sums.half.real();
  out.imag_residual = std::abs(sums.full.imag());
  if (out.imag_residual > cfg.imag_tol) {
    throw NumericError("imaginary part of c_{chi," + std::to_string(m) + "} is " +
                           std::to_string(out.imag_residual),
                       out.imag_residual);
  }

  if (decay.exponent < 3.0) {
    // truncation error ~ T^{-q} with q = p - 1 when |psi| ~ t^{-p}
    const double q = decay.exponent - 1.0;
    const double f = std::pow(2.0, q) - 1.0;
    const double e_full = out.raw_value + (out.raw_value - out.half_value) / f;
    const double e_half = out.half_value + (out.half_value - sums.quarter.real()) / f;
    out.value = e_full;
    out.tail_estimate = std::abs(e_full - e_half);
    out.extrapolated = true;
  } else {
    out.value = out.raw_value;
    out.tail_estimate = std::abs(out.raw_value - out.half_value);
  }
  return out;
}

double sieve_factor_vector(const CutoffSpec& spec, std::span<const std::int64_t> h, const QuadratureConfig& cfg) {
  if (h.empty()) throw DomainError("shift vector must be non-empty");
  std::map<std::int64_t, int> mult;
  for (auto v : h) ++mult[v];
  for (auto [v, m] : mult) {
    if (m > 3) {
      throw UnsupportedError("multiplicity " + std::to_string(m) + " of shift " + std::to_string(v) +
                             " exceeds the supported sieve factors (m <= 3)");
    }
  }
  std::map<int, double> factor;
  double prod = 1.0;
  for (auto [v, m] : mult) {
    auto it = factor.find(m);
    if (it == factor.end()) it = factor.emplace(m, sieve_factor(spec, m, cfg).value).first;
    prod *= it->second;
  }
  return prod;
}

}  // namespace narrowlab
