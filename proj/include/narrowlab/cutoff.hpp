#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace narrowlab {

enum class CutoffKind { cosine, bump };

/// Which Dirichlet energy is pinned to 1.
///
/// half_line: int_0^inf |chi'|^2 = 1. This is the normalization under which the
///   sieve factor c_{chi,2} equals 1 (it evaluates to int_0^inf |chi'|^2).
/// full_line: int_R |chi'|^2 = 1 literally; for an even cutoff c_{chi,2} is then 1/2.
enum class Normalization { half_line, full_line };

std::string_view to_string(CutoffKind kind);
std::string_view to_string(Normalization norm);
CutoffKind parse_cutoff_kind(std::string_view name);
Normalization parse_normalization(std::string_view name);

struct QuadratureConfig {
  double abs_tol = 1e-13;
  unsigned max_depth = 15;
  /// Truncation T of the t-integrals; 0 selects the kind default (cosine 200, bump 50).
  double truncation = 0.0;
  /// Composite Gauss-Legendre panels on [-T, T].
  double panel_width = 0.5;
  /// Truncation used for the three-fold integral (m = 3); 0 selects 20.
  double truncation_m3 = 0.0;
  double panel_width_m3 = 1.0;
  /// Largest acceptable |Im c_{chi,m}|.
  double imag_tol = 1e-6;
};

/// Smooth cutoff supported on [-1, 1]: cosine c*cos(pi x/2) or bump c*exp(-1/(1-x^2)).
class CutoffSpec {
 public:
  CutoffSpec(CutoffKind kind, double norm_constant, Normalization norm = Normalization::half_line);

  CutoffKind kind() const noexcept { return kind_; }
  double norm_constant() const noexcept { return norm_constant_; }
  Normalization normalization() const noexcept { return normalization_; }

  double value(double x) const noexcept;
  double deriv(double x) const noexcept;
  double at_zero() const noexcept { return value(0.0); }

 private:
  CutoffKind kind_;
  double norm_constant_;
  Normalization normalization_;
};

CutoffSpec make_cutoff(CutoffKind kind, Normalization norm = Normalization::half_line);

inline double chi_value(const CutoffSpec& spec, double x) { return spec.value(x); }
inline double chi_deriv(const CutoffSpec& spec, double x) { return spec.deriv(x); }

/// int_lo^hi |chi'(x)|^2 dx by adaptive Gauss-Kronrod.
double dirichlet_energy(const CutoffSpec& spec, double lo, double hi, const QuadratureConfig& cfg = {});

/// |int_R |chi'|^2 - 1|, the residual of the literal full-line normalization.
double full_line_residual(const CutoffSpec& spec, const QuadratureConfig& cfg = {});

/// psi(t) = (1/2pi) int e^x chi(x) e^{ixt} dx, the inverse of e^x chi(x) = int psi(t) e^{-ixt} dt.
std::complex<double> fourier_psi(const CutoffSpec& spec, double t, const QuadratureConfig& cfg = {});

double default_truncation(CutoffKind kind);

struct SieveFactor {
  int m = 0;
  double value = 0.0;           ///< extrapolated real part
  double raw_value = 0.0;       ///< real part of the integral truncated at T
  double half_value = 0.0;      ///< real part truncated at T/2
  double imag_residual = 0.0;   ///< |Im| of the truncated integral
  double tail_estimate = 0.0;   ///< |value - raw_value| + |raw - half| / 2^q style bound
  double truncation = 0.0;
  double decay_exponent = 0.0;  ///< fitted p in |psi(t)| ~ C t^{-p}
  bool extrapolated = false;
};

/// c_{chi,m} for m in {1, 2, 3}. The t-integrals are truncated at T and, when psi
/// decays algebraically, Richardson-extrapolated from T/2 and T using the fitted decay.
SieveFactor sieve_factor(const CutoffSpec& spec, int m, const QuadratureConfig& cfg = {});

/// c_chi(h) = prod over distinct values of c_{chi, multiplicity}.
double sieve_factor_vector(const CutoffSpec& spec, std::span<const std::int64_t> h,
                           const QuadratureConfig& cfg = {});

/// Fitted envelope |psi(t)| <= C t^{-p} on [t_lo, t_hi] (sampled on a fine grid).
struct DecayFit {
  double constant = 0.0;
  double exponent = 0.0;
};
DecayFit fit_psi_decay(const CutoffSpec& spec, double t_lo, double t_hi, const QuadratureConfig& cfg = {});

}  // namespace narrowlab
