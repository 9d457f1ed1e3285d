#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "narrowlab/linforms.hpp"
#include "narrowlab/majorant.hpp"

namespace narrowlab {

/// Axis-aligned integer box prod [lo_i, hi_i].
class BoxRegion {
 public:
  BoxRegion(std::vector<std::int64_t> lo, std::vector<std::int64_t> hi);
  /// [-S, S]^d, inradius S.
  static BoxRegion centered(std::size_t d, std::int64_t S);

  std::size_t dim() const noexcept { return lo_.size(); }
  const std::vector<std::int64_t>& lo() const noexcept { return lo_; }
  const std::vector<std::int64_t>& hi() const noexcept { return hi_; }
  std::uint64_t side(std::size_t i) const { return static_cast<std::uint64_t>(hi_[i] - lo_[i]) + 1; }
  /// Half the minimum side length hi - lo.
  double inradius() const;
  /// Number of integer points; saturates at UINT64_MAX.
  std::uint64_t points() const;

 private:
  std::vector<std::int64_t> lo_, hi_;
};

/// The weight nu on Z/N'Z: a majorant table, the random sparse model, or 1.
class WeightModel {
 public:
  enum class Kind { table, random, constant };

  static WeightModel from_table(const MajorantTable& table);
  /// nu(n) = 1/alpha with probability alpha, else 0; the draw for n is a hash of (seed, n),
  /// so every evaluation of the same residue sees the same value.
  static WeightModel random(double alpha, std::uint64_t seed, std::uint64_t modulus);
  static WeightModel constant(std::uint64_t modulus);

  Kind kind() const noexcept { return kind_; }
  std::uint64_t modulus() const noexcept { return modulus_; }
  double alpha() const noexcept { return alpha_; }
  double operator()(std::uint64_t n) const;

 private:
  Kind kind_ = Kind::constant;
  std::uint64_t modulus_ = 1;
  const MajorantTable* table_ = nullptr;
  double alpha_ = 1.0;
  std::uint64_t seed_ = 0;
  std::uint64_t threshold_ = 0;
};

/// e_i in {0, 1} per form; an empty pattern means all ones.
using ExponentPattern = std::vector<std::uint8_t>;

struct LfcEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  unsigned workers = 1;
};

/// Monte Carlo over uniform (n, x) in Z/N'Z x (box cap Z^d) of prod nu(n + psi_i(x))^{e_i}.
/// Forms may repeat. Samples are drawn in fixed blocks, each with its own stream
/// derived from the seed, and reduced in block order: the result depends on the seed only.
LfcEstimate lfc_average_mc(const WeightModel& model, std::span<const LinearForm> forms, const ExponentPattern& e,
                           const BoxRegion& box, std::uint64_t samples, std::uint64_t seed, unsigned workers = 1);

/// Exact average. Table model: full enumeration (|box| N' t <= cap). Random model:
/// the expectation over the randomness, alpha^{#distinct - t} per point. Constant: 1.
double lfc_average_exact(const WeightModel& model, std::span<const LinearForm> forms, const ExponentPattern& e,
                         const BoxRegion& box, std::uint64_t cap = 2'000'000'000);

struct DeviationTerm {
  std::string flat;          ///< human-readable equations
  std::size_t codim = 0;
  std::size_t merges = 0;    ///< t - |pi_V|
  Rational ratio;            ///< merges / codim
  double probability = 0.0;  ///< share of box points whose minimal flat is exactly V
  double contribution = 0.0; ///< probability * (alpha^{-merges} - 1)
  bool approximate = false;  ///< count scaled from a smaller reference box
};

struct DeviationReport {
  double S = 0.0;
  double alpha = 0.0;
  double deviation = 0.0;  ///< E_x alpha^{|pi(x)| - t} - 1 over [-S, S]^d
  std::vector<DeviationTerm> terms;  ///< non-trivial flats, sorted by contribution, largest first
  bool approximate = false;
};

struct DeviationOptions {
  std::size_t max_subspaces = 200'000;
  /// Reference counts for codim >= 2 flats are exact at the largest S with
  /// (2S+1)^{dim V - 1} below this; larger boxes scale the reference by S^{-codim}.
  std::uint64_t enumeration_budget = 100'000;
  /// Per-evaluation budget below which a codim >= 2 flat is counted directly.
  std::uint64_t call_budget = 5'000;
  /// Threads for the reference counts; 0 uses the hardware concurrency.
  unsigned workers = 0;
};

/// Random-model deviation from 1 over the box [-S, S]^d, summed over the closure lattice.
/// Codim-1 counts are exact (value-distribution convolution); higher codims are
/// enumerated exactly when small and otherwise scaled from a reference box.
DeviationReport random_model_deviation(const LinearSystem& sys, double alpha, std::int64_t S,
                                       const DeviationOptions& options = {});

/// Reusable evaluator: builds the closure lattice and containment data once.
class DeviationModel {
 public:
  explicit DeviationModel(const LinearSystem& sys, const DeviationOptions& options = {});
  ~DeviationModel();
  DeviationModel(DeviationModel&&) noexcept;
  DeviationModel& operator=(DeviationModel&&) noexcept;

  DeviationReport evaluate(double alpha, std::int64_t S) const;
  std::size_t lattice_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Number of x in box with a . x + c = 0, by convolving the value distributions.
/// Returned as a fraction of the box's points.
double hyperplane_fraction(std::span<const std::int64_t> a, std::int64_t c, const BoxRegion& box);

struct ThresholdPoint {
  double alpha = 0.0;
  double S_star = 0.0;
  std::size_t dominant_codim = 0;
  Rational dominant_ratio;
  double deviation = 0.0;  ///< at the integer S just above S_star
  bool approximate = false;
};

struct ThresholdFit {
  std::vector<ThresholdPoint> points;
  double slope = 0.0;  ///< least squares of log S* against log(1/alpha)
  double intercept = 0.0;
};

/// S*(alpha): where the deviation crosses 1, by bracketing and bisection on integer S,
/// log-interpolated between the bracketing integers.
ThresholdPoint width_threshold(const DeviationModel& model, double alpha);
ThresholdFit width_threshold_fit(const LinearSystem& sys, std::span<const double> alphas,
                                 const DeviationOptions& options = {});

}  // namespace narrowlab
