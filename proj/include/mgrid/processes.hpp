#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgrid/errors.hpp"
#include "mgrid/random.hpp"

namespace mgrid {

/// Row-major dense matrix of transition probabilities.
using Matrix = std::vector<std::vector<double>>;

inline constexpr double kRowSumTolerance = 1e-12;

/// Throws ConfigError unless `m` is square, non-negative and row-stochastic.
inline void validate_stochastic(const Matrix& m, std::string_view what) {
  if (m.empty()) throw ConfigError(std::string(what) + ": empty matrix");
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& row = m[i];
    if (row.size() != m.size())
      throw ConfigError(std::string(what) + "[" + std::to_string(i) + "]: matrix is not square");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0))
        throw ConfigError(std::string(what) + "[" + std::to_string(i) + "]: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw ConfigError(std::string(what) + "[" + std::to_string(i) + "]: row sums to " +
                        std::to_string(sum));
  }
}

/// Each row is n independent uniform(0,1) draws divided by their sum.
inline Matrix random_stochastic_matrix(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("random_stochastic_matrix: n must be >= 1");
  Rng rng(seed);
  Matrix m(n, std::vector<double>(n));
  for (auto& row : m) {
    double sum = 0.0;
    while (sum <= 0.0) {
      sum = 0.0;
      for (auto& p : row) {
        p = uniform01(rng);
        sum += p;
      }
    }
    for (auto& p : row) p /= sum;
  }
  return m;
}

/// Inverse-CDF draw from a discrete distribution given u in [0,1). Rounding
/// slack in the cumulative sum falls on the last index with positive mass.
inline std::size_t sample_discrete(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] <= 0.0) continue;
    cumulative += probabilities[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  return last_positive;
}

/// Time-homogeneous Markov chain over a finite alphabet of integer values.
class FiniteMarkovChain {
 public:
  FiniteMarkovChain(std::vector<int> alphabet, Matrix transition, std::size_t initial = 0)
      : alphabet_(std::move(alphabet)), transition_(std::move(transition)), current_(initial) {
    if (alphabet_.empty()) throw ConfigError("chain: empty alphabet");
    auto sorted = alphabet_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("chain: alphabet values must be distinct");
    if (transition_.size() != alphabet_.size())
      throw ConfigError("chain: matrix size does not match alphabet");
    validate_stochastic(transition_, "chain.transition");
    if (current_ >= alphabet_.size()) throw ConfigError("chain: initial state out of range");
  }

  /// Advances one transition and returns the new value.
  int sample(Rng& rng) {
    current_ = sample_discrete(transition_[current_], uniform01(rng));
    return alphabet_[current_];
  }

  int value() const noexcept { return alphabet_[current_]; }
  std::size_t state() const noexcept { return current_; }
  void set_state(std::size_t i) {
    if (i >= alphabet_.size()) throw ConfigError("chain: state out of range");
    current_ = i;
  }

  std::size_t size() const noexcept { return alphabet_.size(); }
  const std::vector<int>& alphabet() const noexcept { return alphabet_; }
  const Matrix& transition() const noexcept { return transition_; }
  std::span<const double> row(std::size_t i) const { return transition_.at(i); }

  std::optional<std::size_t> index_of(int value) const {
    auto it = std::find(alphabet_.begin(), alphabet_.end(), value);
    if (it == alphabet_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - alphabet_.begin());
  }

  /// True when every row is identical, i.e. the next value does not depend on
  /// the current one.
  bool memoryless(double tol = 1e-15) const {
    for (std::size_t i = 1; i < transition_.size(); ++i)
      for (std::size_t j = 0; j < transition_[i].size(); ++j)
        if (std::abs(transition_[i][j] - transition_[0][j]) > tol) return false;
    return true;
  }

 private:
  std::vector<int> alphabet_;
  Matrix transition_;
  std::size_t current_;
};

/// Poisson(lambda) mass on {0..cap-1}, with all mass at or above cap moved to cap.
inline std::vector<double> clipped_poisson_pmf(double lambda, int cap) {
  if (cap < 0) throw ConfigError("clipped_poisson_pmf: cap must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("clipped_poisson_pmf: rate must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(cap) + 1, 0.0);
  double term = std::exp(-lambda);
  double below = 0.0;
  for (int k = 0; k < cap; ++k) {
    pmf[k] = term;
    below += term;
    term *= lambda / (k + 1);
  }
  pmf[cap] = std::max(0.0, 1.0 - below);
  return pmf;
}

/// Inversion sampler for the clipped Poisson law; consumes exactly one uniform.
inline int sample_clipped_poisson(double lambda, int cap, Rng& rng) {
  const double u = uniform01(rng);
  double term = std::exp(-lambda);
  double cumulative = 0.0;
  for (int k = 0; k < cap; ++k) {
    cumulative += term;
    if (u < cumulative) return k;
    term *= lambda / (k + 1);
  }
  return cap;
}

enum class RenewableKind { Solar, Wind, None };

inline std::string_view to_string(RenewableKind kind) {
  switch (kind) {
    case RenewableKind::Solar: return "solar";
    case RenewableKind::Wind: return "wind";
    case RenewableKind::None: return "none";
  }
  return "none";
}

inline RenewableKind parse_renewable_kind(std::string_view name) {
  if (name == "solar") return RenewableKind::Solar;
  if (name == "wind") return RenewableKind::Wind;
  if (name == "none") return RenewableKind::None;
  throw ConfigError("unknown renewable kind '" + std::string(name) + "'");
}

/// Per-slot generation: clipped Poisson with a slot-dependent rate.
struct RenewableSource {
  RenewableKind kind = RenewableKind::None;
  std::vector<double> slot_rates;  // index 0 is slot 1
  int cap = 8;

  /// Midday-peaked solar (0.5, 4, 6, 1) or flat wind at 3, stretched over
  /// `slots` by nearest-quarter lookup.
  static RenewableSource with_default_profile(RenewableKind kind, int slots, int cap = 8) {
    static constexpr double kSolar[4] = {0.5, 4.0, 6.0, 1.0};
    RenewableSource src{kind, std::vector<double>(static_cast<std::size_t>(std::max(slots, 0)), 0.0), cap};
    for (int t = 0; t < slots; ++t) {
      switch (kind) {
        case RenewableKind::Solar: src.slot_rates[t] = kSolar[(t * 4) / slots]; break;
        case RenewableKind::Wind: src.slot_rates[t] = 3.0; break;
        case RenewableKind::None: break;
      }
    }
    return src;
  }

  void validate(int slots_per_day) const {
    if (cap < 0) throw ConfigError("renewable.cap: must be >= 0");
    if (static_cast<int>(slot_rates.size()) != slots_per_day)
      throw ConfigError("renewable.rates: expected " + std::to_string(slots_per_day) +
                        " entries, got " + std::to_string(slot_rates.size()));
    for (std::size_t i = 0; i < slot_rates.size(); ++i) {
      if (!(slot_rates[i] >= 0.0))
        throw ConfigError("renewable.rates[" + std::to_string(i) + "]: must be >= 0");
      if (kind == RenewableKind::None && slot_rates[i] != 0.0)
        throw ConfigError("renewable.rates[" + std::to_string(i) + "]: kind 'none' requires zero rates");
    }
  }

  double rate(int slot) const {
    if (kind == RenewableKind::None) return 0.0;
    return slot_rates.at(static_cast<std::size_t>(slot - 1));
  }

  std::vector<double> pmf(int slot) const { return clipped_poisson_pmf(rate(slot), cap); }

  int sample(int slot, Rng& rng) const { return sample_clipped_poisson(rate(slot), cap, rng); }
};

}  // namespace mgrid
