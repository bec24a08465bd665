#pragma once

// Randomized quasi-Monte Carlo: scrambled Sobol points addressable by index,
// a counter-based pseudo-random alternative, measure-preserving maps to the
// integration domains, and a reduction whose result does not depend on the
// number of worker threads.

#include "mott/core.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/detail/sobol_table.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mott {

enum class SequenceKind { low_discrepancy, pseudo_random };

inline const char* to_string(SequenceKind k) {
  return k == SequenceKind::low_discrepancy ? "low-discrepancy" : "pseudo-random";
}

/// Budget and randomization of one integral estimate. `point_count` is per
/// replicate; the standard error comes from the spread of the replicates.
struct QuadraturePlan {
  std::uint64_t point_count = 1u << 16;
  std::uint64_t seed = 1;
  std::optional<double> truncation_radius;  ///< unset: chosen from the potential width
  SequenceKind sequence_kind = SequenceKind::low_discrepancy;
  int replicates = 8;

  void validate() const {
    if (point_count < 2) throw ConfigError("must be at least 2", "qmc.points");
    if (point_count > (std::uint64_t{1} << 32)) throw ConfigError("must not exceed 2^32", "qmc.points");
    if (truncation_radius && !(*truncation_radius > 0.0))
      throw ConfigError("must be positive", "qmc.truncation_radius");
    if (replicates < 1) throw ConfigError("must be at least 1", "qmc.replicates");
  }
};

namespace qmc {

inline constexpr int kBits = 32;
inline constexpr unsigned kMaxDimension = boost::random::detail::qrng_tables::sobol::max_dimension;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

/// Unscrambled direction numbers v[d][k] (bit k of the index) in 32-bit
/// fixed point, from the Joe-Kuo primitive polynomials and initial values.
inline std::vector<std::array<std::uint32_t, kBits>> sobol_directions(unsigned dim) {
  using table = boost::random::detail::qrng_tables::sobol;
  if (dim == 0 || dim > kMaxDimension) throw DomainError("sobol_directions: unsupported dimension");
  std::vector<std::array<std::uint32_t, kBits>> v(dim);
  for (int k = 0; k < kBits; ++k) v[0][k] = std::uint32_t{1} << (kBits - 1 - k);
  for (unsigned d = 1; d < dim; ++d) {
    const auto poly = table::polynomial(d - 1);
    unsigned degree = 0;
    while ((poly >> (degree + 1)) != 0) ++degree;
    std::array<std::uint64_t, kBits> m{};
    for (unsigned k = 0; k < degree && k < static_cast<unsigned>(kBits); ++k) m[k] = table::minit(d - 1, k);
    for (unsigned j = degree; j < static_cast<unsigned>(kBits); ++j) {
      std::uint64_t mj = m[j - degree] ^ (m[j - degree] << degree);
      for (unsigned k = 1; k < degree; ++k) {
        const std::uint64_t coeff = (poly >> (degree - k)) & 1u;
        mj ^= coeff * (m[j - k] << k);
      }
      m[j] = mj;
    }
    for (int k = 0; k < kBits; ++k) v[d][k] = static_cast<std::uint32_t>(m[k] << (kBits - 1 - k));
  }
  return v;
}

/// One randomized replicate of a point set in [0,1)^dim. Sobol points get a
/// random linear matrix scramble plus a digital shift; the pseudo-random
/// kind hashes (seed, replicate, index, coordinate). Either way point(i) is
/// a pure function of its index.
class PointSet {
public:
  PointSet(SequenceKind kind, unsigned dim, std::uint64_t seed, std::uint64_t replicate)
      : kind_(kind), dim_(dim), key_(mix(seed, replicate + 0x51ed2701ULL)) {
    if (dim == 0) throw DomainError("PointSet: dimension must be positive");
    if (kind_ != SequenceKind::low_discrepancy) return;
    const auto raw = sobol_directions(dim);
    dirs_.resize(dim);
    shift_.resize(dim);
    for (unsigned d = 0; d < dim; ++d) {
      // lower-triangular bit matrix with unit diagonal, acting on the
      // 32-bit fraction with bit 31 the most significant
      std::array<std::uint32_t, kBits> rows{};
      for (int r = 0; r < kBits; ++r) {
        const std::uint64_t h = mix(key_, (std::uint64_t{d} << 8) | static_cast<std::uint64_t>(r));
        const std::uint32_t lower = r == 0 ? 0u : static_cast<std::uint32_t>(h) & ~((~0u) >> r);
        rows[r] = lower | (std::uint32_t{1} << (kBits - 1 - r));
      }
      for (int k = 0; k < kBits; ++k) dirs_[d][k] = apply(rows, raw[d][k]);
      shift_[d] = static_cast<std::uint32_t>(mix(key_, 0xabcdef00ULL + d) >> 32);
    }
  }

  unsigned dimension() const { return dim_; }

  /// Writes point `index` to out[0..dim).
  void point(std::uint64_t index, double* out) const {
    constexpr double scale = 1.0 / 4294967296.0;
    if (kind_ == SequenceKind::low_discrepancy) {
      for (unsigned d = 0; d < dim_; ++d) {
        std::uint32_t x = shift_[d];
        std::uint64_t i = index;
        for (int k = 0; i != 0; ++k, i >>= 1)
          if (i & 1u) x ^= dirs_[d][k];
        out[d] = (static_cast<double>(x) + 0.5) * scale;
      }
    } else {
      const std::uint64_t base = mix(key_, index);
      for (unsigned d = 0; d < dim_; ++d) {
        const std::uint64_t h = mix(base, d);
        out[d] = (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
      }
    }
  }

private:
  static std::uint32_t apply(const std::array<std::uint32_t, kBits>& rows, std::uint32_t v) {
    std::uint32_t out = 0;
    for (int r = 0; r < kBits; ++r) {
      const std::uint32_t parity = static_cast<std::uint32_t>(__builtin_parity(rows[r] & v));
      out |= parity << (kBits - 1 - r);
    }
    return out;
  }

  SequenceKind kind_;
  unsigned dim_;
  std::uint64_t key_;
  std::vector<std::array<std::uint32_t, kBits>> dirs_;
  std::vector<std::uint32_t> shift_;
};

/// First `n` points of replicate 0, row-major.
inline std::vector<double> sample_nodes(const QuadraturePlan& plan, unsigned dim) {
  plan.validate();
  PointSet ps(plan.sequence_kind, dim, plan.seed, 0);
  std::vector<double> out(plan.point_count * dim);
  for (std::uint64_t i = 0; i < plan.point_count; ++i) ps.point(i, out.data() + i * dim);
  return out;
}

// ---------------------------------------------------------------------------
// Domain maps. Each returns the mapped point and the constant or pointwise
// weight that turns a uniform average into the integral.

struct SimplexPoint {
  double alpha, beta;
};

/// (u, v) -> {0 <= beta <= alpha <= 1}; uniform with total measure 1/2.
inline SimplexPoint simplex_map(double u, double v) {
  const double alpha = std::sqrt(u);
  return {alpha, alpha * v};
}
inline constexpr double simplex_measure = 0.5;

/// Uniform point on S^2 (measure 4 pi).
inline Vec3 sphere_map(double u, double v) {
  const double z = 1.0 - 2.0 * u;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = two_pi * v;
  return {r * std::cos(phi), r * std::sin(phi), z};
}
inline constexpr double sphere_measure = 4.0 * pi;

/// Uniform point on the disk of the given radius (measure pi radius^2).
inline std::pair<double, double> disk_map(double u, double v, double radius) {
  const double r = radius * std::sqrt(u);
  const double phi = two_pi * v;
  return {r * std::cos(phi), r * std::sin(phi)};
}

/// Standard normal quantile, accurate in both tails.
inline double normal_quantile(double p) {
  if (p < 0.5) return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
  return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * (1.0 - p));
}

/// Normal(0, sigma^2) truncated to [-R, R], sampled by inversion. The weight
/// is 1 / density, so the product with the integrand averages to the
/// integral over the interval.
class TruncatedGaussian {
public:
  TruncatedGaussian(double sigma, double radius) : sigma_(sigma), radius_(radius) {
    if (!(sigma > 0.0) || !(radius > 0.0)) throw DomainError("TruncatedGaussian: sigma and radius must be positive");
    mass_ = std::erf(radius / (sigma * std::sqrt(2.0)));
  }

  struct Sample {
    double value;
    double weight;
  };

  Sample operator()(double u) const {
    const double t = u - 0.5;
    const double z = t < 0.0 ? -normal_quantile(0.5 - t * mass_) : normal_quantile(0.5 + t * mass_);
    const double x = std::clamp(sigma_ * z, -radius_, radius_);
    const double density = std::exp(-0.5 * z * z) / (std::sqrt(two_pi) * sigma_ * mass_);
    return {x, 1.0 / density};
  }

  double sigma() const { return sigma_; }
  double radius() const { return radius_; }
  /// Gaussian mass outside [-R, R] as a fraction of the full line.
  double tail_fraction() const { return std::erfc(radius_ / (sigma_ * std::sqrt(2.0))); }

private:
  double sigma_, radius_, mass_;
};

// ---------------------------------------------------------------------------
// Deterministic parallel reduction

/// Worker count: MOTT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("MOTT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Pairwise tree sum whose association depends only on the length.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 0) return T{};
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline constexpr std::uint64_t kBlockSize = 4096;

/// Evaluates block_sum(begin, end) over fixed blocks of [0, n) on up to
/// thread_count() threads and combines the block results with a pairwise
/// tree, so the result is bit-identical for any thread count.
template <class T, class BlockFn>
T deterministic_reduce(std::uint64_t n, BlockFn&& block_sum, std::uint64_t block = kBlockSize) {
  const std::uint64_t nblocks = (n + block - 1) / block;
  std::vector<T> partial(nblocks);
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(thread_count(), std::max<std::uint64_t>(nblocks, 1)));
  auto run = [&](unsigned w) {
    for (std::uint64_t b = w; b < nblocks; b += workers)
      partial[b] = block_sum(b * block, std::min(n, (b + 1) * block));
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  return pairwise_sum(partial, 0, partial.size());
}

/// Running sums of a complex integrand: sum of values and of squared moduli.
struct Moments {
  Complex sum{0.0, 0.0};
  double sum_sq = 0.0;

  Moments& operator+=(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    return *this;
  }
  friend Moments operator+(Moments a, const Moments& b) { return a += b; }
};

} // namespace qmc
} // namespace mott
