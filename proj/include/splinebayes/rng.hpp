#pragma once

#include <cstdint>
#include <random>

namespace splinebayes {

/** Stateless seed mixer (splitmix64 step applied to seed ^ stream).
    Used to derive independent substream seeds from a base seed and a counter,
    e.g. per-replicate or per-chunk streams; identical inputs always yield the
    same output on every platform. */
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/** Deterministic random source.

    Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
    implements the real-valued transformations in-library, because the
    distributions in <random> are implementation-defined and would break
    byte-identical output across standard libraries:
      - uniform:  53-bit mantissa draw in [0,1)
      - normal:   Marsaglia polar method (consumes uniform pairs)
      - poisson:  CDF inversion for mean <= 30, PTRS transformed rejection above
*/
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Raw 64-bit draw.
    std::uint64_t next_u64() { return eng_(); }

    /// Uniform draw in [0,1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Marsaglia polar; caches the spare deviate).
    double normal();

    /// Poisson draw with the given mean (> 0).
    long poisson(double mean);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/** Inverse standard normal CDF.
    Acklam's rational approximation refined by one Halley step on erfc,
    accurate to full double precision; quantile_normal(0.975) =
    1.959963984540054. */
double quantile_normal(double p);

} // namespace splinebayes
