#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dtln {

/// Seeded generator with named substreams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Substreams are seeded through std::seed_seq from the parent
/// seed and a 64-bit FNV-1a hash of the stage name, so `stream("layer1")`
/// is independent of how many draws the parent has made. All mappings from
/// raw 64-bit output to bounded integers and reals are implemented here
/// rather than with <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1);

    std::uint64_t seed() const { return seed_; }

    /// Independent generator for a named pipeline stage.
    Rng stream(std::string_view stage) const;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace dtln
