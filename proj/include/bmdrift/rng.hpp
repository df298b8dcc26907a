#pragma once

#include <cstdint>
#include <random>

namespace bmdrift {

// Reproducible random stream keyed by (seed, stream id). The engine is
// mt19937_64 seeded through seed_seq with both 64-bit keys split into halves,
// so distinct ids give unrelated engine states. Non-copyable on purpose:
// a stream must never be consumed from two places.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    RngStream(const RngStream&) = delete;
    RngStream& operator=(const RngStream&) = delete;
    RngStream(RngStream&&) = default;
    RngStream& operator=(RngStream&&) = default;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double normal();                 // N(0,1)
    double uniform();                // [0,1)
    double exponential(double rate); // mean 1/rate
    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace bmdrift
