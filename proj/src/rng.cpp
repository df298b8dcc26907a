#include "bmdrift/rng.hpp"

#include "bmdrift/errors.hpp"

#include <cmath>

namespace bmdrift {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream_id & 0xffffffffu),
        static_cast<std::uint32_t>(stream_id >> 32),
        0x9e3779b9u,
    };
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return unif_(engine_); }

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw ValidationError("rng: exponential rate must be positive");
    // 1 - U lies in (0,1], so the log is finite
    return -std::log1p(-uniform()) / rate;
}

}  // namespace bmdrift
