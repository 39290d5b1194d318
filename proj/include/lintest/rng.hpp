#pragma once

#include <cstdint>
#include <random>

namespace lintest {

using Rng = std::mt19937_64;

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of the independent stream number `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Stream `index` of `master`. Streams depend only on (master, index), never on
// which worker thread consumes them.
Rng make_stream(std::uint64_t master, std::uint64_t index);

}  // namespace lintest
