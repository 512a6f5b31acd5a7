#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace memoria {

// Digamma and trigamma for strictly positive arguments.
double digamma(double x);
double trigamma(double x);

// Type-7 quantile (linear interpolation of order statistics) on an
// already-sorted vector. p in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double p);

// SplitMix64 step; used to derive independent per-task seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Uniform double strictly inside (0,1), fully determined by the 64-bit word.
// (k + 0.5) * 2^-52 is exactly representable, so the result never rounds to
// an endpoint.
inline double uniform_from_bits(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Runs body(0..n-1) on up to `threads` workers. Work items must be
// independent; exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

// FNV-1a 64-bit digest of a byte stream; used for input fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

} // namespace memoria
