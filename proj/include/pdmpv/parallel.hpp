#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

namespace pdmpv {

/// Worker count: explicit request if given, else PDMP_VERIFY_THREADS, else
/// the hardware concurrency. Always at least 1.
std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt);

/// Runs body(i) for i in [0, count) on `threads` workers using static
/// contiguous chunks. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

/// Pairwise (tree) summation. The result depends only on the values and
/// their order, never on the worker count that produced them.
double pairwise_sum(std::span<const double> values);

}  // namespace pdmpv
