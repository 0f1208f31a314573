#pragma once

#include <cstdint>
#include <vector>

namespace splatstream {

/// Per-element flags. A byte per entry so parallel kernels can write disjoint elements.
using Mask = std::vector<std::uint8_t>;

/// Pins the OpenMP worker count. Zero or negative falls back to SPLATSTREAM_WORKERS,
/// then to the OpenMP default.
void set_workers(int workers);
int workers();

}  // namespace splatstream
