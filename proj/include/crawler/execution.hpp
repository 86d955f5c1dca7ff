#pragma once

namespace crawler {

/// Selects between the OpenMP kernel and its serial reference. Both paths
/// produce bit-identical results; the serial one is kept for tests and the
/// kernel benchmark.
enum class Execution { serial, parallel };

/// Caps the OpenMP thread count for this process. Reads CRAWLER_SLAM_THREADS
/// when `threads` is 0. Returns the value applied (0 means library default).
int configure_threads(int threads = 0);

}  // namespace crawler
