#include "crawler/execution.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace crawler {

int configure_threads(int threads) {
  if (threads <= 0) {
    const char* env = std::getenv("CRAWLER_SLAM_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      return 0;
    }
    if (threads <= 0) return 0;
  }
  omp_set_num_threads(threads);
  return threads;
}

}  // namespace crawler
