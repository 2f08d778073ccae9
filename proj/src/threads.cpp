#include "forestseg/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace forestseg {

int configure_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("FORESTSEG_THREADS")) {
      n = std::atoi(env);
    }
  }
  if (n <= 0) n = omp_get_max_threads();
  omp_set_num_threads(n);
  return n;
}

}  // namespace forestseg
