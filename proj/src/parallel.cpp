#include "splatstream/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace splatstream {

void set_workers(int n) {
    if (n <= 0) {
        if (const char* env = std::getenv("SPLATSTREAM_WORKERS")) {
            n = std::atoi(env);
        }
    }
    if (n > 0) {
        omp_set_num_threads(n);
    }
}

int workers() { return omp_get_max_threads(); }

}  // namespace splatstream
