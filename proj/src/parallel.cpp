#include "tcl4/parallel.hpp"

#include <cstdlib>
#include <string>

namespace tcl4 {

std::size_t worker_count() {
    if (const char* env = std::getenv("TCL4_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return std::size_t(v);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace tcl4
