#pragma once

#include <cstddef>
#include <functional>

namespace panrec {

/// Worker count: hardware concurrency, capped by PANREC_THREADS when set.
unsigned worker_count();

/// Runs `body(i)` for i in [begin, end) over contiguous chunks. `body` must
/// only touch state owned by index i so results are independent of scheduling.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace panrec
