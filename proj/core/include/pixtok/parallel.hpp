#pragma once

#include <cstdint>
#include <functional>

namespace pixtok {

// Worker cap: PIXTOK_THREADS if set, else hardware concurrency.
int max_threads();

// Runs body(i) for i in [0, count). Items are independent and each writes a
// disjoint region, so results do not depend on the thread count.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body);

}  // namespace pixtok
