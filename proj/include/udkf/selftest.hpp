#pragma once

#include <iosfwd>

namespace udkf {

// Seeded end-to-end checks of every mechanization against its
// independent oracle; one line per check. Returns true when all pass.
bool run_selftest(std::ostream& os);

}  // namespace udkf
