#pragma once

// Umbrella header for the weak factor model library.

#include "wfm/error.hpp"
#include "wfm/factor_count.hpp"
#include "wfm/io.hpp"
#include "wfm/metrics.hpp"
#include "wfm/panel.hpp"
#include "wfm/pc.hpp"
#include "wfm/replications.hpp"
#include "wfm/rolling.hpp"
#include "wfm/simulate.hpp"
#include "wfm/sparsity.hpp"

namespace wfm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wfm
