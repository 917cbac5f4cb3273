#pragma once

// Umbrella header for the active camera-parameter control toolkit.

#include "camctl/axis.hpp"
#include "camctl/error.hpp"
#include "camctl/ingest.hpp"
#include "camctl/metrics.hpp"
#include "camctl/numfmt.hpp"
#include "camctl/perf_table.hpp"
#include "camctl/rng.hpp"
#include "camctl/selector.hpp"
#include "camctl/simcam.hpp"
#include "camctl/table_io.hpp"
