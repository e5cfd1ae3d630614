#pragma once

#include "trendbreak/csv.hpp"
#include "trendbreak/errors.hpp"
#include "trendbreak/hp.hpp"
#include "trendbreak/io.hpp"
#include "trendbreak/l1.hpp"
#include "trendbreak/linalg.hpp"
#include "trendbreak/normal.hpp"
#include "trendbreak/pelt.hpp"
#include "trendbreak/report.hpp"
#include "trendbreak/rng.hpp"
#include "trendbreak/simulate.hpp"
#include "trendbreak/stats.hpp"
#include "trendbreak/time_series.hpp"
