// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the hurst library.
#pragma once

#include "hurst/coefficients.hpp"
#include "hurst/error.hpp"
#include "hurst/estimator.hpp"
#include "hurst/expansion.hpp"
#include "hurst/fbm.hpp"
#include "hurst/format.hpp"
#include "hurst/kernels.hpp"
#include "hurst/montecarlo.hpp"
#include "hurst/report.hpp"
