// SPDX-License-Identifier: Apache-2.0
//
// Simulates one fBm path and prints the plain and corrected estimates.
#include "hurst/hurst.hpp"

#include <iostream>

int main()
{
    const hurst::HurstModel model{0.7, 1.0, 256};
    const auto path = hurst::generate_path(model, 42);
    const hurst::CorrectionTable table;
    const auto r = hurst::estimate_h_corrected(path.values, table);
    std::cout << "true H       " << model.H << "\n"
              << "H^           " << r.h_hat << "\n"
              << "mean-shifted " << *r.h_b << "\n"
              << "median-shift " << *r.h_med << "\n";
}
