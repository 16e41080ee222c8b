// SPDX-License-Identifier: Apache-2.0
//
// Prints the limit variance and the first-order corrections over H.
#include "hurst/hurst.hpp"

#include <cstdio>

int main()
{
    std::printf("%5s %10s %10s %10s %10s %10s\n", "H", "v", "a3", "a1", "b*", "b**");
    for (int i = 1; i <= 9; ++i) {
        const double H = 0.1 * i;
        const auto m = hurst::build_expansion(H);
        std::printf("%5.2f %10.5f %10.5f %10.5f %10.5f %10.5f\n", H, m.v, m.a3, m.a1, m.b_star, m.b_star_star);
    }
}
