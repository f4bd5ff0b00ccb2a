#pragma once

#include <span>

namespace occlab::kernels::avx2math {

void normal_pairs(std::span<double> u);
void stable_std(double alpha, double beta, std::span<const double> u, std::span<double> out);

}  // namespace occlab::kernels::avx2math
