#ifndef U2NET_GRADCHECK_HPP
#define U2NET_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "u2net/tensor.hpp"

namespace u2net {

struct GradCheckReport {
    double max_rel_err = 0.0;
    int worst_input = -1;          // index into the inputs vector
    std::int64_t worst_coord = -1; // flat index within that input
    double analytic = 0.0;
    double numeric = 0.0;
    bool pass = false;
    double tol = 0.0;

    std::string describe() const;
};

// Verifies reverse-mode gradients of a scalar-valued 64-bit program against
// central differences (f(x+h) - f(x-h)) / (2h). Relative error per
// coordinate is |a - n| / (max(|a|, |n|) + 1e-10).
GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& program,
    std::vector<Tensor<double>> inputs,
    double h = 1e-4,
    double tol = 1e-4);

} // namespace u2net

#endif
