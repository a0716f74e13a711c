#ifndef U2NET_VERIFY_HPP
#define U2NET_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace u2net {

struct VerifyOptions {
    std::uint64_t seed = 0;
    int cases_per_op = 100;
    double tol = 1e-4;
    double step = 1e-4;
    // Test fixture: scales the analytic gradient of the convolution check so
    // the harness is seen to catch a wrong backward pass.
    bool break_conv_backward = false;
};

struct OpVerifyResult {
    std::string op;
    int cases = 0;
    double worst_rel_err = 0.0;
    bool pass = false;
};

struct VerifyResult {
    std::vector<OpVerifyResult> ops;
    bool pass = false;
};

// Randomized central-difference verification of every differentiable
// primitive plus a full RSU-4(2,2,2) block, in 64-bit mode.
VerifyResult verify_gradients(const VerifyOptions& options = {});

} // namespace u2net

#endif
