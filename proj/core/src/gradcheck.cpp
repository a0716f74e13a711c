#include "u2net/gradcheck.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace u2net {

std::string GradCheckReport::describe() const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << " max_rel_err=" << max_rel_err;
    if (worst_input >= 0)
        os << " at input " << worst_input << " coord " << worst_coord
           << " (analytic " << analytic << ", numeric " << numeric << ")";
    return os.str();
}

GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& program,
    std::vector<Tensor<double>> inputs,
    double h,
    double tol) {
    for (auto& in : inputs) {
        in.set_requires_grad(true);
        in.zero_grad();
    }

    Tensor<double> loss = program(inputs);
    if (loss.numel() != 1) throw UsageError("grad_check: program must return a scalar");
    loss.backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& in : inputs) {
        auto g = in.grad();
        analytic.emplace_back(g.begin(), g.end());
    }

    GradCheckReport report;
    report.tol = tol;
    {
        // Numeric passes must not rebuild graphs.
        NoGradGuard guard;
        for (std::size_t idx = 0; idx < inputs.size(); ++idx) {
            auto vals = inputs[idx].values();
            for (std::int64_t i = 0; i < inputs[idx].numel(); ++i) {
                const double keep = vals[i];
                vals[i] = keep + h;
                const double up = program(inputs).item();
                vals[i] = keep - h;
                const double dn = program(inputs).item();
                vals[i] = keep;

                const double numeric = (up - dn) / (2.0 * h);
                const double a = analytic[idx][static_cast<std::size_t>(i)];

                // Central differences cancel catastrophically once the true
                // slope falls under the rounding noise of the two function
                // evaluations; agreement within that noise band says
                // "gradient is zero at this precision", not "mismatch".
                const double scale = std::max({1.0, std::abs(up), std::abs(dn)});
                const double noise_floor =
                    512.0 * std::numeric_limits<double>::epsilon() * scale / (2.0 * h);
                if (std::abs(a - numeric) <= noise_floor) continue;

                const double rel =
                    std::abs(a - numeric) / (std::max(std::abs(a), std::abs(numeric)) + 1e-10);
                if (rel > report.max_rel_err) {
                    report.max_rel_err = rel;
                    report.worst_input = static_cast<int>(idx);
                    report.worst_coord = i;
                    report.analytic = a;
                    report.numeric = numeric;
                }
            }
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

} // namespace u2net
