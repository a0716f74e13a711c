#include "u2net/verify.hpp"

#include <cmath>
#include <functional>

#include "u2net/gradcheck.hpp"
#include "u2net/ops.hpp"
#include "u2net/rsu.hpp"

namespace u2net {

namespace {

using D = double;
using Program = std::function<Tensor<D>(const std::vector<Tensor<D>>&)>;

Tensor<D> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    const auto n = shape_numel(shape);
    std::vector<D> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor<D>::from_data(std::move(shape), std::move(v));
}

// Shuffled arithmetic grid: pairwise gaps of 0.01 and nothing near zero, so
// a 1e-4 perturbation can change neither an argmax nor a ReLU sign.
Tensor<D> separated_tensor(Shape shape, Rng& rng) {
    const auto n = shape_numel(shape);
    std::vector<D> v(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] =
            (static_cast<double>(i) - static_cast<double>(n) / 2.0) * 0.01 + 0.005;
    for (std::int64_t i = n - 1; i > 0; --i)
        std::swap(v[static_cast<std::size_t>(i)],
                  v[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    return Tensor<D>::from_data(std::move(shape), std::move(v));
}

std::vector<D> random_weights(std::int64_t n, Rng& rng) {
    std::vector<D> w(static_cast<std::size_t>(n));
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    return w;
}

// Identity forward with a scaled backward; exists so the suite can prove it
// rejects an incorrect gradient.
Tensor<D> sabotage_gradient(const Tensor<D>& x) {
    std::vector<D> out(x.values().begin(), x.values().end());
    Tensor<D> x_t = x;
    return detail::make_result<D>(
        x.shape(), std::move(out), {x}, [x_t](detail::TensorNode<D>& node) mutable {
            if (!x_t.requires_grad()) return;
            auto gin = x_t.grad();
            for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += node.grad[i] * 1.01;
        });
}

struct Case {
    Program program;
    std::vector<Tensor<D>> inputs;
};

} // namespace

VerifyResult verify_gradients(const VerifyOptions& options) {
    VerifyResult result;
    result.pass = true;

    auto run_op = [&](const std::string& name, const std::function<Case(Rng&)>& make) {
        Rng rng(options.seed ^ std::hash<std::string>{}(name));
        OpVerifyResult op;
        op.op = name;
        op.pass = true;
        for (int i = 0; i < options.cases_per_op; ++i) {
            Case c = make(rng);
            GradCheckReport report = grad_check(c.program, c.inputs, options.step, options.tol);
            // A ReLU kink crossed by the default step is a difference-quotient
            // artifact, not a wrong gradient; a genuinely wrong gradient keeps
            // failing as the step shrinks.
            if (!report.pass)
                report = grad_check(c.program, c.inputs, options.step / 10.0, options.tol);
            if (!report.pass)
                report = grad_check(c.program, c.inputs, options.step / 100.0, options.tol);
            op.cases += 1;
            op.worst_rel_err = std::max(op.worst_rel_err, report.max_rel_err);
            if (!report.pass) op.pass = false;
        }
        result.ops.push_back(op);
        if (!op.pass) result.pass = false;
    };

    const bool sabotage = options.break_conv_backward;
    run_op("conv2d", [sabotage](Rng& rng) {
        Conv2dOpts opts;
        opts.stride = static_cast<int>(rng.uniform_int(1, 2));
        opts.padding = static_cast<int>(rng.uniform_int(0, 2));
        opts.dilation = static_cast<int>(rng.uniform_int(1, 2));
        const std::int64_t ci = rng.uniform_int(1, 3), co = rng.uniform_int(1, 3);
        const std::int64_t h = rng.uniform_int(5, 7), w = rng.uniform_int(5, 7);
        Case c;
        c.inputs = {random_tensor({1, ci, h, w}, rng), random_tensor({co, ci, 3, 3}, rng),
                    random_tensor({co}, rng)};
        auto wsum = random_weights(((h + 2 * opts.padding - opts.dilation * 2 - 1) / opts.stride + 1) *
                                       ((w + 2 * opts.padding - opts.dilation * 2 - 1) / opts.stride + 1) * co,
                                   rng);
        c.program = [opts, wsum, sabotage](const std::vector<Tensor<D>>& in) {
            Tensor<D> y = conv2d(in[0], in[1], std::optional<Tensor<D>>(in[2]), opts);
            if (sabotage) y = sabotage_gradient(y);
            return weighted_sum(y, wsum);
        };
        return c;
    });

    run_op("maxpool2", [](Rng& rng) {
        const std::int64_t c = rng.uniform_int(1, 3);
        const std::int64_t h = rng.uniform_int(3, 8), w = rng.uniform_int(3, 8);
        Case c2;
        c2.inputs = {separated_tensor({1, c, h, w}, rng)};
        auto wsum = random_weights(c * ((h + 1) / 2) * ((w + 1) / 2), rng);
        c2.program = [wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(maxpool2(in[0]), wsum);
        };
        return c2;
    });

    run_op("upsample_bilinear", [](Rng& rng) {
        const std::int64_t c = rng.uniform_int(1, 2);
        const std::int64_t h = rng.uniform_int(2, 6), w = rng.uniform_int(2, 6);
        const std::int64_t oh = rng.uniform_int(1, 9), ow = rng.uniform_int(1, 9);
        Case c2;
        c2.inputs = {random_tensor({1, c, h, w}, rng)};
        auto wsum = random_weights(c * oh * ow, rng);
        c2.program = [oh, ow, wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(upsample_bilinear(in[0], oh, ow), wsum);
        };
        return c2;
    });

    run_op("concat_channels", [](Rng& rng) {
        const std::int64_t h = rng.uniform_int(2, 5), w = rng.uniform_int(2, 5);
        const std::int64_t ca = rng.uniform_int(1, 3), cb = rng.uniform_int(1, 3);
        Case c;
        c.inputs = {random_tensor({1, ca, h, w}, rng), random_tensor({1, cb, h, w}, rng)};
        auto wsum = random_weights((ca + cb) * h * w, rng);
        c.program = [wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(concat_channels(in[0], in[1]), wsum);
        };
        return c;
    });

    run_op("relu", [](Rng& rng) {
        Case c;
        c.inputs = {separated_tensor({1, 2, 4, 4}, rng)};
        auto wsum = random_weights(32, rng);
        c.program = [wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(relu(in[0]), wsum);
        };
        return c;
    });

    run_op("sigmoid", [](Rng& rng) {
        Case c;
        c.inputs = {random_tensor({1, 2, 4, 4}, rng, -4.0, 4.0)};
        auto wsum = random_weights(32, rng);
        c.program = [wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(sigmoid(in[0]), wsum);
        };
        return c;
    });

    run_op("add", [](Rng& rng) {
        Case c;
        c.inputs = {random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 2, 3, 3}, rng)};
        auto wsum = random_weights(18, rng);
        c.program = [wsum](const std::vector<Tensor<D>>& in) {
            return weighted_sum(add(in[0], in[1]), wsum);
        };
        return c;
    });

    run_op("batchnorm2d", [](Rng& rng) {
        const bool training = rng.bernoulli(0.5);
        const std::int64_t c = rng.uniform_int(1, 3);
        Case c2;
        c2.inputs = {random_tensor({2, c, 3, 4}, rng), random_tensor({c}, rng, 0.5, 1.5),
                     random_tensor({c}, rng)};
        auto wsum = random_weights(2 * c * 12, rng);
        c2.program = [training, wsum](const std::vector<Tensor<D>>& in) {
            BatchNorm2d<D> bn;
            bn.gamma = in[1];
            bn.beta = in[2];
            const auto channels = static_cast<std::size_t>(in[1].dim(0));
            bn.running_mean.assign(channels, 0.1);
            bn.running_var.assign(channels, 0.9);
            bn.training = training;
            return weighted_sum(batchnorm2d(in[0], bn), wsum);
        };
        return c2;
    });

    run_op("bce_loss", [](Rng& rng) {
        const auto reduction = rng.bernoulli(0.5) ? LossReduction::sum : LossReduction::mean;
        Case c;
        c.inputs = {random_tensor({1, 1, 4, 4}, rng, 0.05, 0.95)};
        std::vector<D> target(16);
        for (auto& t : target) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
        c.program = [target, reduction](const std::vector<Tensor<D>>& in) {
            Tensor<D> gt = Tensor<D>::from_data({1, 1, 4, 4}, target);
            return bce_loss(in[0], gt, reduction);
        };
        return c;
    });

    run_op("rsu4_block", [](Rng& rng) {
        RsuSpec spec{4, 2, 2, 2, false};
        auto block = std::make_shared<RsuBlock<D>>(
            RsuBlock<D>::build(spec, rng, true));
        Case c;
        c.inputs.push_back(random_tensor({1, 2, 8, 8}, rng));
        std::vector<NamedParam<D>> named;
        block->collect_params("rsu", named);
        // Generic point: zero biases/shifts place ReLU kinks exactly at the
        // evaluation point.
        for (auto& e : named) {
            for (auto& v : e.tensor.values()) v += rng.uniform(-0.2, 0.2);
            c.inputs.push_back(e.tensor);
        }
        std::vector<D> target(static_cast<std::size_t>(2 * 8 * 8));
        for (auto& t : target) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
        c.program = [block, target](const std::vector<Tensor<D>>& in) {
            Tensor<D> y = block->forward(in[0]);
            Tensor<D> gt = Tensor<D>::from_data({1, 2, 8, 8}, target);
            return bce_loss(sigmoid(y), gt, LossReduction::mean);
        };
        return c;
    });

    return result;
}

} // namespace u2net
