#include "sdrnet/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "sdrnet/errors.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/optim.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/tape.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {

namespace {

Tensor random_tensor(std::vector<int> shape, RngStream& rng, float lo,
                     float hi) {
    Tensor t(std::move(shape));
    for (float& v : t.data) {
        v = lo + static_cast<float>(rng.uniform()) * (hi - lo);
    }
    return t;
}

// Values pushed away from zero so relu kinks and magnitude filters never
// sit on top of a finite-difference step.
Tensor random_tensor_off_zero(std::vector<int> shape, RngStream& rng) {
    Tensor t = random_tensor(std::move(shape), rng, -1.5f, 1.5f);
    for (float& v : t.data) {
        if (std::fabs(v) < 0.1f) v += v >= 0.0f ? 0.1f : -0.1f;
    }
    return t;
}

/// One finite-difference case: inputs become tape leaves, build() wires
/// them to a scalar root, and the reverse-pass gradients are compared to
/// central differences over every input element. Every op is linear in any
/// single coordinate except the loss and the composite, so h trades only
/// against float rounding of the forward value; 1e-2 keeps that noise near
/// 1e-5 while staying inside each op's linear regime.
struct GradCase {
    std::string name;
    std::vector<Tensor> inputs;
    std::function<NodeId(Tape&, const std::vector<NodeId>&)> build;
    float h = 1e-2f;
    double tol = 1e-3;
};

float case_value(const GradCase& c, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<NodeId> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    const NodeId root = c.build(tape, leaves);
    return tape.value(root).data[0];
}

// Returns the worst relative error across all coordinates, or a negative
// value when the case produced no usable coordinate.
double run_grad_case(const GradCase& c, std::string* failure) {
    Tape tape;
    std::vector<NodeId> leaves;
    for (const Tensor& t : c.inputs) leaves.push_back(tape.leaf(t));
    const NodeId root = c.build(tape, leaves);
    tape.backward(root);

    double worst = -1.0;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        const Tensor& grad = tape.grad(leaves[i]);
        for (std::size_t j = 0; j < c.inputs[i].data.size(); ++j) {
            std::vector<Tensor> probe = c.inputs;
            const float saved = probe[i].data[j];
            probe[i].data[j] = saved + c.h;
            const double up = case_value(c, probe);
            probe[i].data[j] = saved - c.h;
            const double down = case_value(c, probe);
            const double fd = (up - down) / (2.0 * c.h);
            const double ad = grad.data[j];
            // Relative above unit gradient magnitude, absolute below: float
            // rounding of the forward value makes differences under
            // tol * 1.0 unmeasurable by central differences.
            const double rel =
                std::fabs(ad - fd) /
                std::max(1.0, std::max(std::fabs(ad), std::fabs(fd)));
            worst = std::max(worst, rel);
            if (rel > c.tol && failure && failure->empty()) {
                std::ostringstream os;
                os << c.name << ": input " << i << " element " << j
                   << " reverse-pass " << ad << " vs finite-difference " << fd
                   << " (scaled error " << rel << ")";
                *failure = os.str();
            }
        }
    }
    return worst;
}

std::vector<GradCase> grad_case_catalog(std::uint64_t seed) {
    std::vector<GradCase> cases;
    RngStream rng(seed);
    auto dim = [&rng] {
        return 2 + static_cast<int>(rng.next_below(3));
    };

    for (int rep = 0; rep < 10; ++rep) {
        const int r = dim();
        const int c = dim();
        cases.push_back(
            {"add", {random_tensor({r, c}, rng, -1.5f, 1.5f),
                     random_tensor({r, c}, rng, -1.5f, 1.5f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.add(in[0], in[1]));
             }});
        cases.push_back(
            {"sub", {random_tensor({r, c}, rng, -1.5f, 1.5f),
                     random_tensor({r, c}, rng, -1.5f, 1.5f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.sub(in[0], in[1]));
             }});
        cases.push_back(
            {"mul", {random_tensor({r, c}, rng, -1.5f, 1.5f),
                     random_tensor({r, c}, rng, -1.5f, 1.5f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.mul(in[0], in[1]));
             }});
        cases.push_back(
            {"scale", {random_tensor({r, c}, rng, -1.5f, 1.5f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.scale(in[0], 0.7f));
             }});
        const int k = dim();
        cases.push_back(
            {"matmul", {random_tensor({r, k}, rng, -1.0f, 1.0f),
                        random_tensor({k, c}, rng, -1.0f, 1.0f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.matmul(in[0], in[1]));
             }});
        cases.push_back(
            {"add_row", {random_tensor({r, c}, rng, -1.5f, 1.5f),
                         random_tensor({c}, rng, -1.5f, 1.5f)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.add_row(in[0], in[1]));
             }});
        cases.push_back(
            {"relu", {random_tensor_off_zero({r, c}, rng)},
             [](Tape& t, const std::vector<NodeId>& in) {
                 return t.sum(t.relu(in[0]));
             }});
        {
            Tensor eps = random_tensor({r, c}, rng, -2.0f, 2.0f);
            Tensor coef = random_tensor({r, c}, rng, -1.5f, 1.5f);
            cases.push_back(
                {"gauss_reparam",
                 {random_tensor({r, c}, rng, -1.5f, 1.5f),
                  random_tensor({r, c}, rng, 0.05f, 1.0f)},
                 [eps, coef](Tape& t, const std::vector<NodeId>& in) {
                     const NodeId w =
                         t.gauss_reparam(in[0], in[1], Tensor(eps));
                     return t.sum(t.mul_const(w, Tensor(coef)));
                 }});
        }
        {
            Tensor mask({r, c});
            for (float& v : mask.data) {
                v = rng.uniform() < 0.3 ? 0.0f : 1.25f;
            }
            cases.push_back(
                {"mul_const", {random_tensor({r, c}, rng, -1.5f, 1.5f)},
                 [mask](Tape& t, const std::vector<NodeId>& in) {
                     return t.sum(t.mul_const(in[0], Tensor(mask)));
                 }});
        }
        {
            std::vector<int> labels;
            const int classes = 3 + static_cast<int>(rng.next_below(3));
            for (int i = 0; i < r; ++i) {
                labels.push_back(
                    static_cast<int>(rng.next_below(
                        static_cast<std::uint64_t>(classes))));
            }
            cases.push_back(
                {"softmax_xent",
                 {random_tensor({r, classes}, rng, -2.0f, 2.0f)},
                 [labels](Tape& t, const std::vector<NodeId>& in) {
                     return t.softmax_xent(in[0], labels);
                 }});
        }
    }

    // Composite: a two-layer sampled network, loss gradients flowing into
    // mu and sigma of both layers at once. Draws are retried until every
    // hidden preactivation clears the relu kink by more than any finite-
    // difference probe can move it (a probe of one first-layer element
    // shifts a preactivation by at most h * |x| * |eps| <= 0.02).
    {
        RngStream mix(RngStream::derive(seed, "composite"));
        Tensor x, mu1, sg1, eps1, mu2, sg2, eps2;
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 50) {
                throw ContractError(
                    "gradcheck composite: no kink-free draw in 50 attempts");
            }
            x = random_tensor({4, 5}, mix, -1.0f, 1.0f);
            mu1 = random_tensor({5, 4}, mix, -0.8f, 0.8f);
            sg1 = random_tensor({5, 4}, mix, 0.1f, 0.8f);
            eps1 = random_tensor({5, 4}, mix, -2.0f, 2.0f);
            mu2 = random_tensor({4, 3}, mix, -0.8f, 0.8f);
            sg2 = random_tensor({4, 3}, mix, 0.1f, 0.8f);
            eps2 = random_tensor({4, 3}, mix, -2.0f, 2.0f);

            Tensor w1({5, 4});
            for (std::size_t i = 0; i < w1.data.size(); ++i) {
                w1.data[i] = mu1.data[i] + sg1.data[i] * eps1.data[i];
            }
            const Tensor pre = matmul(x, w1);
            bool clear = true;
            for (float v : pre.data) {
                if (std::fabs(v) < 0.08f) {
                    clear = false;
                    break;
                }
            }
            if (clear) break;
        }
        const std::vector<int> labels = {0, 2, 1, 2};
        cases.push_back(
            {"sampled-mlp", {mu1, sg1, mu2, sg2},
             [x, eps1, eps2, labels](Tape& t, const std::vector<NodeId>& in) {
                 const NodeId xn = t.constant(x);
                 const NodeId w1 =
                     t.gauss_reparam(in[0], in[1], Tensor(eps1));
                 const NodeId h = t.relu(t.matmul(xn, w1));
                 const NodeId w2 =
                     t.gauss_reparam(in[2], in[3], Tensor(eps2));
                 return t.softmax_xent(t.matmul(h, w2), labels);
             }});
    }
    return cases;
}

}  // namespace

OracleReport verify_gradcheck(std::uint64_t seed) {
    OracleReport report;
    report.name = "gradcheck";
    const std::vector<GradCase> cases = grad_case_catalog(seed);

    double worst = -1.0;
    std::string worst_name;
    std::string failure;
    for (const GradCase& c : cases) {
        const double rel = run_grad_case(c, &failure);
        if (rel > worst) {
            worst = rel;
            worst_name = c.name;
        }
        if (!failure.empty()) break;
    }

    std::ostringstream os;
    if (!failure.empty()) {
        report.passed = false;
        os << failure;
    } else {
        report.passed = true;
        os << cases.size() << " cases, worst relative error " << worst
           << " (" << worst_name << ")";
    }
    report.detail = os.str();
    return report;
}

OracleReport verify_risk_identity(std::uint64_t seed) {
    OracleReport report;
    report.name = "risk-identity";
    constexpr int kInstances = 20;
    constexpr int kSamples = 100000;
    constexpr int kRows = 8;
    constexpr int kCols = 4;

    RngStream gen(RngStream::derive(seed, "risk-instances"));
    double worst = 0.0;
    for (int inst = 0; inst < kInstances; ++inst) {
        Tensor x({kRows, kCols});
        gen.fill_normal(x.data);
        Tensor y({kRows});
        gen.fill_normal(y.data);
        Tensor mu({kCols});
        gen.fill_normal(mu.data);
        Tensor sigma({kCols});
        for (float& s : sigma.data) {
            s = 0.1f + 0.9f * static_cast<float>(gen.uniform());
        }

        // Closed form: ||y - X mu||^2 + sum_ij X_ij^2 sigma_j^2.
        double closed = 0.0;
        for (int r = 0; r < kRows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < kCols; ++c) {
                dot += static_cast<double>(x.at(r, c)) * mu.data[c];
            }
            const double diff = y.data[r] - dot;
            closed += diff * diff;
        }
        for (int r = 0; r < kRows; ++r) {
            for (int c = 0; c < kCols; ++c) {
                const double xs = static_cast<double>(x.at(r, c)) *
                                  sigma.data[c];
                closed += xs * xs;
            }
        }

        RngStream mc(RngStream::derive(seed, "risk-mc"),
                     static_cast<std::uint64_t>(inst));
        double total = 0.0;
        std::vector<float> w(kCols);
        for (int s = 0; s < kSamples; ++s) {
            for (int c = 0; c < kCols; ++c) {
                w[static_cast<std::size_t>(c)] =
                    mu.data[c] + sigma.data[c] * mc.normal();
            }
            for (int r = 0; r < kRows; ++r) {
                double dot = 0.0;
                for (int c = 0; c < kCols; ++c) {
                    dot += static_cast<double>(x.at(r, c)) *
                           w[static_cast<std::size_t>(c)];
                }
                const double diff = y.data[r] - dot;
                total += diff * diff;
            }
        }
        const double estimate = total / kSamples;
        const double rel = std::fabs(estimate - closed) / closed;
        worst = std::max(worst, rel);
        if (rel > 0.02) {
            std::ostringstream os;
            os << "instance " << inst << ": Monte Carlo " << estimate
               << " vs closed form " << closed << " (relative " << rel << ")";
            report.detail = os.str();
            report.passed = false;
            return report;
        }
    }
    std::ostringstream os;
    os << kInstances << " instances x " << kSamples
       << " samples, worst relative gap " << worst;
    report.detail = os.str();
    report.passed = true;
    return report;
}

OracleReport verify_sigma_zero_equivalence(std::uint64_t seed) {
    OracleReport report;
    report.name = "sigma-zero-equivalence";

    RngStream init(RngStream::derive(seed, "szq-init"));
    Network net(mlp_spec(LayerKind::StochasticLinear, 6, {5, 4}, 3), init,
                0.0f);

    RngStream gen(RngStream::derive(seed, "szq-inputs"));
    for (int rep = 0; rep < 100; ++rep) {
        Tensor x({2, 6});
        gen.fill_normal(x.data);
        RngStream sampled_rng(RngStream::derive(seed, "szq-noise"),
                              static_cast<std::uint64_t>(rep));
        RngStream mean_rng(0);
        const Tensor sampled =
            net.forward_logits(x, ForwardMode::Sampled, sampled_rng);
        const Tensor mean = net.forward_logits(x, ForwardMode::Mean, mean_rng);
        for (std::size_t i = 0; i < sampled.data.size(); ++i) {
            if (sampled.data[i] != mean.data[i]) {
                std::ostringstream os;
                os << "input " << rep << " logit " << i << ": sampled "
                   << sampled.data[i] << " vs mean " << mean.data[i];
                report.detail = os.str();
                report.passed = false;
                return report;
            }
        }
    }
    report.detail = "100 inputs, sampled == mean exactly at sigma = 0";
    report.passed = true;
    return report;
}

OracleReport verify_sgd_reduction(std::uint64_t seed) {
    OracleReport report;
    report.name = "sgd-reduction";

    const auto specs = mlp_spec(LayerKind::StochasticLinear, 6, {5}, 3);
    RngStream init_a(RngStream::derive(seed, "sgdred-init"));
    RngStream init_b(RngStream::derive(seed, "sgdred-init"));
    Network a(specs, init_a, 0.0f);
    Network b(specs, init_b, 0.0f);

    SdrDecayConfig decay;
    decay.alpha = 0.05f;
    decay.beta = 0.0f;
    decay.zeta = 0.9f;
    decay.tau = 7;

    RngStream data_rng(RngStream::derive(seed, "sgdred-data"));
    RngStream noise_a(RngStream::derive(seed, "sgdred-noise"));
    RngStream noise_b(RngStream::derive(seed, "sgdred-noise"));

    for (int step = 1; step <= 200; ++step) {
        Tensor x({4, 6});
        data_rng.fill_normal(x.data);
        std::vector<int> labels;
        for (int i = 0; i < 4; ++i) {
            labels.push_back(static_cast<int>(data_rng.next_below(3)));
        }

        auto run = [&labels, &x](Network& net, RngStream& noise, Tape& tape,
                                 std::vector<LayerNodes>& nodes) {
            const NodeId xn = tape.constant(x);
            const NodeId logits = net.forward_tape(
                tape, xn, ForwardMode::Sampled, noise, true, &nodes);
            const NodeId loss = tape.softmax_xent(logits, labels);
            tape.backward(loss);
        };

        Tape tape_a;
        std::vector<LayerNodes> nodes_a;
        run(a, noise_a, tape_a, nodes_a);
        for (std::size_t l = 0; l < a.layers.size(); ++l) {
            sdr_decay_step(a.layers[l].weight, tape_a.grad(nodes_a[l].w_mu),
                           decay);
            sdr_decay_step(a.layers[l].bias, tape_a.grad(nodes_a[l].b_mu),
                           decay);
            if (step % decay.tau == 0) {
                sdr_decay_anneal(a.layers[l].weight, decay.zeta);
                sdr_decay_anneal(a.layers[l].bias, decay.zeta);
            }
        }

        Tape tape_b;
        std::vector<LayerNodes> nodes_b;
        run(b, noise_b, tape_b, nodes_b);
        for (std::size_t l = 0; l < b.layers.size(); ++l) {
            sgd_step(b.layers[l].weight.mu, tape_b.grad(nodes_b[l].w_mu),
                     decay.alpha);
            sgd_step(b.layers[l].bias.mu, tape_b.grad(nodes_b[l].b_mu),
                     decay.alpha);
        }
    }

    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const auto check = [&report, l](const Tensor& lhs, const Tensor& rhs,
                                        const Tensor& sig, const char* what) {
            for (std::size_t i = 0; i < lhs.data.size(); ++i) {
                if (lhs.data[i] != rhs.data[i]) {
                    std::ostringstream os;
                    os << "layer " << l << " " << what << " element " << i
                       << ": decay-rule " << lhs.data[i] << " vs sgd "
                       << rhs.data[i];
                    report.detail = os.str();
                    return false;
                }
            }
            for (float s : sig.data) {
                if (s != 0.0f) {
                    std::ostringstream os;
                    os << "layer " << l << " " << what
                       << ": sigma drifted to " << s;
                    report.detail = os.str();
                    return false;
                }
            }
            return true;
        };
        if (!check(a.layers[l].weight.mu, b.layers[l].weight.mu,
                   a.layers[l].weight.sigma, "weight") ||
            !check(a.layers[l].bias.mu, b.layers[l].bias.mu,
                   a.layers[l].bias.sigma, "bias")) {
            report.passed = false;
            return report;
        }
    }
    report.detail =
        "200 steps with beta = 0, sigma0 = 0: mu trajectories identical, "
        "sigma pinned at zero";
    report.passed = true;
    return report;
}

OracleReport run_oracle(const std::string& name, std::uint64_t seed) {
    if (name == "risk-identity") return verify_risk_identity(seed);
    if (name == "gradcheck") return verify_gradcheck(seed);
    if (name == "sigma-zero-equivalence") {
        return verify_sigma_zero_equivalence(seed);
    }
    if (name == "sgd-reduction") return verify_sgd_reduction(seed);
    throw ConfigError("unknown oracle \"" + name +
                      "\" (expected risk-identity, gradcheck, "
                      "sigma-zero-equivalence, or sgd-reduction)");
}

}  // namespace sdrnet
