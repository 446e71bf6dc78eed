#include "sdrnet/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdrnet/errors.hpp"
#include "sdrnet/parallel.hpp"

namespace sdrnet {

const char* attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::Fgsm: return "fgsm";
        case AttackKind::Bim: return "bim";
        case AttackKind::DeepFool: return "deepfool";
        case AttackKind::LocalSearch: return "localsearch";
    }
    throw ContractError("unknown attack kind");
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "fgsm") return AttackKind::Fgsm;
    if (name == "bim") return AttackKind::Bim;
    if (name == "deepfool") return AttackKind::DeepFool;
    if (name == "localsearch") return AttackKind::LocalSearch;
    throw ConfigError("unknown attack \"" + name +
                      "\" (expected fgsm, bim, deepfool, or localsearch)");
}

void AttackConfig::validate() const {
    if (pixel_lo >= pixel_hi) {
        throw ConfigError("pixel bounds must satisfy lo < hi");
    }
    if (kind == AttackKind::Fgsm || kind == AttackKind::Bim) {
        if (epsilon_grid.empty()) throw ConfigError("epsilon grid is empty");
        float prev = -1.0f;
        for (float e : epsilon_grid) {
            if (e < 0.0f) throw ConfigError("epsilon must be nonnegative");
            if (e <= prev) throw ConfigError("epsilon grid must ascend");
            prev = e;
        }
    }
    if (kind == AttackKind::Bim) {
        if (bim_iters < 1) throw ConfigError("bim iterations must be >= 1");
        if (bim_alpha_fraction <= 0.0f) {
            throw ConfigError("bim alpha fraction must be positive");
        }
    }
    if (kind == AttackKind::DeepFool) {
        if (deepfool_max_iters < 1) {
            throw ConfigError("deepfool iterations must be >= 1");
        }
        if (deepfool_overshoot < 0.0f) {
            throw ConfigError("deepfool overshoot must be nonnegative");
        }
    }
    if (kind == AttackKind::LocalSearch) {
        if (ls_t < 1) throw ConfigError("localsearch t must be >= 1");
        if (ls_d < 0) throw ConfigError("localsearch d must be >= 0");
        if (ls_rounds < 1) throw ConfigError("localsearch rounds must be >= 1");
        if (ls_query_cap < 1) throw ConfigError("localsearch query cap must be >= 1");
        if (image_rows < 1 || image_cols < 1) {
            throw ConfigError("localsearch image dimensions must be positive");
        }
    }
}

namespace {

int argmax_row(const Tensor& t, int row) {
    const float* p = t.row_ptr(row);
    int arg = 0;
    for (int c = 1; c < t.cols(); ++c) {
        if (p[c] > p[arg]) arg = c;
    }
    return arg;
}

float sign_of(float v) {
    if (v > 0.0f) return 1.0f;
    if (v < 0.0f) return -1.0f;
    return 0.0f;
}

void clip_pixels(Tensor& x, float lo, float hi) {
    for (float& v : x.data) v = std::clamp(v, lo, hi);
}

}  // namespace

WhiteBox::WhiteBox(const Network& model, ForwardMode mode, RngStream& rng)
    : model_(model), mode_(mode), rng_(rng) {}

Tensor WhiteBox::logits(const Tensor& x) {
    ++queries_;
    return model_.forward_logits(x, mode_, rng_);
}

Tensor WhiteBox::loss_gradient(const Tensor& x, int y) {
    ++queries_;
    Tape tape;
    const NodeId xn = tape.leaf(x);
    const NodeId logits = model_.forward_tape(tape, xn, mode_, rng_, false,
                                              nullptr);
    const NodeId loss = tape.softmax_xent(logits, {y});
    tape.backward(loss);
    return tape.grad(xn);
}

Tensor WhiteBox::Linearization::class_diff_gradient(int k, int base) {
    Tensor seed(logits.shape);
    seed.at(0, k) = 1.0f;
    seed.at(0, base) = -1.0f;
    tape->backward(logits_node, seed);
    return tape->grad(x_node);
}

WhiteBox::Linearization WhiteBox::linearize(const Tensor& x) {
    ++queries_;
    Linearization lin;
    lin.tape = std::make_shared<Tape>();
    lin.x_node = lin.tape->leaf(x);
    lin.logits_node =
        model_.forward_tape(*lin.tape, lin.x_node, mode_, rng_, false, nullptr);
    lin.logits = lin.tape->value(lin.logits_node);
    return lin;
}

BlackBoxProbe::BlackBoxProbe(const Network& model, ForwardMode mode,
                             RngStream& rng)
    : model_(model), mode_(mode), rng_(rng) {}

Tensor BlackBoxProbe::probabilities(const Tensor& rows) {
    queries_ += rows.rows();
    const Tensor logits = model_.forward_logits(rows, mode_, rng_);
    Tensor probs(logits.shape);
    for (int r = 0; r < logits.rows(); ++r) {
        const float* in = logits.row_ptr(r);
        float* out = probs.row_ptr(r);
        float row_max = in[0];
        for (int c = 1; c < logits.cols(); ++c) row_max = std::max(row_max, in[c]);
        double denom = 0.0;
        for (int c = 0; c < logits.cols(); ++c) {
            denom += std::exp(static_cast<double>(in[c]) - row_max);
        }
        for (int c = 0; c < logits.cols(); ++c) {
            out[c] = static_cast<float>(
                std::exp(static_cast<double>(in[c]) - row_max) / denom);
        }
    }
    return probs;
}

Tensor fgsm(WhiteBox& wb, const Tensor& x, int y, float epsilon,
            const AttackConfig& cfg) {
    if (epsilon < 0.0f) throw ContractError("fgsm: epsilon must be >= 0");
    const Tensor g = wb.loss_gradient(x, y);
    Tensor x_adv = x;
    for (std::size_t i = 0; i < x_adv.data.size(); ++i) {
        x_adv.data[i] += epsilon * sign_of(g.data[i]);
    }
    clip_pixels(x_adv, cfg.pixel_lo, cfg.pixel_hi);
    return x_adv;
}

AttackResult fgsm_escalate(WhiteBox& wb, const Tensor& x, int y,
                           const AttackConfig& cfg) {
    const long before = wb.queries();
    AttackResult result;
    for (float epsilon : cfg.epsilon_grid) {
        result.x_adv = fgsm(wb, x, y, epsilon, cfg);
        const Tensor check = wb.logits(result.x_adv);
        if (argmax_row(check, 0) != y) {
            result.epsilon_at_success = epsilon;
            result.attacker_thinks_success = true;
            break;
        }
    }
    result.queries = wb.queries() - before;
    return result;
}

Tensor bim(WhiteBox& wb, const Tensor& x, int y, float epsilon, float alpha,
           int iters, const AttackConfig& cfg) {
    if (alpha > epsilon) {
        throw ContractError("bim: per-step alpha exceeds the epsilon cap");
    }
    Tensor x_adv = x;
    for (int i = 0; i < iters; ++i) {
        const Tensor g = wb.loss_gradient(x_adv, y);
        for (std::size_t j = 0; j < x_adv.data.size(); ++j) {
            const float stepped = x_adv.data[j] + alpha * sign_of(g.data[j]);
            x_adv.data[j] = std::clamp(stepped, x.data[j] - epsilon,
                                       x.data[j] + epsilon);
        }
        clip_pixels(x_adv, cfg.pixel_lo, cfg.pixel_hi);
    }
    return x_adv;
}

AttackResult deepfool(WhiteBox& wb, const Tensor& x, int y,
                      const AttackConfig& cfg) {
    const long before = wb.queries();
    AttackResult result;
    result.x_adv = x;

    const Tensor initial = wb.logits(x);
    if (argmax_row(initial, 0) != y) {
        // Already adversarial relative to the true label; nothing to do.
        result.attacker_thinks_success = true;
        result.queries = wb.queries() - before;
        return result;
    }

    const int classes = initial.cols();
    Tensor x_cur = x;
    Tensor r_total(x.shape);

    for (int iter = 0; iter < cfg.deepfool_max_iters; ++iter) {
        WhiteBox::Linearization lin = wb.linearize(x_cur);
        if (argmax_row(lin.logits, 0) != y) {
            result.attacker_thinks_success = true;
            break;
        }

        int best_class = -1;
        double best_ratio = 0.0;
        Tensor best_w;
        double best_w_sq = 0.0;
        for (int k = 0; k < classes; ++k) {
            if (k == y) continue;
            Tensor w = lin.class_diff_gradient(k, y);
            double w_sq = 0.0;
            for (float v : w.data) w_sq += static_cast<double>(v) * v;
            if (w_sq < 1e-20) continue;
            const double margin = std::fabs(
                static_cast<double>(lin.logits.at(0, k)) - lin.logits.at(0, y));
            const double ratio = margin / std::sqrt(w_sq);
            if (best_class < 0 || ratio < best_ratio) {
                best_class = k;
                best_ratio = ratio;
                best_w = std::move(w);
                best_w_sq = w_sq;
            }
        }

        if (best_class < 0) {
            // Every margin gradient vanished (dead activations); nudge the
            // iterate with tiny noise and try again from a new sample.
            for (std::size_t j = 0; j < x_cur.data.size(); ++j) {
                x_cur.data[j] +=
                    static_cast<float>((wb.rng().uniform() - 0.5) * 2e-3);
            }
            continue;
        }

        const double margin = best_ratio * std::sqrt(best_w_sq);
        const double scale = margin / best_w_sq;
        for (std::size_t j = 0; j < r_total.data.size(); ++j) {
            r_total.data[j] += static_cast<float>(scale) * best_w.data[j];
            x_cur.data[j] = x.data[j] + r_total.data[j];
        }
    }

    result.x_adv = x;
    const float overshoot = 1.0f + cfg.deepfool_overshoot;
    for (std::size_t j = 0; j < r_total.data.size(); ++j) {
        result.x_adv.data[j] += overshoot * r_total.data[j];
    }
    result.queries = wb.queries() - before;
    return result;
}

namespace {

std::vector<int> neighborhood_union(const std::vector<int>& centers, int d,
                                    int rows, int cols) {
    std::vector<int> out;
    for (int p : centers) {
        const int pr = p / cols;
        const int pc = p % cols;
        for (int r = std::max(0, pr - d); r <= std::min(rows - 1, pr + d); ++r) {
            for (int c = std::max(0, pc - d); c <= std::min(cols - 1, pc + d);
                 ++c) {
                out.push_back(r * cols + c);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

AttackResult local_search(BlackBoxProbe& probe, const Tensor& x, int y,
                          const AttackConfig& cfg) {
    const int features = static_cast<int>(x.data.size());
    if (cfg.image_rows * cfg.image_cols != features) {
        throw ContractError("local_search: configured image geometry " +
                            std::to_string(cfg.image_rows) + "x" +
                            std::to_string(cfg.image_cols) +
                            " does not cover " + std::to_string(features) +
                            " pixels");
    }

    const long before = probe.queries();
    AttackResult result;
    Tensor x_work = x;

    // Round 1 considers every pixel, so the first choice is exactly the
    // exhaustive single-pixel optimum.
    std::vector<int> candidates(static_cast<std::size_t>(features));
    std::iota(candidates.begin(), candidates.end(), 0);

    for (int round = 0; round < cfg.ls_rounds; ++round) {
        const long budget_needed =
            static_cast<long>(candidates.size()) + 1;
        if (probe.queries() - before + budget_needed > cfg.ls_query_cap) break;

        Tensor batch({static_cast<int>(candidates.size()), features});
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            float* row = batch.row_ptr(static_cast<int>(i));
            std::copy(x_work.data.begin(), x_work.data.end(), row);
            row[candidates[i]] = cfg.ls_p_val;
        }
        const Tensor probs = probe.probabilities(batch);

        // Order candidates by how little confidence the true class keeps.
        std::vector<int> order(candidates.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const float pa = probs.at(a, y);
            const float pb = probs.at(b, y);
            if (pa != pb) return pa < pb;
            return candidates[static_cast<std::size_t>(a)] <
                   candidates[static_cast<std::size_t>(b)];
        });

        const int keep = std::min<int>(cfg.ls_t,
                                       static_cast<int>(candidates.size()));
        std::vector<int> chosen;
        chosen.reserve(static_cast<std::size_t>(keep));
        for (int i = 0; i < keep; ++i) {
            chosen.push_back(candidates[static_cast<std::size_t>(order[i])]);
        }
        for (int p : chosen) x_work.data[static_cast<std::size_t>(p)] = cfg.ls_p_val;

        Tensor current({1, features});
        std::copy(x_work.data.begin(), x_work.data.end(), current.data.begin());
        const Tensor verdict = probe.probabilities(current);
        if (argmax_row(verdict, 0) != y) {
            result.attacker_thinks_success = true;
            break;
        }

        candidates = neighborhood_union(chosen, cfg.ls_d, cfg.image_rows,
                                        cfg.image_cols);
    }

    result.x_adv = std::move(x_work);
    result.queries = probe.queries() - before;
    return result;
}

namespace {

Tensor sample_row(const Dataset& data, int id) {
    const int features = data.images.cols();
    Tensor x({1, features});
    std::copy(data.images.row_ptr(id), data.images.row_ptr(id) + features,
              x.data.begin());
    return x;
}

AttackResult run_one(const Network& model, ForwardMode mode,
                     const AttackConfig& cfg, const Tensor& x, int y,
                     RngStream& attacker) {
    switch (cfg.kind) {
        case AttackKind::Fgsm: {
            WhiteBox wb(model, mode, attacker);
            return fgsm_escalate(wb, x, y, cfg);
        }
        case AttackKind::Bim: {
            WhiteBox wb(model, mode, attacker);
            const long before = wb.queries();
            AttackResult result;
            const float epsilon = cfg.epsilon_grid.back();
            result.x_adv = bim(wb, x, y, epsilon,
                               epsilon * cfg.bim_alpha_fraction,
                               cfg.bim_iters, cfg);
            const Tensor check = wb.logits(result.x_adv);
            result.attacker_thinks_success = argmax_row(check, 0) != y;
            result.queries = wb.queries() - before;
            return result;
        }
        case AttackKind::DeepFool: {
            WhiteBox wb(model, mode, attacker);
            return deepfool(wb, x, y, cfg);
        }
        case AttackKind::LocalSearch: {
            BlackBoxProbe probe(model, mode, attacker);
            return local_search(probe, x, y, cfg);
        }
    }
    throw ContractError("unknown attack kind");
}

}  // namespace

SuiteResult run_attack_suite(const Network& model, ForwardMode mode,
                             const Dataset& data,
                             const std::vector<AttackConfig>& attacks,
                             std::uint64_t seed) {
    for (const AttackConfig& cfg : attacks) cfg.validate();

    SuiteResult suite;
    const int n = data.size();

    // Clean verdicts use their own stream family so attack order can never
    // perturb them. Per sample: one draw for the clean row.
    const std::uint64_t clean_seed = RngStream::derive(seed, "clean");
    std::vector<int> clean_prediction(static_cast<std::size_t>(n), -1);
    parallel_for(static_cast<std::size_t>(n), 16,
                 [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = begin; id < end; ++id) {
            RngStream rng(clean_seed, id);
            const Tensor x = sample_row(data, static_cast<int>(id));
            const Tensor logits = model.forward_logits(x, mode, rng);
            clean_prediction[id] = argmax_row(logits, 0);
        }
    });
    int clean_hits = 0;
    for (int id = 0; id < n; ++id) {
        if (clean_prediction[static_cast<std::size_t>(id)] ==
            data.labels[static_cast<std::size_t>(id)]) {
            ++clean_hits;
        }
    }
    suite.clean_accuracy = n == 0 ? 0.0 : static_cast<double>(clean_hits) / n;

    for (std::size_t a = 0; a < attacks.size(); ++a) {
        const AttackConfig& cfg = attacks[a];
        AttackOutcome outcome;
        outcome.config = cfg;
        outcome.name = attack_kind_name(cfg.kind);
        outcome.reports.resize(static_cast<std::size_t>(n));

        const std::uint64_t attack_seed = RngStream::derive(
            seed, "attack-" + std::to_string(a) + "-" + outcome.name);

        parallel_for(static_cast<std::size_t>(n), 4,
                     [&](std::size_t begin, std::size_t end) {
            for (std::size_t id = begin; id < end; ++id) {
                RngStream attacker(attack_seed, 2 * id);
                RngStream defender(attack_seed, 2 * id + 1);
                const Tensor x = sample_row(data, static_cast<int>(id));
                const int y = data.labels[id];

                AttackReport& report = outcome.reports[id];
                report.sample_id = static_cast<int>(id);
                report.originally_correct = clean_prediction[id] == y;

                const AttackResult result =
                    run_one(model, mode, cfg, x, y, attacker);

                const Tensor verdict =
                    model.forward_logits(result.x_adv, mode, defender);
                report.final_prediction = argmax_row(verdict, 0);
                report.attack_succeeded = report.final_prediction != y;
                report.linf = linf_distance(result.x_adv, x);
                report.l2 = static_cast<float>(l2_distance(result.x_adv, x));
                report.queries_used = result.queries;
                report.epsilon_at_success = result.epsilon_at_success;
            }
        });

        int hits = 0;
        for (const AttackReport& r : outcome.reports) {
            if (!r.attack_succeeded) ++hits;
            outcome.total_queries += r.queries_used;
        }
        outcome.robust_accuracy =
            n == 0 ? 0.0 : static_cast<double>(hits) / n;
        suite.outcomes.push_back(std::move(outcome));
    }
    return suite;
}

}  // namespace sdrnet
