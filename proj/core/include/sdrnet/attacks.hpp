#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sdrnet/mnist.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/tape.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {

enum class AttackKind { Fgsm, Bim, DeepFool, LocalSearch };

const char* attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);  // ConfigError

struct AttackConfig {
    AttackKind kind = AttackKind::Fgsm;

    // FGSM escalation / BIM budget, ascending per-pixel caps.
    std::vector<float> epsilon_grid = {0.05f, 0.10f, 0.15f,
                                       0.20f, 0.25f, 0.30f};
    float bim_alpha_fraction = 0.1f;  // per-step size as a fraction of epsilon
    int bim_iters = 20;

    float deepfool_overshoot = 0.02f;
    int deepfool_max_iters = 50;

    float ls_p_val = 1.0f;     // value written into chosen pixels
    int ls_d = 5;              // re-center neighborhood half-width (Chebyshev)
    int ls_t = 5;              // pixels perturbed per round
    int ls_rounds = 150;
    long ls_query_cap = 10000;

    float pixel_lo = 0.0f;
    float pixel_hi = 1.0f;
    int image_rows = 28;  // LocalSearch neighborhood geometry
    int image_cols = 28;

    void validate() const;  // ConfigError on out-of-range fields
};

/// Per-sample outcome. originally_correct and final_prediction come from the
/// defender's own weight draws, never from samples the attacker observed.
struct AttackReport {
    int sample_id = 0;
    bool originally_correct = false;
    bool attack_succeeded = false;  // defender misclassifies x_adv
    int final_prediction = -1;
    float linf = 0.0f;
    float l2 = 0.0f;
    long queries_used = 0;
    float epsilon_at_success = -1.0f;  // FGSM escalation only; -1 otherwise
};

/// Attacker-side handle for gradient attacks. Every query (forward, or
/// forward plus backward) draws a fresh weight sample from the attacker's
/// stream; nothing is cached between queries. queries() counts forward
/// invocations.
class WhiteBox {
public:
    WhiteBox(const Network& model, ForwardMode mode, RngStream& rng);

    /// Sampled logits for a single input row (1 x features). One query.
    Tensor logits(const Tensor& x);

    /// Gradient of the cross-entropy loss at label y with respect to x,
    /// under one fresh weight sample. One query.
    Tensor loss_gradient(const Tensor& x, int y);

    /// One sampled forward whose tape stays alive for per-class input
    /// gradients (the linearization step of boundary-seeking attacks).
    /// One query.
    struct Linearization {
        Tensor logits;
        /// d(f_k - f_base)/dx on the stored tape.
        Tensor class_diff_gradient(int k, int base);

        std::shared_ptr<Tape> tape;
        NodeId x_node = -1;
        NodeId logits_node = -1;
    };
    Linearization linearize(const Tensor& x);

    long queries() const { return queries_; }
    /// The attacker's own stream, for attack-internal randomness beyond
    /// weight sampling (degenerate-gradient fallback noise).
    RngStream& rng() { return rng_; }

private:
    const Network& model_;
    ForwardMode mode_;
    RngStream& rng_;
    long queries_ = 0;
};

/// Probe-only handle for black-box attacks: class probabilities out, nothing
/// else. There is no gradient surface here by construction. Each call draws
/// one fresh weight sample shared by all rows of the batch, and every row
/// counts as one query.
class BlackBoxProbe {
public:
    BlackBoxProbe(const Network& model, ForwardMode mode, RngStream& rng);

    /// Softmax probabilities for each row (n x features -> n x classes).
    Tensor probabilities(const Tensor& rows);

    long queries() const { return queries_; }

private:
    const Network& model_;
    ForwardMode mode_;
    RngStream& rng_;
    long queries_ = 0;
};

/// What an attack handed back, before the defender's verdict.
struct AttackResult {
    Tensor x_adv;
    long queries = 0;
    float epsilon_at_success = -1.0f;
    bool attacker_thinks_success = false;
};

/// x + epsilon * sign(dL/dx), clipped to pixel bounds. One gradient query.
Tensor fgsm(WhiteBox& wb, const Tensor& x, int y, float epsilon,
            const AttackConfig& cfg);

/// Walks the ascending epsilon grid, recomputing the gradient at each step,
/// until a fresh sampled inference misclassifies. Two queries per grid point
/// tried. On exhaustion the largest-epsilon example is returned.
AttackResult fgsm_escalate(WhiteBox& wb, const Tensor& x, int y,
                           const AttackConfig& cfg);

/// Iterated signed steps of size alpha, each clipped into the epsilon ball
/// around x and into pixel bounds. One gradient query per iteration.
Tensor bim(WhiteBox& wb, const Tensor& x, int y, float epsilon, float alpha,
           int iters, const AttackConfig& cfg);

/// Multiclass boundary-seeking attack: per iterate, linearize all class
/// margins against the anchor class y, step to the nearest linearized
/// boundary, stop once a sampled forward flips the prediction. The final
/// perturbation is scaled by (1 + overshoot). Pixel values are not clipped;
/// the perturbation is reported as-is.
AttackResult deepfool(WhiteBox& wb, const Tensor& x, int y,
                      const AttackConfig& cfg);

/// Greedy black-box pixel search: round 1 probes every pixel singly, keeps
/// the t probes that most reduce the true-class probability (ties to the
/// lowest pixel index), writes p_val into those pixels, then re-centers on
/// the Chebyshev d-neighborhoods of the chosen pixels. Stops on a sampled
/// misclassification, after ls_rounds rounds, or at the query cap.
AttackResult local_search(BlackBoxProbe& probe, const Tensor& x, int y,
                          const AttackConfig& cfg);

struct AttackOutcome {
    AttackConfig config;
    std::string name;
    double robust_accuracy = 0.0;  // fraction of samples still correct
    long total_queries = 0;
    std::vector<AttackReport> reports;
};

struct SuiteResult {
    double clean_accuracy = 0.0;  // fraction, same subset and eval mode
    std::vector<AttackOutcome> outcomes;
};

/// Runs every configured attack over the dataset (already subset by the
/// caller). Sample i uses attacker stream 2i and defender stream 2i+1 of a
/// per-attack derived seed, so reports are deterministic and independent of
/// parallel scheduling; they are merged in sample order. Robust accuracy
/// counts all evaluated samples in the denominator.
SuiteResult run_attack_suite(const Network& model, ForwardMode mode,
                             const Dataset& data,
                             const std::vector<AttackConfig>& attacks,
                             std::uint64_t seed);

}  // namespace sdrnet
