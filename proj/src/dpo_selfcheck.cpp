#include "vpair/dpo_selfcheck.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <vector>

#include "vpair/dpo.hpp"

namespace vpair {

namespace {

struct Checker {
    std::ostream& out;
    bool all_ok = true;

    void check(const char* name, bool ok) {
        out << (ok ? "  [ok]   " : "  [FAIL] ") << name << "\n";
        all_ok = all_ok && ok;
    }
};

double fd_loss(DpoInputs in, double DpoInputs::*field, double h) {
    DpoInputs hi = in, lo = in;
    hi.*field += h;
    lo.*field -= h;
    return (dpo_loss(hi) - dpo_loss(lo)) / (2.0 * h);
}

bool close_rel(double a, double b, double rel) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= rel * scale;
}

}  // namespace

bool run_dpo_checks(std::ostream& out) {
    Checker c{out};
    std::mt19937_64 rng(20240611);

    // Closed-form value at zero margin.
    {
        DpoInputs in{-3.0, -3.0, -7.0, -7.0, 0.7};
        c.check("loss at z=0 equals ln 2", std::abs(dpo_loss(in) - std::log(2.0)) < 1e-12);
    }

    // Analytic gradients vs central finite differences.
    {
        std::uniform_real_distribution<double> lp(-50.0, 0.0);
        const double betas[] = {0.01, 0.1, 0.5, 1.0};
        bool ok = true;
        for (int i = 0; i < 1000 && ok; ++i) {
            DpoInputs in{lp(rng), lp(rng), lp(rng), lp(rng), betas[i % 4]};
            DpoGrad g = dpo_grad(in);
            const double h = 1e-6;
            ok = ok && close_rel(g.d_policy_chosen, fd_loss(in, &DpoInputs::policy_chosen_lp, h),
                                 1e-6);
            ok = ok &&
                 close_rel(g.d_policy_rejected, fd_loss(in, &DpoInputs::policy_rejected_lp, h),
                           1e-6);
        }
        c.check("analytic gradient matches finite differences (1000 samples)", ok);
    }

    // Antisymmetry is exact.
    {
        std::uniform_real_distribution<double> lp(-50.0, 0.0);
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            DpoInputs in{lp(rng), lp(rng), lp(rng), lp(rng), 0.1 + 0.3 * (i % 4)};
            DpoGrad g = dpo_grad(in);
            ok = ok && (g.d_policy_chosen + g.d_policy_rejected == 0.0);
        }
        c.check("gradient antisymmetry holds exactly", ok);
    }

    // Translation invariance on exactly representable inputs.
    {
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            auto dyadic = [&] { return -static_cast<double>(rng() % (1 << 20)) / 1048576.0 * 32; };
            DpoInputs in{dyadic(), dyadic(), dyadic(), dyadic(), 0.25};
            double shift = static_cast<double>(rng() % 1024) / 64.0;
            DpoInputs moved = in;
            moved.policy_chosen_lp += shift;
            moved.ref_chosen_lp += shift;
            ok = ok && (dpo_loss(in) == dpo_loss(moved));
        }
        c.check("translation invariance (chosen side) holds exactly", ok);
    }

    // Strictly decreasing in z over a coarse grid.
    {
        bool ok = true;
        double prev = dpo_loss(DpoInputs{-20.0, 0.0, 0.0, 0.0, 1.0});
        for (int z = -10; z <= 20; z += 10) {
            double cur = dpo_loss(DpoInputs{static_cast<double>(z), 0.0, 0.0, 0.0, 1.0});
            ok = ok && cur < prev;
            prev = cur;
        }
        c.check("loss strictly decreasing in margin", ok);
    }

    // Limits: vanishing loss for large positive z, unit slope for large negative z.
    {
        double tiny = dpo_loss(DpoInputs{100.0, 0.0, -100.0, 0.0, 1.0});
        bool ok = tiny < 1e-80 && std::isfinite(tiny) && tiny > 0.0;
        double l1 = dpo_loss(DpoInputs{-200.0, 0.0, 0.0, 0.0, 1.0});
        double l2 = dpo_loss(DpoInputs{-100.0, 0.0, 0.0, 0.0, 1.0});
        double slope = (l2 - l1) / 100.0;
        ok = ok && close_rel(slope, -1.0, 1e-6);
        c.check("limit behavior at large |z|", ok);
    }

    // Beta scaling at z=0.
    {
        bool ok = true;
        for (double beta : {0.01, 0.1, 0.5, 1.0}) {
            DpoInputs in{-4.0, -4.0, -9.0, -9.0, beta};
            ok = ok && std::abs(dpo_loss(in) - std::log(2.0)) < 1e-12;
            DpoGrad g = dpo_grad(in);
            ok = ok && std::abs(g.d_policy_rejected - beta * 0.5) < 1e-15;
        }
        c.check("beta scaling at z=0", ok);
    }

    // Toy training lifts the preferred token.
    {
        ToyPolicy policy = ToyPolicy::uniform(2, 0.1);
        std::vector<TokenPair> pairs = {{{0}, {1}}};
        TrainTrace trace = toy_dpo_train(pairs, policy, 100, 1.0);
        Eigen::VectorXd probs = softmax(policy.logits);
        bool ok = probs[0] > 0.5 && trace.steps.back().mean_margin > 0.0;
        for (std::size_t i = 1; i < trace.steps.size(); ++i) {
            ok = ok && trace.steps[i].mean_margin > trace.steps[i - 1].mean_margin;
            ok = ok && trace.steps[i].loss <= trace.steps[i - 1].loss;
        }
        c.check("toy DPO training raises preferred-token probability", ok);
    }

    // Sequence logprob equals the log of the brute-force probability product.
    {
        ToyPolicy policy = ToyPolicy::uniform(8, 0.1);
        std::uniform_real_distribution<double> noise(-1.0, 1.0);
        for (int i = 0; i < 8; ++i) policy.logits[i] = noise(rng);
        std::uniform_int_distribution<int> tok(0, 7);
        bool ok = true;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> tokens;
            for (int i = 0; i < 20; ++i) tokens.push_back(tok(rng));
            Eigen::VectorXd probs = softmax(policy.logits);
            double product = 1.0;
            for (int t : tokens) product *= probs[t];
            double lp = toy_sequence_logprob(policy.logits, tokens);
            ok = ok && std::abs(lp - std::log(product)) < 1e-12;
        }
        c.check("sequence logprob matches brute-force product", ok);
    }

    out << (c.all_ok ? "dpo-check: PASS\n" : "dpo-check: FAIL\n");
    return c.all_ok;
}

}  // namespace vpair
