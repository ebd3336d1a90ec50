#include "vpair/dpo.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

SequenceLogprob sequence_logprob(const std::vector<double>& per_token) {
    SequenceLogprob out;
    out.token_logprobs = per_token;
    for (std::size_t i = 0; i < per_token.size(); ++i) {
        double lp = per_token[i];
        if (!std::isfinite(lp) || lp > 0.0) {
            throw DomainError("token logprob " + std::to_string(i) +
                              " is not a finite value <= 0: " + std::to_string(lp));
        }
        out.total += lp;
    }
    return out;
}

double dpo_margin(const DpoInputs& in) {
    return in.beta * ((in.policy_chosen_lp - in.ref_chosen_lp) -
                      (in.policy_rejected_lp - in.ref_rejected_lp));
}

double dpo_loss(const DpoInputs& in) {
    return stable_softplus(-dpo_margin(in));
}

DpoGrad dpo_grad(const DpoInputs& in) {
    // dL/dz = -(1 - sigmoid(z)) = -sigmoid(-z); sigmoid(-z) keeps precision
    // where 1 - sigmoid(z) would round to zero.
    double g = in.beta * stable_sigmoid(-dpo_margin(in));
    return DpoGrad{-g, g};
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    double m = logits.maxCoeff();
    double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    return log_softmax(logits).array().exp();
}

ToyPolicy ToyPolicy::uniform(int vocab_size, double learning_rate) {
    ToyPolicy p;
    p.vocab_size = vocab_size;
    p.logits = Eigen::VectorXd::Zero(vocab_size);
    p.learning_rate = learning_rate;
    return p;
}

namespace {

void check_tokens(const std::vector<int>& tokens, int vocab_size) {
    for (int t : tokens) {
        if (t < 0 || t >= vocab_size) {
            throw DomainError("token id " + std::to_string(t) + " outside vocabulary of size " +
                              std::to_string(vocab_size));
        }
    }
}

}  // namespace

double toy_sequence_logprob(const Eigen::VectorXd& logits, const std::vector<int>& tokens) {
    Eigen::VectorXd lsm = log_softmax(logits);
    double total = 0.0;
    for (int t : tokens) {
        total += lsm[t];
    }
    return total;
}

TrainTrace toy_dpo_train(const std::vector<TokenPair>& pairs, ToyPolicy& policy, int steps,
                         double beta) {
    if (steps < 0) {
        throw DomainError("steps must be >= 0");
    }
    const int k = policy.vocab_size;
    for (const auto& pair : pairs) {
        check_tokens(pair.chosen, k);
        check_tokens(pair.rejected, k);
    }

    const Eigen::VectorXd ref_logits = policy.logits;  // frozen reference
    std::vector<double> ref_chosen(pairs.size()), ref_rejected(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ref_chosen[i] = toy_sequence_logprob(ref_logits, pairs[i].chosen);
        ref_rejected[i] = toy_sequence_logprob(ref_logits, pairs[i].rejected);
    }

    // Token count histogram per sequence, reused every step.
    auto counts_of = [k](const std::vector<int>& tokens) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
        for (int t : tokens) c[t] += 1.0;
        return c;
    };
    std::vector<Eigen::VectorXd> chosen_counts, rejected_counts;
    chosen_counts.reserve(pairs.size());
    rejected_counts.reserve(pairs.size());
    for (const auto& pair : pairs) {
        chosen_counts.push_back(counts_of(pair.chosen));
        rejected_counts.push_back(counts_of(pair.rejected));
    }

    struct Forward {
        double mean_loss;
        double mean_margin;
        Eigen::VectorXd mean_grad;
    };
    auto forward = [&](const Eigen::VectorXd& logits) {
        Eigen::VectorXd probs = softmax(logits);
        Eigen::VectorXd lsm = log_softmax(logits);
        Forward f{0.0, 0.0, Eigen::VectorXd::Zero(k)};
        if (pairs.empty()) return f;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            double lp_chosen = 0.0, lp_rejected = 0.0;
            for (int t : pairs[i].chosen) lp_chosen += lsm[t];
            for (int t : pairs[i].rejected) lp_rejected += lsm[t];
            DpoInputs in{lp_chosen, ref_chosen[i], lp_rejected, ref_rejected[i], beta};
            double z = dpo_margin(in);
            DpoGrad g = dpo_grad(in);
            // d lp(seq)/d logits_j = count_j - n * p_j for a unigram policy.
            double n_chosen = static_cast<double>(pairs[i].chosen.size());
            double n_rejected = static_cast<double>(pairs[i].rejected.size());
            f.mean_grad += g.d_policy_chosen * (chosen_counts[i] - n_chosen * probs);
            f.mean_grad += g.d_policy_rejected * (rejected_counts[i] - n_rejected * probs);
            f.mean_loss += dpo_loss(in);
            f.mean_margin += z;
        }
        double inv = 1.0 / static_cast<double>(pairs.size());
        f.mean_loss *= inv;
        f.mean_margin *= inv;
        f.mean_grad *= inv;
        return f;
    };

    TrainTrace trace;
    Forward cur = forward(policy.logits);
    trace.steps.push_back({0, cur.mean_loss, cur.mean_margin});
    for (int s = 1; s <= steps; ++s) {
        policy.logits -= policy.learning_rate * cur.mean_grad;
        cur = forward(policy.logits);
        trace.steps.push_back({s, cur.mean_loss, cur.mean_margin});
    }
    return trace;
}

void write_trace_jsonl(const std::filesystem::path& path, const TrainTrace& trace) {
    std::ostringstream out;
    for (const TraceStep& step : trace.steps) {
        nlohmann::json j = {{"step", step.step}, {"loss", step.loss},
                            {"mean_z", step.mean_margin}};
        out << j.dump() << '\n';
    }
    atomic_write_text_file(path, out.str());
}

}  // namespace vpair
