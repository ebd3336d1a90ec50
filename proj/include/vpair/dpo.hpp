#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vpair {

// ln(1 + e^x), branching at |x| > 30 so large margins neither overflow
// nor collapse to zero.
double stable_softplus(double x);

// 1 / (1 + e^-x) evaluated through e^-|x| only.
double stable_sigmoid(double x);

struct SequenceLogprob {
    std::vector<double> token_logprobs;
    double total = 0.0;  // left-to-right sum
};

// Accumulates per-token natural-log probabilities. Entries must be finite
// and <= 0; the empty sequence has total 0 (probability one).
SequenceLogprob sequence_logprob(const std::vector<double>& per_token);

struct DpoInputs {
    double policy_chosen_lp = 0.0;
    double ref_chosen_lp = 0.0;
    double policy_rejected_lp = 0.0;
    double ref_rejected_lp = 0.0;
    double beta = 0.1;
};

// z = beta * [(policy - ref) margin of chosen minus that of rejected].
double dpo_margin(const DpoInputs& in);

// -ln sigmoid(z), computed as softplus(-z).
double dpo_loss(const DpoInputs& in);

struct DpoGrad {
    double d_policy_chosen = 0.0;
    double d_policy_rejected = 0.0;  // always the exact negation of the above
};

// Partials with respect to the two policy logprobs; the reference model is
// frozen so its partials are not exposed.
DpoGrad dpo_grad(const DpoInputs& in);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

// Unigram policy over a vocabulary of size K: one logit row shared by every
// position. Smallest model where the sequence-probability factorization and
// the DPO gradient chain are both nontrivial.
struct ToyPolicy {
    int vocab_size = 2;
    Eigen::VectorXd logits;
    double learning_rate = 0.1;

    static ToyPolicy uniform(int vocab_size, double learning_rate);
};

// Sum of log softmax(logits)[t] over the token sequence.
double toy_sequence_logprob(const Eigen::VectorXd& logits, const std::vector<int>& tokens);

struct TokenPair {
    std::vector<int> chosen;
    std::vector<int> rejected;
};

struct TraceStep {
    int step = 0;
    double loss = 0.0;
    double mean_margin = 0.0;
};

struct TrainTrace {
    std::vector<TraceStep> steps;  // steps[0] is the untouched initial point
};

// Plain gradient descent on the mean DPO loss over the pairs, against a
// reference frozen at the policy's entry state. Token ids must be < K.
TrainTrace toy_dpo_train(const std::vector<TokenPair>& pairs, ToyPolicy& policy, int steps,
                         double beta);

// One {"step", "loss", "mean_z"} record per line.
void write_trace_jsonl(const std::filesystem::path& path, const TrainTrace& trace);

}  // namespace vpair
