#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "refpred/core.hpp"
#include "refpred/matrix.hpp"

namespace refpred {

// Multidimensional two-parameter logistic item-response model: the success
// probability of LLM j on item i is sigma(theta_j . a_i + b_i).
struct IrtModel {
    Matrix capabilities;             // n x k, one row per LLM
    Matrix demands;                  // N x k, one row per instance
    std::vector<double> intercepts;  // length N
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<LlmId> llm_ids;
    std::vector<InstanceId> instance_ids;
    std::vector<double> log_likelihood_trace;  // penalized, per accepted iteration
    bool converged = false;

    nlohmann::json to_json() const;
    static IrtModel from_json(const nlohmann::json& j);
};

// Fits by alternating full-batch gradient ascent on the l2-penalized
// Bernoulli log-likelihood, with step halving so every accepted step is
// non-decreasing. Deterministic for a fixed seed.
IrtModel fit_irt(const SuccessMatrix& matrix, std::size_t k = 10, double l2 = 1e-2,
                 std::size_t max_iter = 500, double tol = 1e-5, std::uint64_t seed = 0);

// The fitted per-instance demand vectors as a feature store (width k),
// keyed by the matrix's instance ids in their original order.
FeatureStore item_demands(const IrtModel& model);

}  // namespace refpred
