#include "refpred/irt.hpp"

#include <cmath>
#include <stdexcept>

#include "refpred/kernels.hpp"
#include "refpred/rng.hpp"

namespace refpred {

namespace {

bool degenerate(const std::vector<std::uint8_t>& z) {
    bool any0 = false, any1 = false;
    for (std::uint8_t v : z) {
        if (v)
            any1 = true;
        else
            any0 = true;
        if (any0 && any1) return false;
    }
    return true;
}

void check_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw std::runtime_error(std::string("fit_irt: non-finite ") + what);
}

}  // namespace

IrtModel fit_irt(const SuccessMatrix& matrix, std::size_t k, double l2, std::size_t max_iter,
                 double tol, std::uint64_t seed) {
    const std::size_t n = matrix.n_llms(), N = matrix.n_instances();
    if (n == 0 || N == 0) throw std::invalid_argument("fit_irt: empty matrix");
    if (k < 1) throw std::invalid_argument("fit_irt: k must be at least 1");
    const std::vector<std::uint8_t>& z = matrix.values();
    if (degenerate(z))
        throw std::invalid_argument("fit_irt: degenerate matrix (needs at least one 0 and one 1)");

    IrtModel model;
    model.k = k;
    model.seed = seed;
    model.llm_ids = matrix.llm_ids();
    model.instance_ids = matrix.instance_ids();
    model.capabilities = Matrix(n, k);
    model.demands = Matrix(N, k);
    model.intercepts.assign(N, 0.0);

    Rng rng(seed);
    for (double& v : model.capabilities.storage()) v = 0.01 * rng.normal();
    for (double& v : model.demands.storage()) v = 0.01 * rng.normal();
    for (double& v : model.intercepts) v = 0.01 * rng.normal();

    double ll = kernels::irt_penalized_ll(z, n, N, model.capabilities, model.demands,
                                          model.intercepts, l2);
    model.log_likelihood_trace.push_back(ll);

    double step_cap = 1.0, step_item = 1.0;

    // One ascent step on a parameter block; the step is halved until the
    // penalized log-likelihood does not decrease.
    const auto try_block = [&](bool capability_block, double& step) -> bool {
        const kernels::IrtGrad g = kernels::irt_loglik_grad(
            z, n, N, model.capabilities, model.demands, model.intercepts, l2);
        check_finite(g.grad_capabilities, "gradient");
        check_finite(g.grad_demands, "gradient");
        for (std::size_t halvings = 0; halvings < 60; ++halvings) {
            Matrix cap = model.capabilities;
            Matrix dem = model.demands;
            std::vector<double> inter = model.intercepts;
            if (capability_block) {
                for (std::size_t i = 0; i < cap.storage().size(); ++i)
                    cap.storage()[i] += step * g.grad_capabilities.storage()[i];
            } else {
                for (std::size_t i = 0; i < dem.storage().size(); ++i)
                    dem.storage()[i] += step * g.grad_demands.storage()[i];
                for (std::size_t i = 0; i < N; ++i) inter[i] += step * g.grad_intercepts[i];
            }
            const double cand = kernels::irt_penalized_ll(z, n, N, cap, dem, inter, l2);
            if (cand >= ll) {
                model.capabilities = std::move(cap);
                model.demands = std::move(dem);
                model.intercepts = std::move(inter);
                ll = cand;
                step *= 1.5;
                if (step > 10.0) step = 10.0;
                return true;
            }
            step *= 0.5;
        }
        return false;
    };

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const double before = ll;
        const bool moved_cap = try_block(true, step_cap);
        const bool moved_item = try_block(false, step_item);
        model.log_likelihood_trace.push_back(ll);
        if (!moved_cap && !moved_item) {
            model.converged = true;
            break;
        }
        if (ll - before < tol) {
            model.converged = true;
            break;
        }
    }
    return model;
}

FeatureStore item_demands(const IrtModel& model) {
    if (model.k == 0 || model.demands.rows() != model.instance_ids.size())
        throw std::invalid_argument("item_demands: model is not fitted");
    std::vector<std::string> labels(model.instance_ids.size(), std::string());
    return FeatureStore(model.instance_ids, model.demands, std::move(labels));
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : j) rows.push_back(row.get<std::vector<double>>());
    return Matrix::from_rows(rows);
}

}  // namespace

nlohmann::json IrtModel::to_json() const {
    nlohmann::json j;
    j["capabilities"] = matrix_to_json(capabilities);
    j["demands"] = matrix_to_json(demands);
    j["intercepts"] = intercepts;
    j["k"] = k;
    j["seed"] = seed;
    j["llm_ids"] = llm_ids;
    j["instance_ids"] = instance_ids;
    return j;
}

IrtModel IrtModel::from_json(const nlohmann::json& j) {
    IrtModel m;
    m.capabilities = matrix_from_json(j.at("capabilities"));
    m.demands = matrix_from_json(j.at("demands"));
    m.intercepts = j.at("intercepts").get<std::vector<double>>();
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.llm_ids = j.at("llm_ids").get<std::vector<LlmId>>();
    m.instance_ids = j.at("instance_ids").get<std::vector<InstanceId>>();
    return m;
}

}  // namespace refpred
