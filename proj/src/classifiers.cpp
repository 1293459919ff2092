#include "refpred/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "refpred/kernels.hpp"
#include "refpred/parallel.hpp"

namespace refpred {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

double class_prior(const std::vector<std::uint8_t>& y) {
    double s = 0.0;
    for (std::uint8_t v : y) s += v;
    return s / static_cast<double>(y.size());
}

void check_two_classes(const std::vector<std::uint8_t>& y, const char* what) {
    bool any0 = false, any1 = false;
    for (std::uint8_t v : y) (v ? any1 : any0) = true;
    if (!any0 || !any1)
        throw std::invalid_argument(std::string(what) + ": single-class labels");
}

void check_inputs(const Matrix& X, const std::vector<std::uint8_t>& y, const char* what) {
    if (X.rows() != y.size())
        throw std::invalid_argument(std::string(what) + ": rows do not match labels");
    if (X.rows() < 2) throw std::invalid_argument(std::string(what) + ": need at least 2 rows");
    if (!X.all_finite()) throw std::invalid_argument(std::string(what) + ": non-finite features");
    check_two_classes(y, what);
}

std::string trim_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string family_name(ClassifierFamily f) {
    switch (f) {
        case ClassifierFamily::logreg_l2: return "logreg_l2";
        case ClassifierFamily::logreg_l1: return "logreg_l1";
        case ClassifierFamily::gbdt: return "gbdt";
        case ClassifierFamily::constant: return "constant";
    }
    return "unknown";
}

ClassifierFamily family_from_name(const std::string& name) {
    if (name == "logreg_l2") return ClassifierFamily::logreg_l2;
    if (name == "logreg_l1") return ClassifierFamily::logreg_l1;
    if (name == "gbdt") return ClassifierFamily::gbdt;
    if (name == "constant") return ClassifierFamily::constant;
    throw std::invalid_argument("unknown classifier family '" + name + "'");
}

std::string ClassifierSpec::id() const {
    // Ids end up in the combo_id column of the report CSV, so no commas.
    std::ostringstream os;
    os << family_name(family);
    if (family == ClassifierFamily::logreg_l2 || family == ClassifierFamily::logreg_l1)
        os << ":lambda=" << trim_number(lambda);
    else if (family == ClassifierFamily::gbdt)
        os << ":depth=" << max_depth << ";rounds=" << rounds;
    return os.str();
}

nlohmann::json ClassifierSpec::to_json() const {
    nlohmann::json j;
    j["family"] = family_name(family);
    j["lambda"] = lambda;
    j["max_iter"] = max_iter;
    j["tol"] = tol;
    j["rounds"] = rounds;
    j["max_depth"] = max_depth;
    j["learning_rate"] = learning_rate;
    j["reg_lambda"] = reg_lambda;
    j["min_child_weight"] = min_child_weight;
    return j;
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
    ClassifierSpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.lambda = j.value("lambda", 1e-2);
    s.max_iter = j.value("max_iter", std::size_t{1000});
    s.tol = j.value("tol", 1e-6);
    s.rounds = j.value("rounds", std::size_t{200});
    s.max_depth = j.value("max_depth", std::size_t{4});
    s.learning_rate = j.value("learning_rate", 0.1);
    s.reg_lambda = j.value("reg_lambda", 1.0);
    s.min_child_weight = j.value("min_child_weight", 1.0);
    return s;
}

std::vector<ClassifierSpec> default_classifier_grid() {
    std::vector<ClassifierSpec> grid;
    for (ClassifierFamily fam : {ClassifierFamily::logreg_l2, ClassifierFamily::logreg_l1}) {
        for (double lam : {1e-4, 1e-3, 1e-2, 1e-1}) {
            ClassifierSpec s;
            s.family = fam;
            s.lambda = lam;
            grid.push_back(s);
        }
    }
    for (std::size_t depth : {2u, 3u}) {
        for (std::size_t rounds : {100u, 200u}) {
            ClassifierSpec s;
            s.family = ClassifierFamily::gbdt;
            s.max_depth = depth;
            s.rounds = rounds;
            grid.push_back(s);
        }
    }
    return grid;
}

TrainedClassifier train_logreg(const Matrix& X, const std::vector<std::uint8_t>& y,
                               ClassifierFamily penalty, double lambda, std::size_t max_iter,
                               double tol) {
    if (penalty != ClassifierFamily::logreg_l2 && penalty != ClassifierFamily::logreg_l1)
        throw std::invalid_argument("train_logreg: penalty must be logreg_l2 or logreg_l1");
    if (lambda < 0.0) throw std::invalid_argument("train_logreg: lambda must be non-negative");
    check_inputs(X, y, "train_logreg");
    const std::size_t d = X.cols();

    TrainedClassifier model;
    model.family = penalty;
    model.n_features = d;
    model.weights.assign(d, 0.0);
    const double prior = clamp_prob(class_prior(y));
    model.bias = std::log(prior / (1.0 - prior));

    const bool l2 = penalty == ClassifierFamily::logreg_l2;
    const auto objective = [&](const std::vector<double>& w, double b) {
        double pen = 0.0;
        for (double v : w) pen += l2 ? v * v : std::fabs(v);
        return kernels::logreg_data_loss(X, y, w, b) + lambda * pen;
    };

    double obj = objective(model.weights, model.bias);
    model.loss_trace.push_back(obj);
    double step = 1.0;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const kernels::LogregGrad g = kernels::logreg_data_grad(X, y, model.weights, model.bias);
        bool accepted = false;
        for (std::size_t halvings = 0; halvings < 60; ++halvings) {
            std::vector<double> w_new(d);
            double b_new;
            if (l2) {
                for (std::size_t j = 0; j < d; ++j)
                    w_new[j] = model.weights[j] -
                               step * (g.grad_w[j] + 2.0 * lambda * model.weights[j]);
                b_new = model.bias - step * g.grad_b;
            } else {
                // Proximal step: gradient move on the smooth part, then
                // soft-thresholding by step * lambda.
                const double thr = step * lambda;
                for (std::size_t j = 0; j < d; ++j) {
                    const double v = model.weights[j] - step * g.grad_w[j];
                    w_new[j] = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
                }
                b_new = model.bias - step * g.grad_b;
            }
            const double cand = objective(w_new, b_new);
            if (cand < obj) {
                const double improvement = obj - cand;
                model.weights = std::move(w_new);
                model.bias = b_new;
                obj = cand;
                model.loss_trace.push_back(obj);
                accepted = true;
                step = std::min(step * 1.5, 1e3);
                if (improvement < tol) return model;
                break;
            }
            step *= 0.5;
            if (step < 1e-20) return model;
        }
        if (!accepted) return model;
    }
    return model;
}

double GbdtTree::value(const double* row) const {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
        const GbdtNode& nd = nodes[static_cast<std::size_t>(idx)];
        idx = row[nd.feature] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(idx)].leaf_weight;
}

namespace {

struct SplitCandidate {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;

    bool better_than(const SplitCandidate& o) const {
        if (gain != o.gain) return gain > o.gain;
        if (feature != o.feature) return feature < o.feature;
        return threshold < o.threshold;
    }
};

struct NodeStats {
    double g = 0.0, h = 0.0;
    int node_id = -1;
};

constexpr double kMinGain = 1e-12;

}  // namespace

TrainedClassifier train_gbdt(const Matrix& X, const std::vector<std::uint8_t>& y,
                             std::size_t rounds, double learning_rate, std::size_t max_depth,
                             double reg_lambda, double min_child_weight) {
    check_inputs(X, y, "train_gbdt");
    const std::size_t m = X.rows(), d = X.cols();
    if (max_depth < 1) throw std::invalid_argument("train_gbdt: max_depth must be at least 1");

    TrainedClassifier model;
    model.family = ClassifierFamily::gbdt;
    model.n_features = d;
    model.learning_rate = learning_rate;
    const double prior = clamp_prob(class_prior(y));
    model.base_score = std::log(prior / (1.0 - prior));

    // Column copies keep the split scans cache-friendly; the presorted
    // orders are reused by every tree. Ties sort by row for determinism.
    std::vector<std::vector<double>> columns(d, std::vector<double>(m));
    std::vector<std::vector<std::uint32_t>> sorted(d);
    parallel_for(d, [&](std::size_t f) {
        std::vector<double>& col = columns[f];
        for (std::size_t i = 0; i < m; ++i) col[i] = X(i, f);
        std::vector<std::uint32_t>& idx = sorted[f];
        idx.resize(m);
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    });

    std::vector<double> raw(m, model.base_score);
    std::vector<double> grad(m), hess(m);

    const auto mean_logloss = [&]() {
        return blocked_sum(m,
                           [&](std::size_t i) {
                               return kernels::log1p_exp(raw[i]) -
                                      static_cast<double>(y[i]) * raw[i];
                           }) /
               static_cast<double>(m);
    };
    model.loss_trace.push_back(mean_logloss());

    for (std::size_t round = 0; round < rounds; ++round) {
        parallel_for(m, [&](std::size_t i) {
            const double p = kernels::sigmoid(raw[i]);
            grad[i] = p - static_cast<double>(y[i]);
            hess[i] = p * (1.0 - p);
        });

        GbdtTree tree;
        std::vector<int> node_of(m, 0);
        {
            double G = 0.0, H = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                G += grad[i];
                H += hess[i];
            }
            GbdtNode root;
            root.leaf_weight = -G / (H + reg_lambda);
            tree.nodes.push_back(root);
        }

        std::vector<NodeStats> level;  // stats of the current frontier
        {
            NodeStats s;
            s.node_id = 0;
            for (std::size_t i = 0; i < m; ++i) {
                s.g += grad[i];
                s.h += hess[i];
            }
            level.push_back(s);
        }

        for (std::size_t depth = 0; depth < max_depth && !level.empty(); ++depth) {
            const std::size_t n_active = level.size();
            std::vector<int> slot_of_node(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < n_active; ++s)
                slot_of_node[static_cast<std::size_t>(level[s].node_id)] = static_cast<int>(s);

            // Best candidate per (feature, node); features scan in parallel,
            // the cross-feature reduction below is serial and ordered.
            std::vector<std::vector<SplitCandidate>> per_feature(d);
            parallel_for(d, [&](std::size_t f) {
                std::vector<SplitCandidate>& best = per_feature[f];
                best.assign(n_active, SplitCandidate{});
                struct Run {
                    double gl = 0.0, hl = 0.0, prev = 0.0;
                    bool has_prev = false;
                };
                std::vector<Run> run(n_active);
                const std::vector<double>& col = columns[f];
                for (std::uint32_t idx : sorted[f]) {
                    const int nd = node_of[idx];
                    if (nd < 0) continue;
                    const int slot = slot_of_node[static_cast<std::size_t>(nd)];
                    if (slot < 0) continue;
                    Run& r = run[static_cast<std::size_t>(slot)];
                    const double val = col[idx];
                    if (r.has_prev && val != r.prev) {
                        const NodeStats& st = level[static_cast<std::size_t>(slot)];
                        const double gl = r.gl, hl = r.hl;
                        const double gr = st.g - gl, hr = st.h - hl;
                        if (hl >= min_child_weight && hr >= min_child_weight) {
                            const double gain =
                                0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) -
                                       st.g * st.g / (st.h + reg_lambda));
                            SplitCandidate cand;
                            cand.gain = gain;
                            cand.feature = static_cast<int>(f);
                            cand.threshold = r.prev + 0.5 * (val - r.prev);
                            if (cand.better_than(best[static_cast<std::size_t>(slot)]))
                                best[static_cast<std::size_t>(slot)] = cand;
                        }
                    }
                    r.gl += grad[idx];
                    r.hl += hess[idx];
                    r.prev = val;
                    r.has_prev = true;
                }
            });

            std::vector<SplitCandidate> chosen(n_active);
            for (std::size_t f = 0; f < d; ++f)
                for (std::size_t s = 0; s < n_active; ++s)
                    if (per_feature[f][s].better_than(chosen[s])) chosen[s] = per_feature[f][s];

            // Apply the accepted splits and build the next frontier.
            std::vector<NodeStats> next_level;
            std::vector<bool> splits_node(tree.nodes.size(), false);
            for (std::size_t s = 0; s < n_active; ++s) {
                if (chosen[s].feature < 0 || chosen[s].gain <= kMinGain) continue;
                const int node_id = level[s].node_id;
                GbdtNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
                nd.feature = chosen[s].feature;
                nd.threshold = chosen[s].threshold;
                nd.left = static_cast<int>(tree.nodes.size());
                nd.right = nd.left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                splits_node[static_cast<std::size_t>(node_id)] = true;

                NodeStats ls, rs;
                ls.node_id = nd.left;
                rs.node_id = nd.right;
                next_level.push_back(ls);
                next_level.push_back(rs);
            }
            if (next_level.empty()) break;

            std::vector<int> next_slot(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < next_level.size(); ++s)
                next_slot[static_cast<std::size_t>(next_level[s].node_id)] = static_cast<int>(s);
            for (std::size_t i = 0; i < m; ++i) {
                const int nd = node_of[i];
                if (nd < 0 || !splits_node[static_cast<std::size_t>(nd)]) {
                    node_of[i] = -1;  // settled in a leaf
                    continue;
                }
                const GbdtNode& parent = tree.nodes[static_cast<std::size_t>(nd)];
                const int child =
                    X(i, static_cast<std::size_t>(parent.feature)) < parent.threshold
                        ? parent.left
                        : parent.right;
                node_of[i] = child;
                NodeStats& st = next_level[static_cast<std::size_t>(next_slot[static_cast<std::size_t>(child)])];
                st.g += grad[i];
                st.h += hess[i];
            }
            for (const NodeStats& st : next_level) {
                tree.nodes[static_cast<std::size_t>(st.node_id)].leaf_weight =
                    -st.g / (st.h + reg_lambda);
            }
            level = std::move(next_level);
        }

        parallel_for(m, [&](std::size_t i) {
            raw[i] += learning_rate * tree.value(X.row_ptr(i));
        });
        model.trees.push_back(std::move(tree));
        model.loss_trace.push_back(mean_logloss());
    }
    return model;
}

TrainedClassifier make_constant_classifier(double prior, std::size_t n_features, bool warning) {
    TrainedClassifier model;
    model.family = ClassifierFamily::constant;
    model.n_features = n_features;
    model.constant_prior = clamp_prob(prior);
    model.fallback_warning = warning;
    return model;
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const Matrix& X,
                                   const std::vector<std::uint8_t>& y) {
    switch (spec.family) {
        case ClassifierFamily::logreg_l2:
        case ClassifierFamily::logreg_l1:
            return train_logreg(X, y, spec.family, spec.lambda, spec.max_iter, spec.tol);
        case ClassifierFamily::gbdt:
            return train_gbdt(X, y, spec.rounds, spec.learning_rate, spec.max_depth,
                              spec.reg_lambda, spec.min_child_weight);
        case ClassifierFamily::constant:
            check_inputs(X, y, "train_classifier");
            return make_constant_classifier(class_prior(y), X.cols(), false);
    }
    throw std::invalid_argument("train_classifier: unknown family");
}

std::vector<double> predict(const TrainedClassifier& model, const Matrix& X) {
    if (model.family != ClassifierFamily::constant && X.cols() != model.n_features)
        throw std::invalid_argument("predict: feature width " + std::to_string(X.cols()) +
                                    " does not match training width " +
                                    std::to_string(model.n_features));
    std::vector<double> out(X.rows());
    switch (model.family) {
        case ClassifierFamily::constant:
            std::fill(out.begin(), out.end(), model.constant_prior);
            break;
        case ClassifierFamily::logreg_l2:
        case ClassifierFamily::logreg_l1: {
            const std::vector<double> z = kernels::logreg_margins(X, model.weights, model.bias);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = clamp_prob(kernels::sigmoid(z[i]));
            break;
        }
        case ClassifierFamily::gbdt:
            parallel_for(X.rows(), [&](std::size_t i) {
                double s = model.base_score;
                for (const GbdtTree& t : model.trees)
                    s += model.learning_rate * t.value(X.row_ptr(i));
                out[i] = clamp_prob(kernels::sigmoid(s));
            });
            break;
    }
    return out;
}

double predict_one(const TrainedClassifier& model, const std::vector<double>& x) {
    Matrix m(1, x.size());
    for (std::size_t j = 0; j < x.size(); ++j) m(0, j) = x[j];
    return predict(model, m)[0];
}

nlohmann::json TrainedClassifier::to_json() const {
    nlohmann::json j;
    j["family"] = family_name(family);
    j["n_features"] = n_features;
    j["fallback_warning"] = fallback_warning;
    switch (family) {
        case ClassifierFamily::logreg_l2:
        case ClassifierFamily::logreg_l1:
            j["weights"] = weights;
            j["bias"] = bias;
            break;
        case ClassifierFamily::gbdt: {
            j["base_score"] = base_score;
            j["learning_rate"] = learning_rate;
            nlohmann::json trees_json = nlohmann::json::array();
            for (const GbdtTree& t : trees) {
                nlohmann::json nodes = nlohmann::json::array();
                for (const GbdtNode& nd : t.nodes) {
                    nlohmann::json n;
                    n["feature"] = nd.feature;
                    n["threshold"] = nd.threshold;
                    n["left"] = nd.left;
                    n["right"] = nd.right;
                    n["leaf_weight"] = nd.leaf_weight;
                    nodes.push_back(std::move(n));
                }
                trees_json.push_back(std::move(nodes));
            }
            j["trees"] = std::move(trees_json);
            break;
        }
        case ClassifierFamily::constant:
            j["prior"] = constant_prior;
            break;
    }
    return j;
}

TrainedClassifier TrainedClassifier::from_json(const nlohmann::json& j) {
    TrainedClassifier m;
    m.family = family_from_name(j.at("family").get<std::string>());
    m.n_features = j.at("n_features").get<std::size_t>();
    m.fallback_warning = j.value("fallback_warning", false);
    switch (m.family) {
        case ClassifierFamily::logreg_l2:
        case ClassifierFamily::logreg_l1:
            m.weights = j.at("weights").get<std::vector<double>>();
            m.bias = j.at("bias").get<double>();
            break;
        case ClassifierFamily::gbdt: {
            m.base_score = j.at("base_score").get<double>();
            m.learning_rate = j.at("learning_rate").get<double>();
            for (const auto& tree_json : j.at("trees")) {
                GbdtTree t;
                for (const auto& n : tree_json) {
                    GbdtNode nd;
                    nd.feature = n.at("feature").get<int>();
                    nd.threshold = n.at("threshold").get<double>();
                    nd.left = n.at("left").get<int>();
                    nd.right = n.at("right").get<int>();
                    nd.leaf_weight = n.at("leaf_weight").get<double>();
                    t.nodes.push_back(nd);
                }
                m.trees.push_back(std::move(t));
            }
            break;
        }
        case ClassifierFamily::constant:
            m.constant_prior = j.at("prior").get<double>();
            break;
    }
    return m;
}

}  // namespace refpred
