#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "refpred/matrix.hpp"

namespace refpred {

enum class ClassifierFamily { logreg_l2, logreg_l1, gbdt, constant };

std::string family_name(ClassifierFamily f);
ClassifierFamily family_from_name(const std::string& name);

struct GbdtNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_weight = 0.0;
};

struct GbdtTree {
    std::vector<GbdtNode> nodes;  // root at index 0
    double value(const double* row) const;
};

struct ClassifierSpec {
    ClassifierFamily family = ClassifierFamily::logreg_l2;
    // logistic regression
    double lambda = 1e-2;
    std::size_t max_iter = 1000;
    double tol = 1e-6;
    // gradient boosting
    std::size_t rounds = 200;
    std::size_t max_depth = 4;
    double learning_rate = 0.1;
    double reg_lambda = 1.0;
    double min_child_weight = 1.0;

    std::string id() const;
    nlohmann::json to_json() const;
    static ClassifierSpec from_json(const nlohmann::json& j);
};

// The sweep grid used when a run does not name its own classifiers.
std::vector<ClassifierSpec> default_classifier_grid();

struct TrainedClassifier {
    ClassifierFamily family = ClassifierFamily::constant;
    std::size_t n_features = 0;
    // logistic regression
    std::vector<double> weights;
    double bias = 0.0;
    // gradient boosting
    std::vector<GbdtTree> trees;
    double base_score = 0.0;
    double learning_rate = 0.1;
    // constant fallback
    double constant_prior = 0.5;
    bool fallback_warning = false;

    std::vector<double> loss_trace;  // objective per accepted step / round

    nlohmann::json to_json() const;
    static TrainedClassifier from_json(const nlohmann::json& j);
};

// Minimizes mean logistic loss + lambda * penalty(w), bias unpenalized.
// penalty is the squared l2 norm or the l1 norm depending on the family.
// L2 uses gradient descent with step halving (strictly decreasing objective);
// L1 uses proximal gradient with soft-thresholding.
TrainedClassifier train_logreg(const Matrix& X, const std::vector<std::uint8_t>& y,
                               ClassifierFamily penalty, double lambda,
                               std::size_t max_iter = 1000, double tol = 1e-6);

// Second-order gradient boosting with logistic loss, exact greedy splits on
// midpoints of sorted feature values, and lambda-regularized leaf weights.
TrainedClassifier train_gbdt(const Matrix& X, const std::vector<std::uint8_t>& y,
                             std::size_t rounds = 200, double learning_rate = 0.1,
                             std::size_t max_depth = 4, double reg_lambda = 1.0,
                             double min_child_weight = 1.0);

TrainedClassifier make_constant_classifier(double prior, std::size_t n_features,
                                           bool warning = true);

// Dispatch on spec.family. Throws on single-class labels.
TrainedClassifier train_classifier(const ClassifierSpec& spec, const Matrix& X,
                                   const std::vector<std::uint8_t>& y);

// Success probabilities in (0, 1), one per row of X.
std::vector<double> predict(const TrainedClassifier& model, const Matrix& X);
double predict_one(const TrainedClassifier& model, const std::vector<double>& x);

}  // namespace refpred
