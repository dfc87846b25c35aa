#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fisherdoc/docvectors.hpp"

namespace fisherdoc {

// ------------------------------------------------------- logistic regression

struct LogregOptions {
    double C = 1.0;             // inverse L2 strength
    int max_iterations = 1000;
    double tolerance = 1e-5;    // on the gradient 2-norm
    int memory = 10;            // L-BFGS history
};

/// Binary logistic model; `intercept` is not penalized.
struct LogisticModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
};

struct LogisticObjective {
    double value = 0.0;
    Eigen::VectorXd gradient;  // weights first, intercept last
};

/// sum_i logloss(y_i, x_i.w + b) + ||w||^2 / (2C) and its gradient at
/// `params` = [w; b]. Labels are 0/1.
template <typename Features>
LogisticObjective logistic_objective(const Features& x, std::span<const int> y, const Eigen::VectorXd& params, double C);

/// Minimizes the objective above with L-BFGS. If the gradient tolerance is
/// not reached the best iterate is returned with a warning.
template <typename Features>
LogisticModel train_logreg(const Features& x, std::span<const int> y, const LogregOptions& options = {});

template <typename Features>
std::vector<int> predict_logreg(const LogisticModel& model, const Features& x);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// ------------------------------------------------------- cross-validation

struct CvReport {
    std::string tag;
    double C = 0.0;
    int epochs = 0;                     // 0 when not applicable
    std::vector<double> fold_accuracy;  // fractions in [0, 1]
    double mean = 0.0;
    double std = 0.0;                   // population std over folds
};

/// Fold id per sample. Each class is shuffled with `seed` and dealt out
/// round-robin, continuing the deal across classes.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

/// Per-fold evaluation callback: returns test accuracy for the given split.
using FoldEvaluator = std::function<double(const std::vector<std::size_t>& train, const std::vector<std::size_t>& test)>;

/// Stratified k-fold driver over an arbitrary evaluator (used when features
/// must be rebuilt per fold, e.g. inferred paragraph vectors).
CvReport cv_with(std::span<const int> labels, int folds, std::uint64_t seed, const FoldEvaluator& evaluate);

/// Train and test features for one fold.
using FoldFeatures = std::function<std::pair<DocumentVectors, DocumentVectors>(const std::vector<std::size_t>& train,
                                                                               const std::vector<std::size_t>& test)>;

/// Stratified k-fold logistic regression at every C of `grid`, building each
/// fold's features once. One report per C, in grid order.
std::vector<CvReport> cv_grid(std::span<const int> labels, int folds, std::uint64_t seed, const FoldFeatures& features,
                              std::span<const double> grid);

/// 10-fold cross-validated logistic regression on fixed features.
CvReport cv10(const DocumentVectors& x, std::span<const int> labels, double C, std::uint64_t seed);

inline const std::vector<double>& default_c_grid() {
    static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    return grid;
}

inline const std::vector<int>& default_epoch_grid() {
    static const std::vector<int> grid{1, 5, 10, 20, 50};
    return grid;
}

std::vector<CvReport> scan_C(const DocumentVectors& x, std::span<const int> labels, std::span<const double> grid,
                             std::uint64_t seed);

/// Evaluates `run(epochs)` at every grid point, in grid order.
std::vector<CvReport> scan_epochs(std::span<const int> grid, const std::function<CvReport(int)>& run);

/// Highest mean accuracy; the earliest grid point wins ties.
const CvReport& best_report(std::span<const CvReport> reports);

// ------------------------------------------------------- clustering

struct KMeansOptions {
    int k = 20;
    int max_iterations = 300;
    double tolerance = 1e-6;  // largest centroid shift
    std::uint64_t seed = 0;
};

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    std::vector<double> inertia;  // after each assignment step
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm from k-means++ seeds. A cluster that loses all its
/// points keeps its previous centroid.
template <typename Features>
KMeansResult kmeans(const Features& x, const KMeansOptions& options);

/// `runs` independent runs; run r uses seed + r.
std::vector<KMeansResult> kmeans_runs(const DocumentVectors& x, int k, int runs, std::uint64_t seed);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// I(A;B) / sqrt(H(A) H(B)); 1 when both labelings are constant, 0 when
/// exactly one is.
double normalized_mutual_information(std::span<const int> a, std::span<const int> b);

struct ClusterReport {
    std::string tag;
    std::vector<double> ari;
    std::vector<double> nmi;
    double ari_mean = 0.0;
    double ari_std = 0.0;
    double nmi_mean = 0.0;
    double nmi_std = 0.0;
};

ClusterReport cluster_report(std::string tag, const std::vector<KMeansResult>& runs, std::span<const int> truth);

double mean(std::span<const double> values);
/// Population standard deviation (divides by n).
double population_std(std::span<const double> values);

}  // namespace fisherdoc
