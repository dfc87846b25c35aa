#include "fisherdoc/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <type_traits>

#include "fisherdoc/common.hpp"

namespace fisherdoc {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <typename Features>
void check_labels(const Features& x, std::span<const int> y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("logistic regression: feature rows do not match labels");
    for (int v : y) {
        if (v != 0 && v != 1) throw Error("logistic regression: labels must be 0 or 1");
    }
}

template <typename Features>
Eigen::VectorXd dense_row(const Features& x, Eigen::Index i) {
    if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Features>, Features>) {
        return Eigen::VectorXd(x.row(i).transpose().toDense());
    } else {
        return x.row(i).transpose();
    }
}

}  // namespace

template <typename Features>
LogisticObjective logistic_objective(const Features& x, std::span<const int> y, const Eigen::VectorXd& params, double C) {
    check_labels(x, y);
    if (!(C > 0)) throw Error("logistic regression: C must be > 0");
    const Eigen::Index p = x.cols();
    if (params.size() != p + 1) throw Error("logistic regression: parameter vector has the wrong length");
    const auto w = params.head(p);
    const double b = params[p];
    const Eigen::VectorXd z = (x * w).array() + b;
    Eigen::VectorXd residual(z.size());
    LogisticObjective out;
    out.value = w.squaredNorm() / (2.0 * C);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)];
        // -[y log s(z) + (1-y) log s(-z)] = softplus(z) - y z
        out.value += softplus(z[i]) - yi * z[i];
        residual[i] = sigmoid(z[i]) - yi;
    }
    out.gradient.resize(p + 1);
    out.gradient.head(p) = x.transpose() * residual + w / C;
    out.gradient[p] = residual.sum();
    return out;
}

template <typename Features>
LogisticModel train_logreg(const Features& x, std::span<const int> y, const LogregOptions& options) {
    check_labels(x, y);
    const Eigen::Index n = x.cols() + 1;
    Eigen::VectorXd params = Eigen::VectorXd::Zero(n);
    auto current = logistic_objective(x, y, params, options.C);
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
    LogisticModel model;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (current.gradient.norm() < options.tolerance) {
            model.converged = true;
            break;
        }
        // Two-loop recursion.
        Eigen::VectorXd q = current.gradient;
        std::vector<double> alpha(history.size());
        for (std::size_t j = history.size(); j-- > 0;) {
            const auto& [s, yv] = history[j];
            alpha[j] = s.dot(q) / yv.dot(s);
            q -= alpha[j] * yv;
        }
        if (!history.empty()) {
            const auto& [s, yv] = history.back();
            q *= s.dot(yv) / yv.squaredNorm();
        }
        for (std::size_t j = 0; j < history.size(); ++j) {
            const auto& [s, yv] = history[j];
            const double beta = yv.dot(q) / yv.dot(s);
            q += s * (alpha[j] - beta);
        }
        Eigen::VectorXd direction = -q;
        double slope = current.gradient.dot(direction);
        if (!(slope < 0)) {
            history.clear();
            direction = -current.gradient;
            slope = -current.gradient.squaredNorm();
        }
        double step = history.empty() ? std::min(1.0, 1.0 / current.gradient.norm()) : 1.0;
        bool accepted = false;
        LogisticObjective next;
        for (int halving = 0; halving < 60; ++halving) {
            next = logistic_objective(x, y, params + step * direction, options.C);
            if (next.value <= current.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const Eigen::VectorXd s = step * direction;
        const Eigen::VectorXd yv = next.gradient - current.gradient;
        params += s;
        current = std::move(next);
        if (s.dot(yv) > 1e-12 * yv.squaredNorm()) {
            history.emplace_back(s, yv);
            if (static_cast<int>(history.size()) > options.memory) history.pop_front();
        }
    }
    if (!model.converged && current.gradient.norm() < options.tolerance) model.converged = true;
    model.weights = params.head(n - 1);
    model.intercept = params[n - 1];
    model.iterations = it;
    model.objective = current.value;
    model.gradient_norm = current.gradient.norm();
    if (!model.converged) {
        warn("logistic regression did not converge after " + std::to_string(it) +
             " iterations (gradient norm " + std::to_string(model.gradient_norm) + ")");
    }
    return model;
}

template <typename Features>
std::vector<int> predict_logreg(const LogisticModel& model, const Features& x) {
    const Eigen::VectorXd z = (x * model.weights).array() + model.intercept;
    std::vector<int> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = z[i] > 0 ? 1 : 0;
    return out;
}

template LogisticObjective logistic_objective(const Eigen::MatrixXd&, std::span<const int>, const Eigen::VectorXd&, double);
template LogisticObjective logistic_objective(const SparseRowMatrix&, std::span<const int>, const Eigen::VectorXd&, double);
template LogisticModel train_logreg(const Eigen::MatrixXd&, std::span<const int>, const LogregOptions&);
template LogisticModel train_logreg(const SparseRowMatrix&, std::span<const int>, const LogregOptions&);
template std::vector<int> predict_logreg(const LogisticModel&, const Eigen::MatrixXd&);
template std::vector<int> predict_logreg(const LogisticModel&, const SparseRowMatrix&);

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw Error("accuracy: size mismatch or empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw Error("cross-validation: need at least 2 folds");
    if (labels.size() < static_cast<std::size_t>(folds)) throw Error("cross-validation: fewer samples than folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    Rng rng(seed);
    std::vector<int> fold(labels.size());
    std::size_t deal = 0;
    for (auto& [label, members] : by_class) {
        for (std::size_t i = members.size(); i > 1; --i) {
            std::swap(members[i - 1], members[uniform_index(rng, i)]);
        }
        for (std::size_t m : members) fold[m] = static_cast<int>(deal++ % static_cast<std::size_t>(folds));
    }
    return fold;
}

CvReport cv_with(std::span<const int> labels, int folds, std::uint64_t seed, const FoldEvaluator& evaluate) {
    const auto assignment = stratified_folds(labels, folds, seed);
    CvReport report;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == f ? test : train).push_back(i);
        report.fold_accuracy.push_back(evaluate(train, test));
    }
    report.mean = mean(report.fold_accuracy);
    report.std = population_std(report.fold_accuracy);
    return report;
}

namespace {

std::vector<int> pick(std::span<const int> labels, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

}  // namespace

std::vector<CvReport> cv_grid(std::span<const int> labels, int folds, std::uint64_t seed, const FoldFeatures& features,
                              std::span<const double> grid) {
    if (grid.empty()) throw Error("cross-validation: empty C grid");
    const auto assignment = stratified_folds(labels, folds, seed);
    std::vector<CvReport> reports(grid.size());
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == f ? test : train).push_back(i);
        const auto [xtrain, xtest] = features(train, test);
        if (xtrain.rows() != static_cast<Eigen::Index>(train.size()) || xtest.rows() != static_cast<Eigen::Index>(test.size())) {
            throw Error("cross-validation: fold features have the wrong number of rows");
        }
        const auto ytrain = pick(labels, train);
        const auto ytest = pick(labels, test);
        for (std::size_t c = 0; c < grid.size(); ++c) {
            LogregOptions options;
            options.C = grid[c];
            double acc = 0.0;
            if (xtrain.is_sparse) {
                acc = accuracy(predict_logreg(train_logreg(xtrain.sparse, ytrain, options), xtest.sparse), ytest);
            } else {
                acc = accuracy(predict_logreg(train_logreg(xtrain.dense, ytrain, options), xtest.dense), ytest);
            }
            reports[c].fold_accuracy.push_back(acc);
            reports[c].tag = xtrain.method;
        }
    }
    for (std::size_t c = 0; c < grid.size(); ++c) {
        reports[c].C = grid[c];
        reports[c].mean = mean(reports[c].fold_accuracy);
        reports[c].std = population_std(reports[c].fold_accuracy);
    }
    return reports;
}

namespace {

FoldFeatures fixed_features(const DocumentVectors& x) {
    return [&x](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
        return std::pair{select_rows(x, train), select_rows(x, test)};
    };
}

}  // namespace

CvReport cv10(const DocumentVectors& x, std::span<const int> labels, double C, std::uint64_t seed) {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error("cv10: feature rows do not match labels");
    const double grid[] = {C};
    return cv_grid(labels, 10, seed, fixed_features(x), grid).front();
}

std::vector<CvReport> scan_C(const DocumentVectors& x, std::span<const int> labels, std::span<const double> grid,
                             std::uint64_t seed) {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error("scan_C: feature rows do not match labels");
    return cv_grid(labels, 10, seed, fixed_features(x), grid);
}

std::vector<CvReport> scan_epochs(std::span<const int> grid, const std::function<CvReport(int)>& run) {
    std::vector<CvReport> out;
    for (int epochs : grid) {
        auto report = run(epochs);
        report.epochs = epochs;
        out.push_back(std::move(report));
    }
    return out;
}

const CvReport& best_report(std::span<const CvReport> reports) {
    if (reports.empty()) throw Error("best_report: no reports");
    const CvReport* best = &reports[0];
    for (const auto& r : reports) {
        if (r.mean > best->mean) best = &r;
    }
    return *best;
}

// ------------------------------------------------------------ k-means

template <typename Features>
KMeansResult kmeans(const Features& x, const KMeansOptions& options) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = options.k;
    if (k < 1) throw Error("k-means: k must be >= 1");
    if (k > n) throw Error("k-means: k (" + std::to_string(k) + ") exceeds the number of points (" + std::to_string(n) + ")");
    Eigen::VectorXd norms(n);
    for (Eigen::Index i = 0; i < n; ++i) norms[i] = x.row(i).squaredNorm();

    Rng rng(options.seed);
    Eigen::MatrixXd centroids(k, x.cols());
    // k-means++ seeding on squared distances.
    Eigen::Index first = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    centroids.row(0) = dense_row(x, first).transpose();
    auto distances_to = [&](const Eigen::VectorXd& c) {
        Eigen::VectorXd d = (norms.array() - 2.0 * (x * c).array() + c.squaredNorm()).cwiseMax(0.0);
        return d;
    };
    Eigen::VectorXd nearest = distances_to(centroids.row(0).transpose());
    for (Eigen::Index c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Eigen::Index chosen = n - 1;
        if (total > 0) {
            double u = uniform01(rng) * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                u -= nearest[i];
                if (u < 0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = dense_row(x, chosen).transpose();
        nearest = nearest.cwiseMin(distances_to(centroids.row(c).transpose()));
    }

    KMeansResult result;
    result.labels.assign(static_cast<std::size_t>(n), 0);
    for (int it = 0; it < options.max_iterations; ++it) {
        const Eigen::MatrixXd cross = x * centroids.transpose();
        const Eigen::VectorXd cnorm = centroids.rowwise().squaredNorm();
        double inertia = 0.0;
        std::vector<Eigen::Triplet<double>> members;
        members.reserve(static_cast<std::size_t>(n));
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < k; ++c) {
                const double d = norms[i] - 2.0 * cross(i, c) + cnorm[c];
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            result.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
            inertia += std::max(0.0, best_d);
            members.emplace_back(best, i, 1.0);
            counts[best] += 1.0;
        }
        result.inertia.push_back(inertia);
        Eigen::SparseMatrix<double> assign(k, n);
        assign.setFromTriplets(members.begin(), members.end());
        const Eigen::MatrixXd sums = Eigen::MatrixXd(assign * x);
        double shift = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            const Eigen::RowVectorXd updated = sums.row(c) / counts[c];
            shift = std::max(shift, (updated - centroids.row(c)).norm());
            centroids.row(c) = updated;
        }
        result.iterations = it + 1;
        if (shift < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

template KMeansResult kmeans(const Eigen::MatrixXd&, const KMeansOptions&);
template KMeansResult kmeans(const SparseRowMatrix&, const KMeansOptions&);

std::vector<KMeansResult> kmeans_runs(const DocumentVectors& x, int k, int runs, std::uint64_t seed) {
    std::vector<KMeansResult> out;
    for (int r = 0; r < runs; ++r) {
        KMeansOptions options;
        options.k = k;
        options.seed = seed + static_cast<std::uint64_t>(r);
        out.push_back(x.is_sparse ? kmeans(x.sparse, options) : kmeans(x.dense, options));
    }
    return out;
}

namespace {

struct Contingency {
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows;
    std::map<int, double> cols;
    double n = 0.0;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error("clustering metrics: labelings differ in length");
    if (a.empty()) throw Error("clustering metrics: empty labelings");
    Contingency t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        t.cells[{a[i], b[i]}] += 1.0;
        t.rows[a[i]] += 1.0;
        t.cols[b[i]] += 1.0;
    }
    t.n = static_cast<double>(a.size());
    return t;
}

double pairs(double m) { return m * (m - 1.0) / 2.0; }

double entropy(const std::map<int, double>& counts, double n) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= c / n * std::log(c / n);
    return h;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    const auto t = contingency(a, b);
    double index = 0.0;
    for (const auto& [cell, c] : t.cells) index += pairs(c);
    double sa = 0.0;
    double sb = 0.0;
    for (const auto& [label, c] : t.rows) sa += pairs(c);
    for (const auto& [label, c] : t.cols) sb += pairs(c);
    const double total = pairs(t.n);
    const double expected = total > 0 ? sa * sb / total : 0.0;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double normalized_mutual_information(std::span<const int> a, std::span<const int> b) {
    const auto t = contingency(a, b);
    const double ha = entropy(t.rows, t.n);
    const double hb = entropy(t.cols, t.n);
    if (t.rows.size() == 1 && t.cols.size() == 1) return 1.0;
    if (t.rows.size() == 1 || t.cols.size() == 1) return 0.0;
    double mi = 0.0;
    for (const auto& [cell, c] : t.cells) {
        mi += c / t.n * std::log(c * t.n / (t.rows.at(cell.first) * t.cols.at(cell.second)));
    }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

ClusterReport cluster_report(std::string tag, const std::vector<KMeansResult>& runs, std::span<const int> truth) {
    ClusterReport report;
    report.tag = std::move(tag);
    for (const auto& run : runs) {
        report.ari.push_back(adjusted_rand_index(run.labels, truth));
        report.nmi.push_back(normalized_mutual_information(run.labels, truth));
    }
    report.ari_mean = mean(report.ari);
    report.ari_std = population_std(report.ari);
    report.nmi_mean = mean(report.nmi);
    report.nmi_std = population_std(report.nmi);
    return report;
}

}  // namespace fisherdoc
