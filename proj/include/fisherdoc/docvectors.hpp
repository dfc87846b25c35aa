#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace fisherdoc {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseVector = Eigen::SparseVector<double>;

/// A batch of fixed-length document representations, one row per document.
///
/// Exactly one of `dense` / `sparse` holds the values. `method` records the
/// producing representation; `flagged` lists rows that came out degenerate
/// (empty or all out-of-vocabulary documents).
struct DocumentVectors {
    std::vector<std::string> ids;
    Eigen::MatrixXd dense;
    SparseRowMatrix sparse;
    bool is_sparse = false;
    std::string method;
    std::vector<std::int64_t> flagged;

    Eigen::Index rows() const { return is_sparse ? sparse.rows() : dense.rows(); }
    Eigen::Index dim() const { return is_sparse ? sparse.cols() : dense.cols(); }

    /// Row lookup by document id.
    std::optional<Eigen::Index> find(const std::string& id) const;

    /// Cosine similarity between row `row` and row `other_row` of `other`;
    /// 0 when either side is the zero vector.
    double cosine(Eigen::Index row, const DocumentVectors& other, Eigen::Index other_row) const;

    void save(const std::filesystem::path& path) const;
    static DocumentVectors load(const std::filesystem::path& path);

private:
    mutable std::unordered_map<std::string, Eigen::Index> lookup_;
};

DocumentVectors make_dense(std::vector<std::string> ids, Eigen::MatrixXd values, std::string method);
DocumentVectors make_sparse(std::vector<std::string> ids, SparseRowMatrix values, std::string method);

/// Copy with every non-zero row scaled to unit L2 norm.
DocumentVectors l2_normalized(const DocumentVectors& vectors);

/// Rows selected by index, preserving order.
DocumentVectors select_rows(const DocumentVectors& vectors, const std::vector<std::size_t>& rows);

}  // namespace fisherdoc
