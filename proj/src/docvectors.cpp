#include "fisherdoc/docvectors.hpp"

#include "fisherdoc/common.hpp"
#include "fisherdoc/container.hpp"

namespace fisherdoc {

std::optional<Eigen::Index> DocumentVectors::find(const std::string& id) const {
    if (lookup_.size() != ids.size()) {
        lookup_.clear();
        for (std::size_t i = 0; i < ids.size(); ++i) lookup_.emplace(ids[i], static_cast<Eigen::Index>(i));
    }
    const auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

namespace {

double row_dot(const DocumentVectors& a, Eigen::Index i, const DocumentVectors& b, Eigen::Index j) {
    if (!a.is_sparse && !b.is_sparse) return a.dense.row(i).dot(b.dense.row(j));
    if (a.is_sparse && b.is_sparse) return a.sparse.row(i).dot(b.sparse.row(j));
    if (a.is_sparse) {
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(a.sparse, i); it; ++it) s += it.value() * b.dense(j, it.col());
        return s;
    }
    return row_dot(b, j, a, i);
}

double row_norm(const DocumentVectors& a, Eigen::Index i) {
    return a.is_sparse ? a.sparse.row(i).norm() : a.dense.row(i).norm();
}

}  // namespace

double DocumentVectors::cosine(Eigen::Index row, const DocumentVectors& other, Eigen::Index other_row) const {
    if (dim() != other.dim()) throw Error("cosine between vectors of different dimension");
    const double na = row_norm(*this, row);
    const double nb = row_norm(other, other_row);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return row_dot(*this, row, other, other_row) / (na * nb);
}

void DocumentVectors::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::doc_vectors);
    c.put("ids", ids);
    c.put("method", std::vector<std::string>{method});
    c.put("flagged", flagged);
    if (is_sparse) {
        SparseRowMatrix m = sparse;
        m.makeCompressed();
        std::vector<std::int64_t> shape{m.rows(), m.cols()};
        std::vector<std::int64_t> indptr(m.outerIndexPtr(), m.outerIndexPtr() + m.rows() + 1);
        std::vector<std::int64_t> indices(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
        c.put("shape", shape);
        c.put("indptr", indptr);
        c.put("indices", indices);
        c.put("data", Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.valuePtr(), m.nonZeros())));
    } else {
        c.put("values", dense);
    }
    c.save(path);
}

DocumentVectors DocumentVectors::load(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::doc_vectors);
    DocumentVectors v;
    v.ids = c.strings("ids");
    v.method = c.strings("method").at(0);
    v.flagged = c.integers("flagged");
    if (c.contains("values")) {
        v.dense = c.matrix("values");
    } else {
        v.is_sparse = true;
        const auto& shape = c.integers("shape");
        const auto& indptr = c.integers("indptr");
        const auto& indices = c.integers("indices");
        const auto data = c.vector("data");
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(data.size()));
        for (std::int64_t r = 0; r < shape.at(0); ++r) {
            for (auto k = indptr[static_cast<std::size_t>(r)]; k < indptr[static_cast<std::size_t>(r + 1)]; ++k) {
                triplets.emplace_back(static_cast<int>(r), static_cast<int>(indices[static_cast<std::size_t>(k)]),
                                      data[static_cast<Eigen::Index>(k)]);
            }
        }
        v.sparse.resize(shape.at(0), shape.at(1));
        v.sparse.setFromTriplets(triplets.begin(), triplets.end());
    }
    if (static_cast<Eigen::Index>(v.ids.size()) != v.rows()) throw Error(path.string() + ": id count does not match rows");
    return v;
}

DocumentVectors make_dense(std::vector<std::string> ids, Eigen::MatrixXd values, std::string method) {
    if (static_cast<Eigen::Index>(ids.size()) != values.rows()) throw Error("make_dense: id count does not match the rows");
    DocumentVectors v;
    v.ids = std::move(ids);
    v.dense = std::move(values);
    v.method = std::move(method);
    for (Eigen::Index i = 0; i < v.dense.rows(); ++i) {
        if (v.dense.row(i).isZero(0.0)) v.flagged.push_back(i);
    }
    return v;
}

DocumentVectors make_sparse(std::vector<std::string> ids, SparseRowMatrix values, std::string method) {
    if (static_cast<Eigen::Index>(ids.size()) != values.rows()) throw Error("make_sparse: id count does not match the rows");
    DocumentVectors v;
    v.ids = std::move(ids);
    v.sparse = std::move(values);
    v.sparse.makeCompressed();
    v.is_sparse = true;
    v.method = std::move(method);
    for (Eigen::Index i = 0; i < v.sparse.rows(); ++i) {
        if (v.sparse.row(i).nonZeros() == 0) v.flagged.push_back(i);
    }
    return v;
}

DocumentVectors select_rows(const DocumentVectors& vectors, const std::vector<std::size_t>& rows) {
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (auto r : rows) ids.push_back(vectors.ids.at(r));
    if (vectors.is_sparse) {
        SparseRowMatrix m(static_cast<Eigen::Index>(rows.size()), vectors.sparse.cols());
        std::vector<Eigen::Triplet<double>> triplets;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (SparseRowMatrix::InnerIterator it(vectors.sparse, static_cast<Eigen::Index>(rows[i])); it; ++it) {
                triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
            }
        }
        m.setFromTriplets(triplets.begin(), triplets.end());
        return make_sparse(std::move(ids), std::move(m), vectors.method);
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), vectors.dense.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vectors.dense.row(static_cast<Eigen::Index>(rows[i]));
    return make_dense(std::move(ids), std::move(m), vectors.method);
}

DocumentVectors l2_normalized(const DocumentVectors& vectors) {
    DocumentVectors out = vectors;
    if (out.is_sparse) {
        for (Eigen::Index r = 0; r < out.sparse.outerSize(); ++r) {
            const double n = out.sparse.row(r).norm();
            if (n == 0.0) continue;
            for (SparseRowMatrix::InnerIterator it(out.sparse, r); it; ++it) it.valueRef() /= n;
        }
    } else {
        for (Eigen::Index r = 0; r < out.dense.rows(); ++r) {
            const double n = out.dense.row(r).norm();
            if (n > 0.0) out.dense.row(r) /= n;
        }
    }
    return out;
}

}  // namespace fisherdoc
