#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fisherdoc {

/// Payload tag stored right after the magic bytes.
enum class ContainerKind : std::uint8_t {
    gmm = 0x01,
    vmf = 0x02,
    tfidf = 0x10,
    lsi = 0x11,
    lda = 0x12,
    paragraph_vectors = 0x13,
    doc_vectors = 0x20,
    inverted_index = 0x30,
};

/// Named-entry binary container.
///
/// Layout, all integers little-endian:
///
///     "FDV1" | u8 version (=1) | u8 kind | u32 entry count | entries…
///     entry  : u16 name length | name bytes | u8 type | payload
///     type 0 : f64 array  -> u8 ndim | u64 dims[ndim] | f64 values (row-major)
///     type 1 : string list-> u64 count | (u32 length | bytes)*
///     type 2 : i64 array  -> u8 ndim | u64 dims[ndim] | i64 values (row-major)
///
/// Entries are written in name order so equal contents give equal bytes.
class Container {
public:
    struct F64Array {
        std::vector<std::uint64_t> shape;
        std::vector<double> values;
    };
    struct I64Array {
        std::vector<std::uint64_t> shape;
        std::vector<std::int64_t> values;
    };
    using Entry = std::variant<F64Array, std::vector<std::string>, I64Array>;

    explicit Container(ContainerKind kind) : kind_(kind) {}

    ContainerKind kind() const { return kind_; }
    bool contains(const std::string& name) const { return entries_.contains(name); }

    void put(const std::string& name, const Eigen::MatrixXd& matrix);
    void put(const std::string& name, const Eigen::VectorXd& vector);
    void put(const std::string& name, std::vector<std::string> strings);
    void put(const std::string& name, std::vector<std::int64_t> values);
    void put_scalar(const std::string& name, double value);

    Eigen::MatrixXd matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;
    const std::vector<std::string>& strings(const std::string& name) const;
    const std::vector<std::int64_t>& integers(const std::string& name) const;
    double scalar(const std::string& name) const;

    std::vector<std::uint8_t> to_bytes() const;
    static Container from_bytes(const std::vector<std::uint8_t>& bytes);

    void save(const std::filesystem::path& path) const;
    static Container load(const std::filesystem::path& path);
    /// Loads and checks the kind tag.
    static Container load(const std::filesystem::path& path, ContainerKind expected);

private:
    const Entry& entry(const std::string& name) const;

    ContainerKind kind_;
    std::map<std::string, Entry> entries_;
};

}  // namespace fisherdoc
