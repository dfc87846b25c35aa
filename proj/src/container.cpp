#include "fisherdoc/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fisherdoc/common.hpp"

namespace fisherdoc {

namespace {

constexpr std::uint8_t kVersion = 1;

class Writer {
public:
    void u8(std::uint8_t v) { bytes.push_back(v); }
    void uint(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
    void raw(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw Error("FDV1: truncated container");
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint64_t uint(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(uint(8)); }
    std::string raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
    bool done() const { return pos == bytes.size(); }

private:
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
};

std::uint64_t product(const std::vector<std::uint64_t>& shape) {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::vector<std::uint64_t> read_shape(Reader& r) {
    const auto ndim = r.u8();
    std::vector<std::uint64_t> shape(ndim);
    for (auto& d : shape) d = r.uint(8);
    return shape;
}

}  // namespace

void Container::put(const std::string& name, const Eigen::MatrixXd& matrix) {
    F64Array a;
    a.shape = {static_cast<std::uint64_t>(matrix.rows()), static_cast<std::uint64_t>(matrix.cols())};
    a.values.reserve(static_cast<std::size_t>(matrix.size()));
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) a.values.push_back(matrix(i, j));
    }
    entries_[name] = std::move(a);
}

void Container::put(const std::string& name, const Eigen::VectorXd& vector) {
    F64Array a;
    a.shape = {static_cast<std::uint64_t>(vector.size())};
    a.values.assign(vector.data(), vector.data() + vector.size());
    entries_[name] = std::move(a);
}

void Container::put(const std::string& name, std::vector<std::string> strings) { entries_[name] = std::move(strings); }

void Container::put(const std::string& name, std::vector<std::int64_t> values) {
    I64Array a;
    a.shape = {static_cast<std::uint64_t>(values.size())};
    a.values = std::move(values);
    entries_[name] = std::move(a);
}

void Container::put_scalar(const std::string& name, double value) {
    entries_[name] = F64Array{{}, {value}};
}

const Container::Entry& Container::entry(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw Error("FDV1: missing entry '" + name + "'");
    return it->second;
}

Eigen::MatrixXd Container::matrix(const std::string& name) const {
    const auto* a = std::get_if<F64Array>(&entry(name));
    if (!a || a->shape.size() != 2) throw Error("FDV1: entry '" + name + "' is not a matrix");
    const auto rows = static_cast<Eigen::Index>(a->shape[0]);
    const auto cols = static_cast<Eigen::Index>(a->shape[1]);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a->values[static_cast<std::size_t>(i * cols + j)];
    }
    return m;
}

Eigen::VectorXd Container::vector(const std::string& name) const {
    const auto* a = std::get_if<F64Array>(&entry(name));
    if (!a || a->shape.size() != 1) throw Error("FDV1: entry '" + name + "' is not a vector");
    return Eigen::Map<const Eigen::VectorXd>(a->values.data(), static_cast<Eigen::Index>(a->values.size()));
}

const std::vector<std::string>& Container::strings(const std::string& name) const {
    const auto* s = std::get_if<std::vector<std::string>>(&entry(name));
    if (!s) throw Error("FDV1: entry '" + name + "' is not a string list");
    return *s;
}

const std::vector<std::int64_t>& Container::integers(const std::string& name) const {
    const auto* a = std::get_if<I64Array>(&entry(name));
    if (!a) throw Error("FDV1: entry '" + name + "' is not an integer array");
    return a->values;
}

double Container::scalar(const std::string& name) const {
    const auto* a = std::get_if<F64Array>(&entry(name));
    if (!a || !a->shape.empty()) throw Error("FDV1: entry '" + name + "' is not a scalar");
    return a->values.front();
}

std::vector<std::uint8_t> Container::to_bytes() const {
    Writer w;
    w.raw("FDV1");
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(kind_));
    w.uint(entries_.size(), 4);
    for (const auto& [name, value] : entries_) {
        w.uint(name.size(), 2);
        w.raw(name);
        if (const auto* a = std::get_if<F64Array>(&value)) {
            w.u8(0);
            w.u8(static_cast<std::uint8_t>(a->shape.size()));
            for (auto d : a->shape) w.uint(d, 8);
            for (double v : a->values) w.f64(v);
        } else if (const auto* s = std::get_if<std::vector<std::string>>(&value)) {
            w.u8(1);
            w.uint(s->size(), 8);
            for (const auto& str : *s) {
                w.uint(str.size(), 4);
                w.raw(str);
            }
        } else {
            const auto& i = std::get<I64Array>(value);
            w.u8(2);
            w.u8(static_cast<std::uint8_t>(i.shape.size()));
            for (auto d : i.shape) w.uint(d, 8);
            for (auto v : i.values) w.uint(static_cast<std::uint64_t>(v), 8);
        }
    }
    return std::move(w.bytes);
}

Container Container::from_bytes(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    if (r.raw(4) != "FDV1") throw Error("FDV1: bad magic bytes");
    if (const auto v = r.u8(); v != kVersion) throw Error("FDV1: unsupported version " + std::to_string(v));
    Container c(static_cast<ContainerKind>(r.u8()));
    const auto count = r.uint(4);
    for (std::uint64_t e = 0; e < count; ++e) {
        const auto name = r.raw(r.uint(2));
        const auto type = r.u8();
        if (type == 0) {
            F64Array a;
            a.shape = read_shape(r);
            const auto n = product(a.shape);
            r.need(n * 8);
            a.values.resize(n);
            for (auto& v : a.values) v = r.f64();
            c.entries_[name] = std::move(a);
        } else if (type == 1) {
            const auto n = r.uint(8);
            std::vector<std::string> s;
            s.reserve(n);
            for (std::uint64_t k = 0; k < n; ++k) s.push_back(r.raw(r.uint(4)));
            c.entries_[name] = std::move(s);
        } else if (type == 2) {
            I64Array a;
            a.shape = read_shape(r);
            const auto n = product(a.shape);
            r.need(n * 8);
            a.values.resize(n);
            for (auto& v : a.values) v = static_cast<std::int64_t>(r.uint(8));
            c.entries_[name] = std::move(a);
        } else {
            throw Error("FDV1: unknown entry type " + std::to_string(type));
        }
    }
    if (!r.done()) throw Error("FDV1: trailing bytes");
    return c;
}

void Container::save(const std::filesystem::path& path) const {
    const auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Container Container::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

Container Container::load(const std::filesystem::path& path, ContainerKind expected) {
    auto c = load(path);
    if (c.kind() != expected) {
        throw Error(path.string() + ": container kind " + std::to_string(static_cast<int>(c.kind())) + ", expected " +
                    std::to_string(static_cast<int>(expected)));
    }
    return c;
}

}  // namespace fisherdoc
