#include "fisherdoc/mixtures.hpp"

#include "fisherdoc/container.hpp"

namespace fisherdoc {

void save_mixture(const std::filesystem::path& path, const GaussianMixture<double>& gmm) {
    Container c(ContainerKind::gmm);
    c.put("weights", Eigen::VectorXd(gmm.weights));
    c.put("means", Eigen::MatrixXd(gmm.means));
    c.put("variances", Eigen::MatrixXd(gmm.variances));
    c.save(path);
}

void save_mixture(const std::filesystem::path& path, const VmfMixture<double>& vmf) {
    Container c(ContainerKind::vmf);
    c.put("weights", Eigen::VectorXd(vmf.weights));
    c.put("directions", Eigen::MatrixXd(vmf.directions));
    c.put("concentrations", Eigen::VectorXd(vmf.concentrations));
    c.save(path);
}

MixtureFamily mixture_family(const std::filesystem::path& path) {
    const auto c = Container::load(path);
    if (c.kind() == ContainerKind::gmm) return MixtureFamily::gmm;
    if (c.kind() == ContainerKind::vmf) return MixtureFamily::vmf;
    throw Error(path.string() + ": not a mixture file");
}

GaussianMixture<double> load_gmm(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::gmm);
    GaussianMixture<double> g;
    g.weights = c.vector("weights");
    g.means = c.matrix("means");
    g.variances = c.matrix("variances");
    if (g.means.rows() != g.weights.size() || g.variances.rows() != g.weights.size() ||
        g.variances.cols() != g.means.cols()) {
        throw Error(path.string() + ": inconsistent GMM shapes");
    }
    return g;
}

VmfMixture<double> load_vmf(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::vmf);
    VmfMixture<double> v;
    v.weights = c.vector("weights");
    v.directions = c.matrix("directions");
    v.concentrations = c.vector("concentrations");
    if (v.directions.rows() != v.weights.size() || v.concentrations.size() != v.weights.size()) {
        throw Error(path.string() + ": inconsistent moVMF shapes");
    }
    return v;
}

}  // namespace fisherdoc
