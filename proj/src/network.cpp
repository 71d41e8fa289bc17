#include "cvshape/network.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace cvshape {

std::string to_string(PlanProvenance p) {
    switch (p) {
        case PlanProvenance::Canonical:
            return "canonical";
        case PlanProvenance::Compiled:
            return "compiled";
        case PlanProvenance::Preset:
            return "preset";
    }
    return "unknown";
}

SymplecticTransform element_transform(std::size_t n_modes, const InterferometerElement &e) {
    if (const auto *bs = std::get_if<BeamSplitterElement>(&e)) {
        return beam_splitter(n_modes, bs->i, bs->j, bs->reflectivity);
    }
    const auto &ps = std::get<PhaseShiftElement>(e);
    return phase_shift(n_modes, ps.mode, ps.theta);
}

SymplecticTransform NetworkPlan::squeezing_transform() const {
    const auto n = num_modes();
    auto t = SymplecticTransform::identity(n);
    for (std::size_t m = 0; m < n; ++m) {
        t = t.then(squeezer(n, m, squeezers[m].db, squeezers[m].quadrature));
    }
    return t;
}

SymplecticTransform NetworkPlan::interferometer_transform() const {
    const auto n = num_modes();
    auto t = SymplecticTransform::identity(n);
    for (const auto &e : interferometer) t = t.then(element_transform(n, e));
    return t;
}

SymplecticTransform NetworkPlan::total_transform() const { return squeezing_transform().then(interferometer_transform()); }

std::size_t NetworkPlan::count_beam_splitters() const {
    std::size_t count = 0;
    for (const auto &e : interferometer) count += std::holds_alternative<BeamSplitterElement>(e) ? 1 : 0;
    return count;
}

GaussianState prepare(const NetworkPlan &plan) { return apply(vacuum(plan.num_modes()), plan.total_transform()); }

GaussianState prepare(const NetworkPlan &plan, const std::vector<double> &source_eta) {
    if (source_eta.size() != plan.num_modes()) {
        throw std::invalid_argument("prepare: need one source efficiency per mode");
    }
    auto state = apply(vacuum(plan.num_modes()), plan.squeezing_transform());
    for (std::size_t m = 0; m < plan.num_modes(); ++m) {
        if (source_eta[m] != 1.0) state = apply_loss(state, m, source_eta[m]);
    }
    return apply(state, plan.interferometer_transform());
}

std::vector<InterferometerElement> decompose_interferometer(const Eigen::MatrixXcd &u) {
    const auto n = u.rows();
    if (u.cols() != n || (u * u.adjoint() - Eigen::MatrixXcd::Identity(n, n)).norm() > 1e-8) {
        throw std::invalid_argument("decompose_interferometer: matrix is not unitary");
    }
    // Null the sub-diagonal column by column with a phase on row r-1 followed
    // by a splitter on rows (r-1, r): G_K .. G_1 U = diag. Then
    // U = G_1^dag .. G_K^dag diag, and each G^dag is the splitter followed by
    // the conjugate phase.
    struct Nulling {
        std::size_t row;
        double reflectivity;
        double phase;
    };
    std::vector<Nulling> steps;
    Eigen::MatrixXcd work = u;
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        for (Eigen::Index r = n - 1; r > c; --r) {
            const std::complex<double> a = work(r - 1, c);
            const std::complex<double> b = work(r, c);
            if (std::abs(b) < 1e-15) continue;
            const double refl = std::norm(a) / (std::norm(a) + std::norm(b));
            const double phi = std::abs(a) < 1e-15 ? 0.0 : std::arg(a) - std::arg(b);
            const double sr = std::sqrt(refl);
            const double st = std::sqrt(1.0 - refl);
            const std::complex<double> rot = std::polar(1.0, -phi);
            Eigen::RowVectorXcd upper = work.row(r - 1) * rot;
            Eigen::RowVectorXcd lower = work.row(r);
            work.row(r - 1) = sr * upper + st * lower;
            work.row(r) = st * upper - sr * lower;
            steps.push_back({static_cast<std::size_t>(r - 1), refl, phi});
        }
    }

    std::vector<InterferometerElement> out;
    for (Eigen::Index m = 0; m < n; ++m) {
        const double delta = std::arg(work(m, m));
        if (std::abs(delta) > 1e-15) out.emplace_back(PhaseShiftElement{static_cast<std::size_t>(m), -delta});
    }
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        out.emplace_back(BeamSplitterElement{it->row, it->row + 1, it->reflectivity});
        if (std::abs(it->phase) > 1e-15) out.emplace_back(PhaseShiftElement{it->row, -it->phase});
    }
    return out;
}

NetworkPlan compile_network(const ClusterGraph &graph, const std::vector<double> &db) {
    const auto target = canonical_symplectic(graph, db);
    const auto bm = bloch_messiah(target.matrix);
    const auto n = graph.num_nodes();

    NetworkPlan plan;
    plan.provenance = PlanProvenance::Compiled;
    for (std::size_t m = 0; m < n; ++m) {
        // squeeze(m) >= 1 stretches x and compresses p.
        plan.squeezers.push_back({20.0 * std::log10(bm.squeeze(static_cast<Eigen::Index>(m))), Quadrature::P});
    }
    plan.interferometer = decompose_interferometer(passive_to_unitary(bm.passive_out));
    return plan;
}

NetworkPlan preset_paper_network(double db) { return preset_paper_network(std::vector<double>(4, db)); }

NetworkPlan preset_paper_network(const std::vector<double> &db) {
    if (db.size() != 4) throw std::invalid_argument("preset_paper_network: need four squeezing levels");
    constexpr double pi = std::numbers::pi;
    NetworkPlan plan;
    plan.provenance = PlanProvenance::Preset;
    for (double d : db) plan.squeezers.push_back({d, Quadrature::P});
    plan.interferometer = {
        PhaseShiftElement{2, pi / 2},  PhaseShiftElement{3, pi / 2},   BeamSplitterElement{1, 2, 0.2},
        BeamSplitterElement{0, 1, 0.5}, BeamSplitterElement{2, 3, 0.5}, PhaseShiftElement{0, pi},
        PhaseShiftElement{1, pi / 2},  PhaseShiftElement{3, -pi / 2},
    };
    return plan;
}

}  // namespace cvshape
