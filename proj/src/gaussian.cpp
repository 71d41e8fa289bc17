#include "cvshape/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace cvshape {

namespace {

void check_mode(std::size_t n_modes, std::size_t mode, const char *what) {
    if (mode >= n_modes) {
        throw std::out_of_range(std::string(what) + ": mode " + std::to_string(mode) + " out of range for " +
                                std::to_string(n_modes) + " modes");
    }
}

void check_efficiency(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("efficiency must lie in (0, 1], got " + std::to_string(eta));
    }
}

}  // namespace

std::string to_string(Quadrature q) { return q == Quadrature::X ? "x" : "p"; }

Matrix symplectic_form(std::size_t n_modes) {
    const auto n = static_cast<Eigen::Index>(n_modes);
    Matrix j = Matrix::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = Matrix::Identity(n, n);
    j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    return j;
}

Vector LinearForm::coefficients(std::size_t n_modes) const {
    Vector c = Vector::Zero(static_cast<Eigen::Index>(2 * n_modes));
    for (const auto &t : terms) {
        check_mode(n_modes, t.mode, "LinearForm");
        c(static_cast<Eigen::Index>(quadrature_index(n_modes, t.mode, t.quadrature))) += t.coefficient;
    }
    return c;
}

GaussianState::GaussianState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (mean_.size() == 0 || mean_.size() % 2 != 0) {
        throw std::invalid_argument("GaussianState: mean must have even, nonzero length");
    }
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        throw std::invalid_argument("GaussianState: covariance shape does not match mean");
    }
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("GaussianState: covariance is not symmetric");
    }
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

double GaussianState::min_uncertainty_eigenvalue() const {
    const auto n = num_modes();
    Eigen::MatrixXcd h = cov_.cast<std::complex<double>>();
    h += std::complex<double>(0.0, 0.25) * symplectic_form(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

bool GaussianState::is_physical(double tolerance) const { return min_uncertainty_eigenvalue() >= -tolerance; }

Eigen::Matrix2d GaussianState::mode_covariance(std::size_t mode) const {
    check_mode(num_modes(), mode, "mode_covariance");
    const auto x = static_cast<Eigen::Index>(x_index(mode));
    const auto p = static_cast<Eigen::Index>(p_index(mode));
    Eigen::Matrix2d block;
    block << cov_(x, x), cov_(x, p), cov_(p, x), cov_(p, p);
    return block;
}

Eigen::Vector2d GaussianState::mode_mean(std::size_t mode) const {
    check_mode(num_modes(), mode, "mode_mean");
    return {mean_(static_cast<Eigen::Index>(x_index(mode))), mean_(static_cast<Eigen::Index>(p_index(mode)))};
}

std::vector<Eigen::Index> phase_space_indices(std::size_t n_modes, std::span<const std::size_t> modes) {
    std::vector<Eigen::Index> idx;
    idx.reserve(2 * modes.size());
    for (auto m : modes) {
        check_mode(n_modes, m, "phase_space_indices");
        idx.push_back(static_cast<Eigen::Index>(m));
    }
    for (auto m : modes) {
        idx.push_back(static_cast<Eigen::Index>(n_modes + m));
    }
    return idx;
}

GaussianState GaussianState::marginal(std::span<const std::size_t> modes) const {
    if (modes.empty()) {
        throw std::invalid_argument("marginal: empty mode list");
    }
    const auto idx = phase_space_indices(num_modes(), modes);
    return GaussianState(mean_(idx), cov_(idx, idx));
}

GaussianState GaussianState::without_mode(std::size_t mode) const {
    check_mode(num_modes(), mode, "without_mode");
    std::vector<std::size_t> keep;
    for (std::size_t m = 0; m < num_modes(); ++m) {
        if (m != mode) keep.push_back(m);
    }
    return marginal(keep);
}

GaussianState vacuum(std::size_t n_modes) {
    if (n_modes == 0) {
        throw std::invalid_argument("vacuum: need at least one mode");
    }
    const auto d = static_cast<Eigen::Index>(2 * n_modes);
    return GaussianState(Vector::Zero(d), kVacuumVariance * Matrix::Identity(d, d));
}

double squeezed_variance(double db) { return kVacuumVariance * std::pow(10.0, -db / 10.0); }

GaussianState squeezed_vacuum(double db, Quadrature quadrature) {
    if (!(db >= 0.0)) {
        throw std::invalid_argument("squeezed_vacuum: squeezing must be >= 0 dB");
    }
    Matrix cov = Matrix::Zero(2, 2);
    const double sq = squeezed_variance(db);
    const double anti = squeezed_variance(-db);
    cov(0, 0) = quadrature == Quadrature::X ? sq : anti;
    cov(1, 1) = quadrature == Quadrature::X ? anti : sq;
    return GaussianState(Vector::Zero(2), cov);
}

GaussianState tensor(const GaussianState &a, const GaussianState &b) {
    const auto na = static_cast<Eigen::Index>(a.num_modes());
    const auto nb = static_cast<Eigen::Index>(b.num_modes());
    const auto n = na + nb;
    Vector mean(2 * n);
    mean << a.mean().head(na), b.mean().head(nb), a.mean().tail(na), b.mean().tail(nb);

    // Index maps from each factor's xxpp layout into the joint layout.
    auto place = [n](Eigen::Index local, Eigen::Index count, Eigen::Index offset) {
        return local < count ? offset + local : n + offset + (local - count);
    };
    Matrix cov = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index r = 0; r < 2 * na; ++r) {
        for (Eigen::Index c = 0; c < 2 * na; ++c) {
            cov(place(r, na, 0), place(c, na, 0)) = a.cov()(r, c);
        }
    }
    for (Eigen::Index r = 0; r < 2 * nb; ++r) {
        for (Eigen::Index c = 0; c < 2 * nb; ++c) {
            cov(place(r, nb, na), place(c, nb, na)) = b.cov()(r, c);
        }
    }
    return GaussianState(std::move(mean), std::move(cov));
}

SymplecticTransform SymplecticTransform::identity(std::size_t n_modes) {
    const auto d = static_cast<Eigen::Index>(2 * n_modes);
    return {Matrix::Identity(d, d), Vector::Zero(d)};
}

double SymplecticTransform::symplectic_error() const {
    const Matrix j = symplectic_form(num_modes());
    return (matrix.transpose() * j * matrix - j).norm();
}

bool SymplecticTransform::is_symplectic(double tolerance) const { return symplectic_error() <= tolerance; }

SymplecticTransform SymplecticTransform::then(const SymplecticTransform &next) const {
    if (next.matrix.rows() != matrix.rows()) {
        throw std::invalid_argument("SymplecticTransform::then: dimension mismatch");
    }
    return {next.matrix * matrix, next.matrix * shift + next.shift};
}

SymplecticTransform qnd_gate(std::size_t n_modes, std::size_t i, std::size_t j, double gain) {
    check_mode(n_modes, i, "qnd_gate");
    check_mode(n_modes, j, "qnd_gate");
    if (i == j) {
        throw std::invalid_argument("qnd_gate: modes must differ");
    }
    auto t = SymplecticTransform::identity(n_modes);
    const auto n = static_cast<Eigen::Index>(n_modes);
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    t.matrix(n + ii, jj) += gain;
    t.matrix(n + jj, ii) += gain;
    return t;
}

SymplecticTransform beam_splitter(std::size_t n_modes, std::size_t i, std::size_t j, double reflectivity) {
    check_mode(n_modes, i, "beam_splitter");
    check_mode(n_modes, j, "beam_splitter");
    if (i == j) {
        throw std::invalid_argument("beam_splitter: modes must differ");
    }
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
        throw std::invalid_argument("beam_splitter: reflectivity must lie in [0, 1]");
    }
    const double r = std::sqrt(reflectivity);
    const double t = std::sqrt(1.0 - reflectivity);
    auto out = SymplecticTransform::identity(n_modes);
    const auto n = static_cast<Eigen::Index>(n_modes);
    for (Eigen::Index off : {Eigen::Index{0}, n}) {
        const auto a = off + static_cast<Eigen::Index>(i);
        const auto b = off + static_cast<Eigen::Index>(j);
        out.matrix(a, a) = r;
        out.matrix(a, b) = t;
        out.matrix(b, a) = t;
        out.matrix(b, b) = -r;
    }
    return out;
}

SymplecticTransform phase_shift(std::size_t n_modes, std::size_t i, double theta) {
    check_mode(n_modes, i, "phase_shift");
    auto out = SymplecticTransform::identity(n_modes);
    const auto x = static_cast<Eigen::Index>(i);
    const auto p = static_cast<Eigen::Index>(n_modes + i);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    out.matrix(x, x) = c;
    out.matrix(x, p) = s;
    out.matrix(p, x) = -s;
    out.matrix(p, p) = c;
    return out;
}

SymplecticTransform squeezer(std::size_t n_modes, std::size_t i, double db, Quadrature quadrature) {
    check_mode(n_modes, i, "squeezer");
    const double factor = std::pow(10.0, db / 20.0);
    auto out = SymplecticTransform::identity(n_modes);
    const auto x = static_cast<Eigen::Index>(i);
    const auto p = static_cast<Eigen::Index>(n_modes + i);
    out.matrix(x, x) = quadrature == Quadrature::X ? 1.0 / factor : factor;
    out.matrix(p, p) = quadrature == Quadrature::X ? factor : 1.0 / factor;
    return out;
}

SymplecticTransform displacement(std::size_t n_modes, std::size_t mode, Quadrature quadrature, double s) {
    check_mode(n_modes, mode, "displacement");
    auto out = SymplecticTransform::identity(n_modes);
    out.shift(static_cast<Eigen::Index>(quadrature_index(n_modes, mode, quadrature))) = s;
    return out;
}

GaussianState apply(const GaussianState &state, const SymplecticTransform &transform) {
    if (transform.matrix.rows() != state.cov().rows() || transform.matrix.cols() != state.cov().cols() ||
        transform.shift.size() != state.mean().size()) {
        throw std::invalid_argument("apply: transform and state dimensions differ");
    }
    Matrix cov = transform.matrix * state.cov() * transform.matrix.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return GaussianState(transform.matrix * state.mean() + transform.shift, std::move(cov));
}

GaussianState apply_loss(const GaussianState &state, std::size_t mode, double eta) {
    check_mode(state.num_modes(), mode, "apply_loss");
    check_efficiency(eta);
    const double g = std::sqrt(eta);
    const auto x = static_cast<Eigen::Index>(state.x_index(mode));
    const auto p = static_cast<Eigen::Index>(state.p_index(mode));
    Vector mean = state.mean();
    Matrix cov = state.cov();
    mean(x) *= g;
    mean(p) *= g;
    for (auto k : {x, p}) {
        cov.row(k) *= g;
        cov.col(k) *= g;
    }
    cov(x, x) += (1.0 - eta) * kVacuumVariance;
    cov(p, p) += (1.0 - eta) * kVacuumVariance;
    return GaussianState(std::move(mean), std::move(cov));
}

double quadrature_variance(const GaussianState &state, const LinearForm &form) {
    const Vector c = form.coefficients(state.num_modes());
    return c.dot(state.cov() * c);
}

double quadrature_mean(const GaussianState &state, const LinearForm &form) {
    return form.coefficients(state.num_modes()).dot(state.mean());
}

std::string to_string(LossStage stage) {
    switch (stage) {
        case LossStage::Source:
            return "source";
        case LossStage::Propagation:
            return "propagation";
        case LossStage::Detection:
            return "detection";
        case LossStage::FeedforwardTap:
            return "feedforward_tap";
    }
    return "unknown";
}

LossStage loss_stage_from_string(const std::string &name) {
    for (auto s : {LossStage::Source, LossStage::Propagation, LossStage::Detection, LossStage::FeedforwardTap}) {
        if (to_string(s) == name) return s;
    }
    throw std::invalid_argument("unknown loss stage '" + name + "'");
}

LossModel LossModel::uniform(LossStage stage, double eta) {
    LossModel m;
    m.set_stage_default(stage, eta);
    return m;
}

void LossModel::set_stage_default(LossStage stage, double eta) {
    check_efficiency(eta);
    defaults_[stage] = eta;
}

void LossModel::set_efficiency(LossStage stage, int node, double eta) {
    check_efficiency(eta);
    per_node_[stage][node] = eta;
}

double LossModel::efficiency(LossStage stage, int node) const {
    if (auto s = per_node_.find(stage); s != per_node_.end()) {
        if (auto it = s->second.find(node); it != s->second.end()) return it->second;
    }
    if (auto it = defaults_.find(stage); it != defaults_.end()) return it->second;
    return 1.0;
}

double LossModel::composite(int node) const {
    double eta = 1.0;
    for (auto s : {LossStage::Source, LossStage::Propagation, LossStage::Detection, LossStage::FeedforwardTap}) {
        eta *= efficiency(s, node);
    }
    return eta;
}

bool LossModel::is_lossless() const {
    for (const auto &[stage, eta] : defaults_) {
        if (eta != 1.0) return false;
    }
    for (const auto &[stage, nodes] : per_node_) {
        for (const auto &[node, eta] : nodes) {
            if (eta != 1.0) return false;
        }
    }
    return true;
}

}  // namespace cvshape
