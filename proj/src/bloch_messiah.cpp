#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cvshape/network.hpp"

namespace cvshape {

namespace {

constexpr double kClusterTolerance = 1e-9;

// Greedy Gram-Schmidt over projections of the standard basis onto the column
// span of `subspace`. Each step takes the standard direction with the largest
// residual, so bases of degenerate singular subspaces come out aligned with
// the mode axes whenever the subspace allows it. When `paired` is set every
// chosen vector v also excludes J v from later picks.
std::vector<Vector> canonical_basis(const Matrix &subspace, std::size_t count, bool paired, const Matrix &j) {
    const Eigen::Index dim = subspace.rows();
    const Matrix projector = subspace * subspace.transpose();
    std::vector<Vector> chosen;
    std::vector<Vector> excluded;
    while (chosen.size() < count) {
        Vector best;
        double best_norm = 0.0;
        for (Eigen::Index k = 0; k < dim; ++k) {
            Vector v = projector.col(k);
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto &e : excluded) v -= e.dot(v) * e;
            }
            const double norm = v.norm();
            if (norm > best_norm + 1e-12) {
                best_norm = norm;
                best = v;
            }
        }
        if (best_norm < 1e-6) {
            throw std::runtime_error("bloch_messiah: could not complete a symplectic basis of a degenerate subspace");
        }
        best /= best_norm;
        chosen.push_back(best);
        excluded.push_back(best);
        if (paired) {
            Vector partner = j * best;
            for (const auto &e : excluded) partner -= e.dot(partner) * e;
            partner.normalize();
            excluded.push_back(partner);
        }
    }
    return chosen;
}

}  // namespace

Matrix BlochMessiah::recompose() const { return passive_out * squeeze.asDiagonal() * passive_in; }

BlochMessiah bloch_messiah(const Matrix &s) {
    if (s.rows() != s.cols() || s.rows() == 0 || s.rows() % 2 != 0) {
        throw std::invalid_argument("bloch_messiah: expected a square matrix of even size");
    }
    const auto dim = s.rows();
    const auto n = dim / 2;
    const Matrix j = symplectic_form(static_cast<std::size_t>(n));
    const double scale = std::max(1.0, s.squaredNorm());
    if ((s.transpose() * j * s - j).norm() > 1e-8 * scale) {
        throw std::runtime_error("bloch_messiah: input is not symplectic");
    }

    Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        throw std::runtime_error("bloch_messiah: SVD failed");
    }
    const Vector sigma = svd.singularValues();
    const Matrix &v = svd.matrixV();

    // Group descending singular values into degenerate clusters and pick one
    // vector of each reciprocal pair (d, 1/d) with d >= 1.
    struct Pair {
        double stretch;
        Vector vec;
    };
    std::vector<Pair> pairs;
    Eigen::Index start = 0;
    while (start < dim) {
        Eigen::Index end = start + 1;
        while (end < dim && sigma(start) - sigma(end) <= kClusterTolerance * sigma(start)) ++end;
        const double value = sigma(start);
        const Eigen::Index width = end - start;
        const Matrix block = v.middleCols(start, width);
        if (std::abs(value - 1.0) <= kClusterTolerance) {
            if (width % 2 != 0) throw std::runtime_error("bloch_messiah: unit singular subspace has odd dimension");
            for (auto &vec : canonical_basis(block, static_cast<std::size_t>(width / 2), true, j)) {
                pairs.push_back({1.0, std::move(vec)});
            }
        } else if (value > 1.0) {
            for (auto &vec : canonical_basis(block, static_cast<std::size_t>(width), false, j)) {
                pairs.push_back({value, std::move(vec)});
            }
        }
        start = end;
    }
    if (static_cast<Eigen::Index>(pairs.size()) != n) {
        throw std::runtime_error("bloch_messiah: singular values do not come in reciprocal pairs");
    }

    // Assign each pair to the mode it overlaps most, strongest squeezing first,
    // so an already diagonal input decomposes with identity passive factors.
    std::vector<int> slot_of_pair(pairs.size(), -1);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        int best_mode = -1;
        double best_weight = -1.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            if (taken[static_cast<std::size_t>(m)]) continue;
            const double w = pairs[k].vec(m) * pairs[k].vec(m) + pairs[k].vec(n + m) * pairs[k].vec(n + m);
            if (w > best_weight + 1e-12) {
                best_weight = w;
                best_mode = static_cast<int>(m);
            }
        }
        taken[static_cast<std::size_t>(best_mode)] = true;
        slot_of_pair[k] = best_mode;
    }

    Matrix basis(dim, dim);
    Vector squeeze(dim);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        Vector vec = pairs[k].vec;
        Eigen::Index lead = 0;
        vec.cwiseAbs().maxCoeff(&lead);
        if (vec(lead) < 0) vec = -vec;
        const auto slot = static_cast<Eigen::Index>(slot_of_pair[k]);
        basis.col(slot) = vec;
        basis.col(n + slot) = -j * vec;
        squeeze(slot) = pairs[k].stretch;
        squeeze(n + slot) = 1.0 / pairs[k].stretch;
    }
    if ((basis.transpose() * basis - Matrix::Identity(dim, dim)).norm() > 1e-8) {
        throw std::runtime_error("bloch_messiah: paired singular vectors are not orthonormal");
    }

    BlochMessiah out;
    out.passive_in = basis.transpose();
    out.squeeze = squeeze;
    out.passive_out = s * basis * squeeze.cwiseInverse().asDiagonal();
    return out;
}

Eigen::MatrixXcd passive_to_unitary(const Matrix &o) {
    const auto n = o.rows() / 2;
    Eigen::MatrixXcd u(n, n);
    u.real() = o.topLeftCorner(n, n);
    u.imag() = o.bottomLeftCorner(n, n);
    return u;
}

Matrix unitary_to_passive(const Eigen::MatrixXcd &u) {
    const auto n = u.rows();
    Matrix o(2 * n, 2 * n);
    o.topLeftCorner(n, n) = u.real();
    o.topRightCorner(n, n) = -u.imag();
    o.bottomLeftCorner(n, n) = u.imag();
    o.bottomRightCorner(n, n) = u.real();
    return o;
}

}  // namespace cvshape
