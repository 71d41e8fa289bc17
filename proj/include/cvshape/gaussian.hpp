#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cvshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Quadratures follow a = x + i p with [x_i, p_j] = i delta_ij / 2, so the
// vacuum variance of every quadrature is 1/4. Phase-space vectors are ordered
// (x_1 .. x_N, p_1 .. p_N).
inline constexpr double kVacuumVariance = 0.25;
inline constexpr double kPhysicalityTolerance = 1e-9;
inline constexpr double kSymplecticTolerance = 1e-10;

enum class Quadrature { X, P };

std::string to_string(Quadrature q);

/// Index of quadrature `q` of mode `mode` in an xxpp phase-space vector.
inline std::size_t quadrature_index(std::size_t n_modes, std::size_t mode, Quadrature q) {
    return q == Quadrature::X ? mode : n_modes + mode;
}

/// The symplectic form J = [[0, I], [-I, 0]] for `n_modes` modes in xxpp order.
Matrix symplectic_form(std::size_t n_modes);

/// One term c * q_mode of a real linear combination of quadratures.
struct QuadratureTerm {
    std::size_t mode;
    Quadrature quadrature;
    double coefficient;
};

/// Linear combination of quadratures addressed by mode index.
struct LinearForm {
    std::vector<QuadratureTerm> terms;

    /// Dense coefficient vector in xxpp order. Throws if a term is out of range.
    Vector coefficients(std::size_t n_modes) const;
};

/// Mean vector and covariance matrix of an N-mode Gaussian state.
class GaussianState {
   public:
    /// Throws std::invalid_argument on dimension mismatch or an asymmetric covariance.
    GaussianState(Vector mean, Matrix cov);

    std::size_t num_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
    const Vector &mean() const { return mean_; }
    const Matrix &cov() const { return cov_; }

    std::size_t x_index(std::size_t mode) const { return quadrature_index(num_modes(), mode, Quadrature::X); }
    std::size_t p_index(std::size_t mode) const { return quadrature_index(num_modes(), mode, Quadrature::P); }

    /// Smallest eigenvalue of cov + (i/4) J. Non-negative for physical states.
    double min_uncertainty_eigenvalue() const;
    bool is_physical(double tolerance = kPhysicalityTolerance) const;

    /// 2x2 covariance block (x, p) of one mode.
    Eigen::Matrix2d mode_covariance(std::size_t mode) const;
    Eigen::Vector2d mode_mean(std::size_t mode) const;

    /// Reduced state on `modes`, in the given order.
    GaussianState marginal(std::span<const std::size_t> modes) const;
    GaussianState without_mode(std::size_t mode) const;

   private:
    Vector mean_;
    Matrix cov_;
};

/// Phase-space indices (xxpp) belonging to `modes` of an n-mode state, in mode order.
std::vector<Eigen::Index> phase_space_indices(std::size_t n_modes, std::span<const std::size_t> modes);

GaussianState vacuum(std::size_t n_modes);

/// Pure single-mode squeezed vacuum with `db` of noise reduction in `quadrature`.
GaussianState squeezed_vacuum(double db, Quadrature quadrature);

/// Variance of a quadrature squeezed by `db` (negative db gives anti-squeezing).
double squeezed_variance(double db);

/// Tensor product a (x) b; modes of `a` come first.
GaussianState tensor(const GaussianState &a, const GaussianState &b);

/// Affine phase-space map r -> S r + d.
struct SymplecticTransform {
    Matrix matrix;
    Vector shift;

    static SymplecticTransform identity(std::size_t n_modes);

    std::size_t num_modes() const { return static_cast<std::size_t>(matrix.rows() / 2); }

    /// || S^T J S - J ||_F.
    double symplectic_error() const;
    bool is_symplectic(double tolerance = kSymplecticTolerance) const;

    /// The transform that applies `*this` first and `next` second.
    SymplecticTransform then(const SymplecticTransform &next) const;
};

/// QND (C_Z type) coupling: p_i += gain * x_j, p_j += gain * x_i, x unchanged.
SymplecticTransform qnd_gate(std::size_t n_modes, std::size_t i, std::size_t j, double gain = 1.0);

/// Real beam splitter [[sqrt(r), sqrt(1-r)], [sqrt(1-r), -sqrt(r)]] acting
/// identically on (x_i, x_j) and (p_i, p_j). It is its own inverse.
SymplecticTransform beam_splitter(std::size_t n_modes, std::size_t i, std::size_t j, double reflectivity);

/// Rotation of mode i: x -> x cos(t) + p sin(t), p -> -x sin(t) + p cos(t).
/// A quarter turn maps x to p and p to -x; on the annihilation operator it is a -> exp(-i t) a.
SymplecticTransform phase_shift(std::size_t n_modes, std::size_t i, double theta);

/// Single-mode squeezer reducing the variance of `quadrature` of mode i by `db`.
SymplecticTransform squeezer(std::size_t n_modes, std::size_t i, double db, Quadrature quadrature);

/// Shift of one quadrature: q_mode -> q_mode + s. With q = P this is Z_mode(s).
SymplecticTransform displacement(std::size_t n_modes, std::size_t mode, Quadrature quadrature, double s);

/// mean -> S mean + d, cov -> S cov S^T.
GaussianState apply(const GaussianState &state, const SymplecticTransform &transform);

/// Pure-loss channel of efficiency eta on one mode.
GaussianState apply_loss(const GaussianState &state, std::size_t mode, double eta);

/// c^T cov c for the form's coefficient vector c.
double quadrature_variance(const GaussianState &state, const LinearForm &form);
double quadrature_mean(const GaussianState &state, const LinearForm &form);

/// Where along the experiment a loss acts.
enum class LossStage { Source, Propagation, Detection, FeedforwardTap };

std::string to_string(LossStage stage);
LossStage loss_stage_from_string(const std::string &name);

/// Per-stage, per-node efficiencies. Nodes without an explicit entry use the
/// stage default, which is 1 unless set.
class LossModel {
   public:
    static LossModel lossless() { return {}; }
    static LossModel uniform(LossStage stage, double eta);

    /// Throws std::invalid_argument unless eta is in (0, 1].
    void set_stage_default(LossStage stage, double eta);
    void set_efficiency(LossStage stage, int node, double eta);

    double efficiency(LossStage stage, int node) const;
    /// Product of every stage's efficiency for `node`.
    double composite(int node) const;
    bool is_lossless() const;

    const std::map<LossStage, double> &stage_defaults() const { return defaults_; }
    const std::map<LossStage, std::map<int, double>> &overrides() const { return per_node_; }

   private:
    std::map<LossStage, double> defaults_;
    std::map<LossStage, std::map<int, double>> per_node_;
};

}  // namespace cvshape
