#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "cvshape/gaussian.hpp"
#include "cvshape/graph.hpp"

namespace cvshape {

/// S = passive_out * diag(squeeze) * passive_in with both passive factors
/// orthogonal and symplectic. squeeze = (d_1..d_N, 1/d_1..1/d_N), d_k >= 1,
/// so factor d_k stretches x_k and compresses p_k.
struct BlochMessiah {
    Matrix passive_out;
    Vector squeeze;
    Matrix passive_in;

    Matrix recompose() const;
};

/// Throws std::runtime_error if `s` is not symplectic to 1e-8 or the SVD
/// cannot be paired into a symplectic basis.
BlochMessiah bloch_messiah(const Matrix &s);

/// Complex N x N unitary X + iY of an orthogonal symplectic [[X, -Y], [Y, X]].
Eigen::MatrixXcd passive_to_unitary(const Matrix &o);
Matrix unitary_to_passive(const Eigen::MatrixXcd &u);

struct SqueezerSetting {
    double db;
    Quadrature quadrature;
};

struct BeamSplitterElement {
    std::size_t i;
    std::size_t j;
    double reflectivity;
};

struct PhaseShiftElement {
    std::size_t mode;
    double theta;
};

using InterferometerElement = std::variant<BeamSplitterElement, PhaseShiftElement>;

enum class PlanProvenance { Canonical, Compiled, Preset };

std::string to_string(PlanProvenance p);

/// Squeezed vacua followed by a passive interferometer, applied in list order.
struct NetworkPlan {
    std::vector<SqueezerSetting> squeezers;
    std::vector<InterferometerElement> interferometer;
    PlanProvenance provenance = PlanProvenance::Compiled;

    std::size_t num_modes() const { return squeezers.size(); }

    SymplecticTransform squeezing_transform() const;
    SymplecticTransform interferometer_transform() const;
    /// Squeezers then interferometer.
    SymplecticTransform total_transform() const;

    std::size_t count_beam_splitters() const;
};

SymplecticTransform element_transform(std::size_t n_modes, const InterferometerElement &e);

/// The state `plan` prepares from vacuum.
GaussianState prepare(const NetworkPlan &plan);

/// Same, with each input squeezed state sent through `source_eta[m]` loss
/// before the interferometer.
GaussianState prepare(const NetworkPlan &plan, const std::vector<double> &source_eta);

/// Beam splitters and phase shifts realising the unitary `u` (complex form of a
/// passive transform). Elements are listed in application order.
std::vector<InterferometerElement> decompose_interferometer(const Eigen::MatrixXcd &u);

/// Factor the canonical construction (squeezers then QND gates) into
/// single-mode squeezers followed by a passive interferometer.
NetworkPlan compile_network(const ClusterGraph &graph, const std::vector<double> &db);

/// Four p-squeezed vacua; modes 3 and 4 are turned to x-squeezing, modes 2 and 3
/// meet on a 20:80 splitter, then (1,2) and (3,4) on 50:50 splitters, followed
/// by output phases. The output satisfies the 1-2-3-4 wire nullifiers.
NetworkPlan preset_paper_network(double db = 5.0);
NetworkPlan preset_paper_network(const std::vector<double> &db);

}  // namespace cvshape
