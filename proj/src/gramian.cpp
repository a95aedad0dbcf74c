#include "memctrl/gramian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <ostream>
#include <sstream>

#include "memctrl/error.hpp"

namespace memctrl {

ControlLayout::ControlLayout(const TimeGrid& grid, int n_control) : grid_(grid), n_control_(n_control) {
    int off = 0;
    const double h = grid.h();
    std::vector<double> w;
    for (int s = 0; s < grid.n_segments(); ++s) {
        seg_offset_.push_back(off);
        const int a = grid.segment_begin(s);
        const int e = grid.segment_end(s);
        for (int j = a; j <= e; ++j) {
            const double c = (j == a || j == e) ? 0.5 * h : h;
            for (int i = 0; i < n_control; ++i) w.push_back(c);
        }
        off += (e - a + 1) * n_control;
    }
    v_begin_ = off;
    for (int k = 0; k < grid.n_impulses(); ++k) {
        for (int i = 0; i < n_control; ++i) w.push_back(1.0);
    }
    size_ = off + grid.n_impulses() * n_control;
    weights_ = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
}

int ControlLayout::u_offset(int segment, int node) const {
    return seg_offset_[segment] + (node - grid_.segment_begin(segment)) * n_control_;
}

int ControlLayout::v_offset(int k) const { return v_begin_ + k * n_control_; }

Vector ControlLayout::flatten(const ControlBundle& c) const {
    c.check(grid_, n_control_);
    Vector flat(size_);
    for (int s = 0; s < grid_.n_segments(); ++s) {
        flat.segment(seg_offset_[s], c.u[s].size()) = c.u[s].reshaped();
    }
    for (int k = 0; k < grid_.n_impulses(); ++k) flat.segment(v_offset(k), n_control_) = c.v[k];
    return flat;
}

ControlBundle ControlLayout::unflatten(const Vector& flat) const {
    if (flat.size() != size_) throw ConfigError("control vector has wrong length");
    ControlBundle c = ControlBundle::zero(grid_, n_control_);
    for (int s = 0; s < grid_.n_segments(); ++s) {
        c.u[s].reshaped() = flat.segment(seg_offset_[s], c.u[s].size());
    }
    for (int k = 0; k < grid_.n_impulses(); ++k) c.v[k] = flat.segment(v_offset(k), n_control_);
    return c;
}

TerminalMaps::TerminalMaps(const SystemModel& model) {
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    const int m = grid.n_impulses();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix tail = model.R.matrix(grid.n_steps() - grid.boundary(m));

    impulse.assign(m, Matrix());
    Matrix chain = tail;  // R(b - t_m) A_m ... A_{k+1}
    for (int k = m - 1; k >= 0; --k) {
        impulse[k] = chain;
        const Matrix A = (I + model.sched.D[k]) * model.R.matrix(grid.segment_end(k) - grid.segment_begin(k));
        chain = chain * A;
    }
    initial = m == 0 ? tail : chain;

    segment.assign(m + 1, Matrix());
    for (int s = 0; s < m; ++s) segment[s] = impulse[s] * (I + model.sched.D[s]);
    segment[m] = I;
}

StateVector ControlMap::apply(const ControlBundle& c) const { return StateVector(M_ * layout_.flatten(c)); }

ControlBundle ControlMap::adjoint(const DualVector& phi) const {
    if (phi.size() != M_.rows()) throw ConfigError("adjoint: dual vector has wrong dimension");
    const Vector flat = (M_.transpose() * phi.coeffs).cwiseQuotient(layout_.weights());
    return layout_.unflatten(flat);
}

Matrix ControlMap::gram() const {
    const Matrix scaled = M_ * layout_.weights().cwiseInverse().cwiseSqrt().asDiagonal();
    return scaled * scaled.transpose();
}

ControlMap assemble_M(const SystemModel& model) {
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    const int nc = model.n_control();
    ControlLayout layout(grid, nc);
    const TerminalMaps maps(model);
    const double h = grid.h();

    Matrix M = Matrix::Zero(n, layout.size());
    for (int s = 0; s < grid.n_segments(); ++s) {
        const int a = grid.segment_begin(s);
        const int e = grid.segment_end(s);
        for (int j = a; j <= e; ++j) {
            const double c = (j == a || j == e) ? 0.5 * h : h;
            M.middleCols(layout.u_offset(s, j), nc) = c * maps.segment[s] * (model.R.at(e - j).asDiagonal() * model.B);
        }
    }
    for (int k = 0; k < grid.n_impulses(); ++k) {
        M.middleCols(layout.v_offset(k), nc) = maps.impulse[k] * model.sched.E[k];
    }
    return ControlMap(std::move(M), std::move(layout));
}

namespace {

// h sum'' R(t_e - t_j) B B^T R(t_e - t_j) over the nodes of one segment.
Matrix segment_gram(const SystemModel& model, int s) {
    const TimeGrid& grid = model.grid();
    const int a = grid.segment_begin(s);
    const int e = grid.segment_end(s);
    const Matrix BBt = model.B * model.B.transpose();
    Matrix Q = Matrix::Zero(model.n_modes(), model.n_modes());
    for (int j = a; j <= e; ++j) {
        const double c = (j == a || j == e) ? 0.5 : 1.0;
        const auto r = model.R.at(e - j);
        Q += c * (r.asDiagonal() * BBt * r.asDiagonal());
    }
    return grid.h() * Q;
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

GramianBlocks assemble_blocks(const SystemModel& model, const ControlMap& M) {
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    const int m = grid.n_impulses();
    const TerminalMaps maps(model);

    GramianBlocks g;
    g.Gamma = sym(segment_gram(model, m));
    g.Theta = Matrix::Zero(n, n);
    for (int s = 0; s < m; ++s) g.Theta += maps.segment[s] * segment_gram(model, s) * maps.segment[s].transpose();
    g.Theta = sym(g.Theta);
    g.ThetaTilde = Matrix::Zero(n, n);
    g.GammaTilde = Matrix::Zero(n, n);
    for (int k = 0; k < m; ++k) {
        const Matrix PE = maps.impulse[k] * model.sched.E[k];
        (k == m - 1 ? g.GammaTilde : g.ThetaTilde) += PE * PE.transpose();
    }
    g.ThetaTilde = sym(g.ThetaTilde);
    g.GammaTilde = sym(g.GammaTilde);
    g.total = g.Gamma + g.GammaTilde + g.Theta + g.ThetaTilde;

    const Matrix product = M.gram();
    const double scale = std::max(g.total.norm(), product.norm());
    const double diff = (g.total - product).norm();
    if (diff > 1e-6 * scale && diff > 1e-300) {
        std::ostringstream os;
        os << "Gramian blocks disagree with M M*: relative Frobenius defect " << diff / scale;
        throw ConsistencyError(os.str());
    }

    const PositivityReport rep = positivity_report(g.total);
    g.min_eigenvalue = rep.min_eigenvalue;
    g.max_eigenvalue = rep.max_eigenvalue;
    return g;
}

GramianBlocks assemble_blocks(const SystemModel& model) { return assemble_blocks(model, assemble_M(model)); }

std::string PositivityReport::line() const {
    std::ostringstream os;
    os.precision(6);
    os << "min_eig=" << min_eigenvalue << " strictly_positive=" << (strictly_positive ? "true" : "false");
    return os.str();
}

PositivityReport positivity_report(const Matrix& symmetric) {
    PositivityReport rep;
    if (symmetric.size() == 0) return rep;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(symmetric), Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.max_eigenvalue = es.eigenvalues().maxCoeff();
    rep.strictly_positive = rep.max_eigenvalue > 0.0 && rep.min_eigenvalue > 1e-10 * rep.max_eigenvalue;
    return rep;
}

PositivityReport positivity_report(const GramianBlocks& blocks) { return positivity_report(blocks.total); }

void write_matrix_csv(std::ostream& os, const Matrix& m) {
    os.precision(17);
    for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << "c" << (j + 1);
    os << '\n';
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

}  // namespace memctrl
