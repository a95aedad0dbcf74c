#include "memctrl/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "memctrl/error.hpp"
#include "memctrl/quadrature.hpp"

namespace memctrl {

Matrix control_matrix(ControlKernel kernel, const SpaceConfig& space) {
    const int n = space.n_modes();
    if (kernel == ControlKernel::Zero) return Matrix::Zero(n, n);

    const double pi = std::numbers::pi;
    const double scale = std::sqrt(2.0 / pi);
    const auto& rule = gauss_rule<16>();
    const int panels = 16 + 2 * n;

    // Gauss nodes/weights of `panels` equal panels on [lo, hi]
    auto panel_nodes = [&](double lo, double hi, int count, auto&& visit) {
        const double width = (hi - lo) / count;
        for (int p = 0; p < count; ++p) {
            const double mid = lo + (p + 0.5) * width;
            for (unsigned q = 0; q < rule.nodes.size(); ++q) {
                visit(mid + 0.5 * width * rule.nodes[q], 0.5 * width * rule.weights[q]);
            }
        }
    };

    Matrix B = Matrix::Zero(n, n);
    Vector inner(n);
    panel_nodes(0.0, pi, panels, [&](double z, double wz) {
        // inner(k) = int_0^pi min(z, w) a_k(w) dw, split at w = z
        inner.setZero();
        const int left = std::max(1, static_cast<int>(std::ceil(panels * z / pi)));
        const int right = std::max(1, panels - left + 1);
        auto add = [&](double w, double ww) {
            const double m = std::min(z, w);
            for (int k = 0; k < n; ++k) inner(k) += ww * m * scale * std::sin((k + 1) * w);
        };
        panel_nodes(0.0, z, left, add);
        panel_nodes(z, pi, right, add);
        for (int j = 0; j < n; ++j) B.row(j) += wz * scale * std::sin((j + 1) * z) * inner.transpose();
    });
    return B;
}

StateVector control_operator_B(const Vector& u, const Matrix& B) {
    if (u.size() != B.cols()) throw ConfigError("control dimension mismatch");
    return StateVector(B * u);
}

ImpulseSchedule ImpulseSchedule::uniform(std::vector<double> times, const Matrix& D, const Matrix& E) {
    ImpulseSchedule s;
    s.D.assign(times.size(), D);
    s.E.assign(times.size(), E);
    s.times = std::move(times);
    return s;
}

void ImpulseSchedule::validate(const TimeGrid& grid, int n_modes, int n_control) const {
    if (static_cast<int>(D.size()) != size() || static_cast<int>(E.size()) != size()) {
        throw ConfigError("impulses: D and E must be given for every impulse instant");
    }
    if (size() != grid.n_impulses()) throw ConfigError("impulses: schedule does not match the time grid");
    for (int k = 0; k < size(); ++k) {
        if (snap_to_grid(times[k], grid.b(), grid.n_steps()) != grid.impulse_indices()[k]) {
            throw ConfigError("impulses.times: schedule instant does not match the grid impulse node");
        }
        if (D[k].rows() != n_modes || D[k].cols() != n_modes) throw ConfigError("impulses: D has wrong dimensions");
        if (E[k].rows() != n_modes || E[k].cols() != n_control) throw ConfigError("impulses: E has wrong dimensions");
    }
}

StateVector jump(const StateVector& x, int k, const ImpulseSchedule& sched, const Vector& v) {
    if (k < 0 || k >= sched.size()) throw ConfigError("jump: impulse index out of range");
    return StateVector(x.coeffs + sched.D[k] * x.coeffs + sched.E[k] * v);
}

ControlBundle ControlBundle::zero(const TimeGrid& grid, int n_control) {
    ControlBundle c;
    for (int s = 0; s < grid.n_segments(); ++s) {
        c.u.push_back(Matrix::Zero(n_control, grid.segment_end(s) - grid.segment_begin(s) + 1));
    }
    c.v.assign(grid.n_impulses(), Vector::Zero(n_control));
    return c;
}

Eigen::Ref<const Vector> ControlBundle::u_at(const TimeGrid& grid, int segment, int node) const {
    return u[segment].col(node - grid.segment_begin(segment));
}

double ControlBundle::max_u_norm() const {
    double m = 0.0;
    for (const Matrix& seg : u) {
        if (seg.cols() > 0) m = std::max(m, seg.colwise().norm().maxCoeff());
    }
    return m;
}

void ControlBundle::check(const TimeGrid& grid, int n_control) const {
    if (static_cast<int>(u.size()) != grid.n_segments()) throw ConfigError("controls: wrong number of segments");
    for (int s = 0; s < grid.n_segments(); ++s) {
        if (u[s].rows() != n_control || u[s].cols() != grid.segment_end(s) - grid.segment_begin(s) + 1) {
            throw ConfigError("controls: segment " + std::to_string(s) + " has wrong dimensions");
        }
        if (!u[s].allFinite()) throw ConfigError("controls: non-finite distributed control");
    }
    if (static_cast<int>(v.size()) != grid.n_impulses()) throw ConfigError("controls: need one v per impulse");
    for (const Vector& vk : v) {
        if (vk.size() != n_control) throw ConfigError("controls: impulse control has wrong dimension");
    }
}

double Trajectory::sup_distance(const Trajectory& other) const {
    double d = (left - other.left).colwise().norm().maxCoeff();
    if (right.cols() > 0) d = std::max(d, (right - other.right).colwise().norm().maxCoeff());
    return d;
}

Matrix history_forcing_table(const TimeGrid& grid, const HistoryFunction& psi, const KernelParams& kp,
                             const Vector& eigenvalues) {
    Matrix table(psi.n_modes(), grid.n_steps() + 1);
    for (int j = 0; j <= grid.n_steps(); ++j) {
        const double t = grid.node(j);
        table.col(j) = history_f1_prime(t, psi, kp).coeffs + history_f2(t, psi, kp, eigenvalues).coeffs;
    }
    return table;
}

SystemModel::SystemModel(ResolventFamily R_, Matrix B_, ImpulseSchedule sched_, HistoryFunction psi_, Matrix forcing_)
    : R(std::move(R_)), B(std::move(B_)), sched(std::move(sched_)), psi(std::move(psi_)), forcing(std::move(forcing_)) {
    const int n = R.n_modes();
    if (B.rows() != n) throw ConfigError("control operator has wrong row count");
    sched.validate(grid(), n, n_control());
    if (psi.n_modes() != n) throw ConfigError("history has wrong dimension");
    if (forcing.rows() != n || forcing.cols() != grid().n_steps() + 1) {
        throw ConfigError("history forcing table has wrong dimensions");
    }
}

StateVector segment_convolve(const ResolventFamily& R, const Matrix& w, int a, int j) {
    if (j < a || w.cols() < j - a + 1) throw ConfigError("segment_convolve: bad interval");
    Vector acc = Vector::Zero(R.n_modes());
    if (j == a) return StateVector(acc);
    acc += 0.5 * R.at(j - a).cwiseProduct(w.col(0));
    for (int i = a + 1; i < j; ++i) acc += R.at(j - i).cwiseProduct(w.col(i - a));
    acc += 0.5 * R.at(0).cwiseProduct(w.col(j - a));
    return StateVector(R.grid().h() * acc);
}

namespace {

// Shared forward march. `source(j, traj, lagged)` returns f at node j; when
// `lagged` it may only use values strictly before j.
template <typename Source>
Trajectory march(const SystemModel& model, const ControlBundle& controls, Source&& source) {
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    controls.check(grid, model.n_control());
    const double h = grid.h();

    Trajectory traj;
    traj.left = Matrix::Zero(n, grid.n_steps() + 1);
    traj.right = Matrix::Zero(n, grid.n_impulses());
    traj.left.col(0) = model.psi.initial().coeffs;

    Matrix F = Matrix::Zero(n, grid.n_steps() + 1);
    F.col(0) = source(0, traj, false);

    for (int s = 0; s < grid.n_segments(); ++s) {
        const int a = grid.segment_begin(s);
        const int e = grid.segment_end(s);
        const Vector start = s == 0 ? Vector(traj.left.col(0)) : Vector(traj.right.col(s - 1));
        Matrix w(n, e - a + 1);
        w.col(0) = model.B * controls.u[s].col(0) + model.forcing.col(a) + F.col(a);
        for (int j = a + 1; j <= e; ++j) {
            const Vector lagged = source(j, traj, true);
            w.col(j - a) = model.B * controls.u[s].col(j - a) + model.forcing.col(j) + lagged;
            Vector acc = 0.5 * model.R.at(j - a).cwiseProduct(w.col(0));
            for (int i = a + 1; i < j; ++i) acc += model.R.at(j - i).cwiseProduct(w.col(i - a));
            acc += 0.5 * w.col(j - a);
            traj.left.col(j) = model.R.at(j - a).cwiseProduct(start) + h * acc;
            F.col(j) = source(j, traj, false);
            w.col(j - a) += F.col(j) - lagged;
        }
        if (s < grid.n_impulses()) {
            traj.right.col(s) = jump(traj.at(e), s, model.sched, controls.v[s]).coeffs;
        }
    }
    return traj;
}

}  // namespace

Trajectory mild_solution(const SystemModel& model, const ControlBundle& controls, const SourceHandle& f) {
    const int n = model.n_modes();
    Vector prev = Vector::Zero(n);
    auto source = [&](int j, const Trajectory& traj, bool lagged) -> Vector {
        if (!f) return Vector::Zero(n);
        if (lagged) return prev;
        const PastView view(model.psi, model.grid(), traj.left, traj.right, j);
        const StateVector val = f(j, view);
        if (val.size() != n) throw ConfigError("source returned wrong dimension");
        prev = val.coeffs;
        return prev;
    };
    return march(model, controls, source);
}

Trajectory mild_solution(const SystemModel& model, const ControlBundle& controls, const Matrix& f_table) {
    if (f_table.rows() != model.n_modes() || f_table.cols() != model.grid().n_steps() + 1) {
        throw ConfigError("source table has wrong dimensions");
    }
    auto source = [&](int j, const Trajectory&, bool) -> Vector { return f_table.col(j); };
    return march(model, controls, source);
}

Matrix tabulate_source(const SystemModel& model, const Trajectory& traj, const SourceHandle& f) {
    Matrix F = Matrix::Zero(model.n_modes(), model.grid().n_steps() + 1);
    if (!f) return F;
    for (int j = 0; j <= model.grid().n_steps(); ++j) {
        const PastView view(model.psi, model.grid(), traj.left, traj.right, j);
        F.col(j) = f(j, view).coeffs;
    }
    return F;
}

std::vector<StateVector> post_impulse_closed_form(const SystemModel& model, const ControlBundle& controls,
                                                  const Matrix& f_table) {
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    const int m = grid.n_impulses();
    controls.check(grid, model.n_control());
    const Matrix I = Matrix::Identity(n, n);

    // A_k = (I + D_k) R(t_k - t_{k-1}) and the segment integrals feeding impulse k
    std::vector<Matrix> A(m);
    std::vector<Vector> seg(m);
    for (int k = 0; k < m; ++k) {
        const int a = grid.segment_begin(k);
        const int e = grid.segment_end(k);
        A[k] = (I + model.sched.D[k]) * model.R.matrix(e - a);
        Matrix w(n, e - a + 1);
        for (int j = a; j <= e; ++j) {
            w.col(j - a) = model.B * controls.u[k].col(j - a) + model.forcing.col(j) + f_table.col(j);
        }
        seg[k] = segment_convolve(model.R, w, a, e).coeffs;
    }

    std::vector<StateVector> out;
    for (int k = 0; k < m; ++k) {
        // prod(j) = A_k ... A_{j+1}
        auto chain = [&](int from) {
            Matrix P = I;
            for (int j = k; j > from; --j) P = P * A[j];
            return P;
        };
        Vector x = chain(-1) * model.psi.initial().coeffs;
        for (int i = 0; i <= k; ++i) {
            x += chain(i) * ((I + model.sched.D[i]) * seg[i] + model.sched.E[i] * controls.v[i]);
        }
        out.emplace_back(std::move(x));
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const TimeGrid& grid) {
    os << "t,side,mode,coefficient\n";
    os.precision(17);
    const auto& idx = grid.impulse_indices();
    for (int j = 0; j <= grid.n_steps(); ++j) {
        for (int k = 0; k < traj.left.rows(); ++k) {
            os << grid.node(j) << ",left," << (k + 1) << ',' << traj.left(k, j) << '\n';
        }
        const auto it = std::find(idx.begin(), idx.end(), j);
        if (it != idx.end()) {
            const auto c = static_cast<Eigen::Index>(it - idx.begin());
            for (int k = 0; k < traj.right.rows(); ++k) {
                os << grid.node(j) << ",right," << (k + 1) << ',' << traj.right(k, c) << '\n';
            }
        }
    }
}

}  // namespace memctrl
