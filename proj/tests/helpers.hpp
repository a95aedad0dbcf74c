#pragma once

#include <random>

#include "memctrl/experiments.hpp"

namespace testing_support {

using namespace memctrl;

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = d(rng);
    }
    return m;
}

inline Matrix random_psd(std::mt19937_64& rng, int n, int rank = -1) {
    const Matrix G = random_matrix(rng, n, rank < 0 ? n : rank);
    return G * G.transpose();
}

inline ControlBundle random_controls(std::mt19937_64& rng, const TimeGrid& grid, int nc) {
    ControlBundle c = ControlBundle::zero(grid, nc);
    for (Matrix& u : c.u) u = random_matrix(rng, static_cast<int>(u.rows()), static_cast<int>(u.cols()));
    for (Vector& v : c.v) v = random_vector(rng, nc);
    return c;
}

/// Small linear configuration: n modes, the given grid and impulse times.
inline RunConfig small_config(int n_modes, int n_steps, std::vector<double> times) {
    RunConfig cfg;
    cfg.n_modes = n_modes;
    cfg.n_grid = std::max(32, 4 * n_modes);
    cfg.n_steps = n_steps;
    cfg.impulse_times = std::move(times);
    cfg.history.kind = HistorySpec::Kind::ExpDecay;
    cfg.history.coeffs = {0.5, 0.0, 0.2};
    cfg.target = {1.0, 0.5, 0.25};
    return cfg;
}

/// A model with explicit B, D, E on the config's grid and history.
inline SystemModel custom_model(const RunConfig& cfg, Matrix B, std::vector<Matrix> D, std::vector<Matrix> E,
                                bool with_history = true) {
    const SpaceConfig space(cfg.p, cfg.n_modes, cfg.n_grid);
    const TimeGrid grid(cfg.b, cfg.n_steps, cfg.impulse_times);
    ResolvedHistory hist = resolve_history(cfg);
    HistoryFunction psi = with_history ? hist.psi : HistoryFunction::zero(cfg.n_modes, hist.horizon, grid.h());
    Matrix forcing = with_history ? history_forcing_table(grid, psi, cfg.kernels, space.eigenvalues())
                                  : Matrix(Matrix::Zero(cfg.n_modes, cfg.n_steps + 1));
    ImpulseSchedule sched;
    sched.times = cfg.impulse_times;
    sched.D = std::move(D);
    sched.E = std::move(E);
    return SystemModel(build_family(space.eigenvalues(), cfg.kernels, grid), std::move(B), std::move(sched),
                       std::move(psi), std::move(forcing));
}

}  // namespace testing_support
