#include "memctrl/time_grid.hpp"

#include <cmath>
#include <sstream>

#include "memctrl/error.hpp"

namespace memctrl {

int snap_to_grid(double t, double b, int n_steps) {
    const double pos = t / b * n_steps;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) > 1e-9 * std::max(1.0, std::abs(pos))) {
        return -1;
    }
    return static_cast<int>(nearest);
}

TimeGrid::TimeGrid(double b, int n_steps, const std::vector<double>& impulse_times)
    : b_(b), n_steps_(n_steps), h_(b / n_steps) {
    if (!(b > 0.0) || !std::isfinite(b)) {
        throw ConfigError("grid.b must be positive");
    }
    if (n_steps < 1) {
        throw ConfigError("grid.n_steps must be positive");
    }
    int prev = 0;
    for (double t : impulse_times) {
        const int j = snap_to_grid(t, b, n_steps);
        if (j < 0) {
            std::ostringstream os;
            os << "impulses.times: " << t << " is not a grid node (h = " << h_ << ")";
            throw ConfigError(os.str());
        }
        if (j <= prev || j >= n_steps) {
            std::ostringstream os;
            os << "impulses.times: " << t << " must be strictly increasing inside (0, b)";
            throw ConfigError(os.str());
        }
        impulse_index_.push_back(j);
        prev = j;
    }
}

int TimeGrid::boundary(int k) const {
    if (k <= 0) return 0;
    if (k > n_impulses()) return n_steps_;
    return impulse_index_[static_cast<std::size_t>(k - 1)];
}

bool TimeGrid::is_impulse_node(int j) const {
    for (int idx : impulse_index_) {
        if (idx == j) return true;
    }
    return false;
}

int TimeGrid::segment_of(int j) const {
    int s = 0;
    while (s < n_impulses() && j > impulse_index_[static_cast<std::size_t>(s)]) ++s;
    return s;
}

}  // namespace memctrl
