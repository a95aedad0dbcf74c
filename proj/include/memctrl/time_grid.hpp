#pragma once

#include <vector>

namespace memctrl {

/// Uniform grid t_j = j h on [0, b] with impulse instants pinned to nodes.
/// Segment s (s = 0..m) runs from node segment_begin(s) to segment_end(s);
/// consecutive segments share the impulse node.
class TimeGrid {
public:
    TimeGrid(double b, int n_steps, const std::vector<double>& impulse_times = {});

    [[nodiscard]] double b() const { return b_; }
    [[nodiscard]] int n_steps() const { return n_steps_; }
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] double node(int j) const { return j * h_; }

    [[nodiscard]] int n_impulses() const { return static_cast<int>(impulse_index_.size()); }
    [[nodiscard]] const std::vector<int>& impulse_indices() const { return impulse_index_; }
    /// Node index of impulse k (k = 1..m); k = 0 is node 0 and k = m + 1 is the final node.
    [[nodiscard]] int boundary(int k) const;
    [[nodiscard]] bool is_impulse_node(int j) const;

    [[nodiscard]] int n_segments() const { return n_impulses() + 1; }
    [[nodiscard]] int segment_begin(int s) const { return boundary(s); }
    [[nodiscard]] int segment_end(int s) const { return boundary(s + 1); }
    /// Segment that owns node j as an interior or right-end node (node 0 belongs to segment 0).
    [[nodiscard]] int segment_of(int j) const;

private:
    double b_;
    int n_steps_;
    double h_;
    std::vector<int> impulse_index_;
};

/// Node index for t if t lies on the grid within a relative tolerance, else -1.
[[nodiscard]] int snap_to_grid(double t, double b, int n_steps);

}  // namespace memctrl
