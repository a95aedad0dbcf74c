#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memctrl/memory_kernels.hpp"
#include "memctrl/propagator.hpp"

namespace memctrl {

struct HistorySpec {
    enum class Kind { Zero, Constant, ExpDecay };
    Kind kind = Kind::Zero;
    std::vector<double> coeffs;
    /// psi(theta) = e^{rate theta} coeffs for ExpDecay.
    double rate = 1.0;
};

struct RunConfig {
    // [space]
    double p = 2.0;
    int n_modes = 16;
    int n_grid = 128;
    // [kernels]
    KernelParams kernels;
    double clamp = -1.0;    // negative: 10 * sup |psi|
    double horizon = -1.0;  // negative: 8 / slowest kernel rate
    double decay_tol = 1e-3;
    // [grid]
    double b = 1.0;
    int n_steps = 400;
    // [impulses]  D_k = d_scale I, E_k = e_scale I
    std::vector<double> impulse_times{0.4, 0.7};
    double d_scale = -1.0;
    double e_scale = -1.0;
    // [control]
    ControlKernel control = ControlKernel::Min;
    // [history], [target]
    HistorySpec history;
    std::vector<double> target{1.0, 0.5, 0.25};
    // [solver]
    std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double tolerance = 1e-10;
    int max_newton = 50;
    double reg_damping = 0.5;
    double fp_tol = -1.0;
    int max_iterations = 200;
    double fp_damping = 1.0;
    // [output]
    std::string out_dir = "out";

    /// FNV-1a 64 of the source text.
    std::uint64_t hash = 0;

    /// Re-checks every field; ConfigError names the offending path.
    void validate() const;
};

[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
[[nodiscard]] RunConfig load_config(const std::string& path);

[[nodiscard]] std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace memctrl
