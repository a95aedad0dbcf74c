#include "memctrl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <toml.hpp>

#include "memctrl/error.hpp"
#include "memctrl/function_space.hpp"
#include "memctrl/time_grid.hpp"

namespace memctrl {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) { throw ConfigError(path + ": " + why); }

void reject_unknown(const toml::table& tbl, const std::string& prefix, const std::set<std::string>& known) {
    for (const auto& [key, node] : tbl) {
        const std::string k(key.str());
        if (!known.count(k)) fail(prefix.empty() ? k : prefix + "." + k, "unknown key");
    }
}

const toml::table* section(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) fail(name, "expected a table");
    return n->as_table();
}

void read(const toml::table* t, const char* sec, const char* key, double& out) {
    if (!t) return;
    const toml::node* n = t->get(key);
    if (!n) return;
    const auto v = n->value<double>();
    if (!v) fail(std::string(sec) + "." + key, "expected a number");
    out = *v;
}

void read(const toml::table* t, const char* sec, const char* key, int& out) {
    if (!t) return;
    const toml::node* n = t->get(key);
    if (!n) return;
    const auto v = n->value<std::int64_t>();
    if (!v || !n->is_integer()) fail(std::string(sec) + "." + key, "expected an integer");
    out = static_cast<int>(*v);
}

void read(const toml::table* t, const char* sec, const char* key, std::string& out) {
    if (!t) return;
    const toml::node* n = t->get(key);
    if (!n) return;
    const auto v = n->value<std::string>();
    if (!v) fail(std::string(sec) + "." + key, "expected a string");
    out = *v;
}

void read(const toml::table* t, const char* sec, const char* key, std::vector<double>& out) {
    if (!t) return;
    const toml::node* n = t->get(key);
    if (!n) return;
    const std::string path = std::string(sec) + "." + key;
    if (!n->is_array()) fail(path, "expected an array of numbers");
    out.clear();
    for (const toml::node& e : *n->as_array()) {
        const auto v = e.value<double>();
        if (!v) fail(path, "expected an array of numbers");
        out.push_back(*v);
    }
}

}  // namespace

void RunConfig::validate() const {
    (void)SpaceConfig(p, n_modes, n_grid);
    kernels.validate();
    if (horizon >= 0.0 && !(horizon > 0.0)) fail("kernels.horizon", "must be positive");
    if (!(decay_tol > 0.0 && decay_tol < 1.0)) fail("kernels.decay_tol", "must lie in (0, 1)");
    if (horizon > 0.0 && std::exp(-kernels.slowest_rate() * horizon) > decay_tol) {
        fail("kernels.horizon", "too short for the kernel decay tolerance");
    }
    if (!std::isfinite(clamp)) fail("kernels.clamp", "must be finite");
    (void)TimeGrid(b, n_steps, impulse_times);
    if (!std::isfinite(d_scale)) fail("impulses.d_scale", "must be finite");
    if (!std::isfinite(e_scale)) fail("impulses.e_scale", "must be finite");
    if (static_cast<int>(history.coeffs.size()) > n_modes) fail("history.coeffs", "more entries than space.n_modes");
    if (history.kind != HistorySpec::Kind::Zero && history.coeffs.empty()) fail("history.coeffs", "required for this kind");
    if (!(history.rate > 0.0)) fail("history.rate", "must be positive");
    if (static_cast<int>(target.size()) > n_modes) fail("target.coeffs", "more entries than space.n_modes");
    for (double c : history.coeffs) {
        if (!std::isfinite(c)) fail("history.coeffs", "must be finite");
    }
    for (double c : target) {
        if (!std::isfinite(c)) fail("target.coeffs", "must be finite");
    }
    if (alphas.empty()) fail("solver.alphas", "must not be empty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) fail("solver.alphas", "entries must be positive");
        if (i > 0 && !(alphas[i] < alphas[i - 1])) fail("solver.alphas", "must be strictly decreasing");
    }
    if (!(tolerance > 0.0)) fail("solver.tolerance", "must be positive");
    if (max_newton < 1) fail("solver.max_newton", "must be positive");
    if (!(reg_damping > 0.0 && reg_damping <= 1.0)) fail("solver.damping", "must lie in (0, 1]");
    if (max_iterations < 1) fail("solver.max_iterations", "must be positive");
    if (!(fp_damping > 0.0 && fp_damping <= 1.0)) fail("solver.fp_damping", "must lie in (0, 1]");
    if (out_dir.empty()) fail("output.dir", "must not be empty");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "parse error in " << origin << " at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    reject_unknown(root, "", {"space", "kernels", "grid", "impulses", "control", "history", "target", "solver", "output"});

    RunConfig c;
    c.hash = fnv1a64(text);

    if (const auto* t = section(root, "space")) {
        reject_unknown(*t, "space", {"p", "n_modes", "n_grid"});
        read(t, "space", "p", c.p);
        read(t, "space", "n_modes", c.n_modes);
        read(t, "space", "n_grid", c.n_grid);
    }
    if (const auto* t = section(root, "kernels")) {
        reject_unknown(*t, "kernels",
                       {"gamma", "kappa", "mu", "hist_scale", "hist_rate", "clamp", "horizon", "decay_tol"});
        read(t, "kernels", "gamma", c.kernels.gamma);
        read(t, "kernels", "kappa", c.kernels.kappa);
        read(t, "kernels", "mu", c.kernels.mu);
        read(t, "kernels", "hist_scale", c.kernels.hist_kernel_scale);
        read(t, "kernels", "hist_rate", c.kernels.hist_kernel_rate);
        read(t, "kernels", "clamp", c.clamp);
        read(t, "kernels", "horizon", c.horizon);
        read(t, "kernels", "decay_tol", c.decay_tol);
    }
    if (const auto* t = section(root, "grid")) {
        reject_unknown(*t, "grid", {"b", "n_steps"});
        read(t, "grid", "b", c.b);
        read(t, "grid", "n_steps", c.n_steps);
    }
    if (const auto* t = section(root, "impulses")) {
        reject_unknown(*t, "impulses", {"times", "d_scale", "e_scale"});
        read(t, "impulses", "times", c.impulse_times);
        read(t, "impulses", "d_scale", c.d_scale);
        read(t, "impulses", "e_scale", c.e_scale);
    }
    if (const auto* t = section(root, "control")) {
        reject_unknown(*t, "control", {"kernel"});
        std::string k = "min";
        read(t, "control", "kernel", k);
        if (k == "min") {
            c.control = ControlKernel::Min;
        } else if (k == "zero") {
            c.control = ControlKernel::Zero;
        } else {
            fail("control.kernel", "expected \"min\" or \"zero\", got \"" + k + "\"");
        }
    }
    if (const auto* t = section(root, "history")) {
        reject_unknown(*t, "history", {"kind", "coeffs", "rate"});
        std::string k = "zero";
        read(t, "history", "kind", k);
        if (k == "zero") {
            c.history.kind = HistorySpec::Kind::Zero;
        } else if (k == "constant") {
            c.history.kind = HistorySpec::Kind::Constant;
        } else if (k == "exp_decay") {
            c.history.kind = HistorySpec::Kind::ExpDecay;
        } else {
            fail("history.kind", "expected zero, constant or exp_decay, got \"" + k + "\"");
        }
        read(t, "history", "coeffs", c.history.coeffs);
        read(t, "history", "rate", c.history.rate);
    }
    if (const auto* t = section(root, "target")) {
        reject_unknown(*t, "target", {"coeffs"});
        read(t, "target", "coeffs", c.target);
    }
    if (const auto* t = section(root, "solver")) {
        reject_unknown(*t, "solver",
                       {"alphas", "tolerance", "max_newton", "damping", "fp_tol", "max_iterations", "fp_damping"});
        read(t, "solver", "alphas", c.alphas);
        read(t, "solver", "tolerance", c.tolerance);
        read(t, "solver", "max_newton", c.max_newton);
        read(t, "solver", "damping", c.reg_damping);
        read(t, "solver", "fp_tol", c.fp_tol);
        read(t, "solver", "max_iterations", c.max_iterations);
        read(t, "solver", "fp_damping", c.fp_damping);
    }
    if (const auto* t = section(root, "output")) {
        reject_unknown(*t, "output", {"dir"});
        read(t, "output", "dir", c.out_dir);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace memctrl
