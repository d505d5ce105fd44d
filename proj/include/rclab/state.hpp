#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "rclab/grid.hpp"
#include "rclab/regularization.hpp"

namespace rclab {

enum class Scheme { imex, explicit_euler };
enum class ClampPolicy { reject, none };

inline const char* to_string(Scheme s) { return s == Scheme::imex ? "imex" : "explicit"; }
inline const char* to_string(ClampPolicy p) { return p == ClampPolicy::reject ? "reject" : "none"; }

struct SolverConfig {
    double dt = 1e-4;
    double t_end = 1e-2;
    Scheme scheme = Scheme::imex;
    double cfl_safety = 0.9;
    ClampPolicy clamp_policy = ClampPolicy::reject;
    double cg_tolerance = 1e-10;
    std::size_t cg_max_iterations = 5000;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("solver config: dt must be positive");
        if (!(t_end >= dt)) throw InvalidArgument("solver config: dt must not exceed t_end");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidArgument("solver config: cfl_safety must lie in (0, 1]");
        if (!(cg_tolerance > 0.0)) throw InvalidArgument("solver config: cg_tolerance must be positive");
    }
};

/// Strictly positive, finite initial densities on a common grid.
class InitialData {
public:
    InitialData(ScalarField u0, ScalarField v0) : u0_(std::move(u0)), v0_(std::move(v0)) {
        detail::require_same_grid(u0_, v0_, "initial data");
        if (!u0_.all_finite() || !v0_.all_finite()) throw NonFiniteValue("initial data: non-finite values");
        if (!(u0_.min() > 0.0)) throw InvalidArgument("initial data: u0 must be strictly positive");
        if (!(v0_.min() > 0.0)) throw InvalidArgument("initial data: v0 must be strictly positive");
    }

    const ScalarField& u0() const noexcept { return u0_; }
    const ScalarField& v0() const noexcept { return v0_; }
    const TensorGrid& grid() const noexcept { return u0_.grid(); }

private:
    ScalarField u0_;
    ScalarField v0_;
};

struct SolverState {
    double time = 0.0;
    ScalarField u;
    ScalarField v;
    Regularization reg;
    std::size_t step_index = 0;

    static SolverState initial(const InitialData& init, Regularization reg) {
        return SolverState{0.0, init.u0(), init.v0(), reg, 0};
    }

    const TensorGrid& grid() const noexcept { return u.grid(); }
};

}  // namespace rclab
