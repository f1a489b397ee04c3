#pragma once

namespace gstpro {

enum class SolverKind { kEuler, kRk4 };

// Fixed-step steppers, generic over the state representation so the same
// stepping arithmetic drives both plain scalar test systems and tape-recorded
// model states. `deriv(t, y)` returns dy/dt; `axpy(y, s, k)` returns y + s*k.

template <class State, class Deriv, class Axpy>
State euler_step(const State& y, double t, double h, Deriv&& deriv, Axpy&& axpy) {
    State k1 = deriv(t, y);
    return axpy(y, h, k1);
}

template <class State, class Deriv, class Axpy>
State rk4_step(const State& y, double t, double h, Deriv&& deriv, Axpy&& axpy) {
    State k1 = deriv(t, y);
    State k2 = deriv(t + h / 2.0, axpy(y, h / 2.0, k1));
    State k3 = deriv(t + h / 2.0, axpy(y, h / 2.0, k2));
    State k4 = deriv(t + h, axpy(y, h, k3));
    State out = axpy(y, h / 6.0, k1);
    out = axpy(out, h / 3.0, k2);
    out = axpy(out, h / 3.0, k3);
    return axpy(out, h / 6.0, k4);
}

template <class State, class Deriv, class Axpy>
State solver_step(SolverKind kind, const State& y, double t, double h, Deriv&& deriv, Axpy&& axpy) {
    if (kind == SolverKind::kEuler) return euler_step(y, t, h, deriv, axpy);
    return rk4_step(y, t, h, deriv, axpy);
}

}  // namespace gstpro
