"""Trajectory generation: discrete iteration, the discrete closed form, and
continuous-time integration (classical RK4 and an exact matrix-exponential
path for piecewise-constant coefficients and inputs).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .tensors import ShapeError, Tensor, contract_last, devec, unfold, vec

__all__ = [
    "NumericOverflowError",
    "InputSignal",
    "TrajectorySample",
    "Trajectory",
    "step_discrete",
    "simulate_discrete",
    "solve_discrete_closed_form",
    "matrix_exponential",
    "simulate_continuous",
]


class NumericOverflowError(ArithmeticError):
    """State left the finite range during simulation."""


class InputSignal:
    """Forcing signal: zero, constant, or a breakpoint table.

    Tables hold (when, value) pairs with strictly increasing keys starting at
    0; sampling uses the value of the last breakpoint at or before the query
    (zero-order hold), held beyond the final breakpoint.
    """

    __slots__ = ("kind", "_value", "_breaks", "_values")

    def __init__(self, kind, value=None, breaks=None, values=None):
        self.kind = kind
        self._value = value
        self._breaks = breaks
        self._values = values

    @classmethod
    def zero(cls) -> "InputSignal":
        return cls("zero")

    @classmethod
    def constant(cls, value) -> "InputSignal":
        if not isinstance(value, Tensor):
            value = Tensor.from_array(value)
        return cls("constant", value=value)

    @classmethod
    def table(cls, samples) -> "InputSignal":
        entries = list(samples)
        if not entries:
            raise ValueError("input table must contain at least one sample")
        breaks = []
        values = []
        for entry in entries:
            try:
                when, value = entry
            except (TypeError, ValueError):
                raise ValueError("input table entries must be (when, value) pairs")
            if not isinstance(value, Tensor):
                value = Tensor.from_array(value)
            breaks.append(float(when))
            values.append(value)
        if breaks[0] != 0:
            raise ValueError(f"input table must start at 0, got first key {breaks[0]}")
        for a, b in zip(breaks, breaks[1:]):
            if b <= a:
                raise ValueError(f"input table keys must be strictly increasing ({a} then {b})")
        shape = values[0].shape
        for when, value in zip(breaks, values):
            if value.shape != shape:
                raise ShapeError(
                    f"input table values must share one shape; key {when} has "
                    f"{list(value.shape)}, expected {list(shape)}"
                )
        return cls("table", breaks=tuple(breaks), values=tuple(values))

    @property
    def breakpoints(self) -> tuple:
        """Keys where a table signal may jump; empty for zero/constant."""
        return self._breaks if self.kind == "table" else ()

    @property
    def constant_value(self) -> Tensor | None:
        return self._value if self.kind == "constant" else None

    @property
    def table_samples(self) -> tuple:
        """(when, value) pairs of a table signal; empty otherwise."""
        if self.kind != "table":
            return ()
        return tuple(zip(self._breaks, self._values))

    def sample(self, when, shape) -> Tensor:
        """Value at `when` as a tensor of the given shape."""
        if self.kind == "zero":
            return Tensor.zeros(shape)
        if self.kind == "constant":
            value = self._value
        else:
            when = float(when)
            idx = bisect.bisect_right(self._breaks, when) - 1
            if idx < 0:
                raise ValueError(f"input table starts at {self._breaks[0]}, sampled at {when}")
            value = self._values[idx]
        if value.shape != tuple(shape):
            raise ShapeError(
                f"input sample has shape {list(value.shape)}, expected {list(shape)}"
            )
        return value


@dataclass(frozen=True)
class TrajectorySample:
    when: float
    state: Tensor
    output: Tensor


class Trajectory:
    """Ordered (when, state, output) samples from one simulation run."""

    __slots__ = ("_samples",)

    def __init__(self, samples):
        samples = tuple(samples)
        if not samples:
            raise ValueError("trajectory needs at least one sample")
        for a, b in zip(samples, samples[1:]):
            if not b.when > a.when:
                raise ValueError(f"trajectory whens must increase ({a.when} then {b.when})")
        self._samples = samples

    @property
    def samples(self) -> tuple:
        return self._samples

    @property
    def times(self) -> np.ndarray:
        return np.array([s.when for s in self._samples], dtype=float)

    @property
    def states(self) -> list:
        return [s.state for s in self._samples]

    @property
    def outputs(self) -> list:
        return [s.output for s in self._samples]

    @property
    def final_state(self) -> Tensor:
        return self._samples[-1].state

    def state_matrix(self) -> np.ndarray:
        """Row-major vec of every state, stacked row per sample."""
        return np.stack([vec(s.state) for s in self._samples])

    def output_matrix(self) -> np.ndarray:
        return np.stack([vec(s.output) for s in self._samples])

    def __len__(self):
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    def __getitem__(self, index):
        return self._samples[index]


def _coerce_state(system, state) -> Tensor:
    if not isinstance(state, Tensor):
        state = Tensor.from_array(state)
    if state.shape != system.state_shape:
        raise ShapeError(
            f"state has shape {list(state.shape)}, expected {list(system.state_shape)}"
        )
    return state


def _coerce_input(system, u) -> Tensor | None:
    if not system.has_input:
        if u is not None:
            raise ValueError("system declares no input; got an input tensor")
        return None
    if u is None:
        raise ValueError("system declares an input; pass u")
    if not isinstance(u, Tensor):
        u = Tensor.from_array(u)
    if u.shape != system.input_shape:
        raise ShapeError(
            f"input has shape {list(u.shape)}, expected {list(system.input_shape)}"
        )
    return u


def _as_signal(system, u) -> InputSignal | None:
    """Normalize the trajectory-level input argument to a signal or None."""
    if not system.has_input:
        if u is not None and not (isinstance(u, InputSignal) and u.kind == "zero"):
            raise ValueError("system declares no input; u must be omitted")
        return None
    if u is None:
        return InputSignal.zero()
    if not isinstance(u, InputSignal):
        raise TypeError("u must be an InputSignal (zero/constant/table)")
    return u


def _output(coeffs, state: Tensor, u: Tensor | None) -> Tensor:
    out = contract_last(coeffs.C, state) if coeffs.C is not None else state
    if coeffs.D is not None and u is not None:
        out = out + contract_last(coeffs.D, u)
    return out


def _require_kind(system, kind, what):
    if system.time_kind != kind:
        raise ValueError(f"{what} needs a {kind}-time system, got {system.time_kind}")


def step_discrete(system, state, u=None, n=0):
    """One update X(n+1) = A(n)·X(n) + B(n)·U(n); returns (next_state, output).

    The output is Y(n) = C(n)·X(n) + D(n)·U(n) for the *current* sample, with
    an absent C meaning the output is the state and an absent D no feedthrough.
    """
    _require_kind(system, "discrete", "step_discrete")
    state = _coerce_state(system, state)
    u = _coerce_input(system, u)
    coeffs = system.coefficients_at(n)
    nxt = contract_last(coeffs.A, state)
    if u is not None:
        nxt = nxt + contract_last(coeffs.B, u)
    return nxt, _output(coeffs, state, u)


def simulate_discrete(system, x0, steps, u=None) -> Trajectory:
    """Iterate the update map, returning samples at n = 0..steps.

    `u` is an InputSignal sampled at integer steps; None means zero input.
    Raises NumericOverflowError naming the step if the state leaves the
    finite range.
    """
    _require_kind(system, "discrete", "simulate_discrete")
    steps = int(steps)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    signal = _as_signal(system, u)
    state = _coerce_state(system, x0)
    samples = []
    for n in range(steps + 1):
        u_n = signal.sample(n, system.input_shape) if signal is not None else None
        coeffs = system.coefficients_at(n)
        samples.append(TrajectorySample(n, state, _output(coeffs, state, u_n)))
        if n == steps:
            break
        nxt = contract_last(coeffs.A, state)
        if u_n is not None:
            nxt = nxt + contract_last(coeffs.B, u_n)
        if not np.isfinite(nxt.array).all():
            raise NumericOverflowError(f"state became non-finite at step {n + 1}")
        state = nxt
    return Trajectory(samples)


def solve_discrete_closed_form(system, x0, n, u=None) -> Tensor:
    """State at step n of a time-invariant system via unfolded matrix powers.

    vec(X(n)) = M_A^n vec(x0) + sum_{k<n} M_A^(n-1-k) M_B vec(u(k)), with
    M_A = unfold(A, r) and M_B = unfold(B, r).
    """
    _require_kind(system, "discrete", "solve_discrete_closed_form")
    if not system.is_time_invariant:
        raise ValueError("closed form needs a time-invariant system; use simulate_discrete")
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    signal = _as_signal(system, u)
    x0 = _coerce_state(system, x0)
    r = system.state_order
    coeffs = system.coefficients_at(0)
    m_a = unfold(coeffs.A, r)
    acc = np.linalg.matrix_power(m_a, n) @ vec(x0)
    if signal is not None:
        m_b = unfold(coeffs.B, r)
        for k in range(n):
            u_k = vec(signal.sample(k, system.input_shape))
            acc = acc + np.linalg.matrix_power(m_a, n - 1 - k) @ (m_b @ u_k)
    return devec(acc, system.state_shape)


def matrix_exponential(m, t=1.0) -> np.ndarray:
    """exp(m*t) by scaling-and-squaring over a truncated power series.

    The scaled matrix has infinity norm <= 0.5, so the series reaches machine
    precision in well under the 40-term cap.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"matrix_exponential needs a square matrix, got shape {list(m.shape)}")
    t = float(t)
    if not np.isfinite(m).all() or not math.isfinite(t):
        raise ValueError("matrix_exponential needs finite entries and finite t")
    q = m.shape[0]
    a = m * t
    norm = np.linalg.norm(a, np.inf)
    if norm == 0.0:
        return np.eye(q)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    a = a / (2.0 ** squarings)
    result = np.eye(q)
    term = np.eye(q)
    for k in range(1, 41):
        term = term @ a / k
        result = result + term
        if np.linalg.norm(term, np.inf) <= 1e-17 * np.linalg.norm(result, np.inf):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def _unfolded_schedule(system):
    """Per segment: (start, coeffs, M_A, M_B or None)."""
    r = system.state_order
    out = []
    for start, coeffs in system.schedule:
        m_b = unfold(coeffs.B, r) if coeffs.B is not None else None
        out.append((start, coeffs, unfold(coeffs.A, r), m_b))
    return out


def _segment_at(segments, when):
    chosen = segments[0]
    for seg in segments:
        if seg[0] <= when:
            chosen = seg
        else:
            break
    return chosen


def _time_grid(t_end, h):
    n_full = int(math.floor(t_end / h + 1e-9))
    times = [k * h for k in range(n_full + 1)]
    if t_end - times[-1] > 1e-9 * h:
        times.append(t_end)
    else:
        times[-1] = t_end
    return times


def simulate_continuous(system, x0, t_end, h=None, u=None, method="rk4") -> Trajectory:
    """Integrate dX/dt = A(t)·X + B(t)·U(t) on the grid t = 0, h, 2h, ..., t_end.

    The final step is truncated to land exactly on t_end; h defaults to
    t_end/1000. method="rk4" runs classical Runge-Kutta on the unfolded
    vector field; method="exact" advances each interval of constant
    coefficients and input with the augmented-matrix exponential
    exp([[M_A, M_B·vec(u)], [0, 0]]·dt) applied to (v; 1), splitting at
    schedule starts and input breakpoints.
    """
    _require_kind(system, "continuous", "simulate_continuous")
    t_end = float(t_end)
    if not t_end > 0 or not math.isfinite(t_end):
        raise ValueError(f"t_end must be positive and finite, got {t_end}")
    if h is None:
        h = t_end / 1000.0
    h = float(h)
    if not h > 0 or not math.isfinite(h):
        raise ValueError(f"h must be positive and finite, got {h}")
    if method not in ("rk4", "exact"):
        raise ValueError(f"method must be 'rk4' or 'exact', got {method!r}")
    signal = _as_signal(system, u)
    x0 = _coerce_state(system, x0)
    segments = _unfolded_schedule(system)
    dim = system.state_dim
    shape = system.state_shape

    def u_vec(when):
        return vec(signal.sample(when, system.input_shape))

    def field(when, v):
        _, _, m_a, m_b = _segment_at(segments, when)
        dv = m_a @ v
        if m_b is not None:
            dv = dv + m_b @ u_vec(when)
        return dv

    def advance_exact(v, a, b):
        cuts = [seg[0] for seg in segments if a < seg[0] < b]
        if signal is not None:
            cuts.extend(p for p in signal.breakpoints if a < p < b)
        edges = [a] + sorted(set(cuts)) + [b]
        for p, q in zip(edges, edges[1:]):
            _, _, m_a, m_b = _segment_at(segments, p)
            dt = q - p
            if m_b is None:
                v = matrix_exponential(m_a, dt) @ v
            else:
                aug = np.zeros((dim + 1, dim + 1))
                aug[:dim, :dim] = m_a
                aug[:dim, dim] = m_b @ u_vec(p)
                big = matrix_exponential(aug, dt)
                v = big[:dim, :dim] @ v + big[:dim, dim]
        return v

    def advance_rk4(v, a, b):
        dt = b - a
        k1 = field(a, v)
        k2 = field(a + dt / 2, v + (dt / 2) * k1)
        k3 = field(a + dt / 2, v + (dt / 2) * k2)
        k4 = field(b, v + dt * k3)
        return v + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    advance = advance_exact if method == "exact" else advance_rk4
    times = _time_grid(t_end, h)
    v = x0.array.reshape(dim).astype(float)
    samples = []
    for i, t in enumerate(times):
        state = devec(v, shape)
        coeffs = _segment_at(segments, t)[1]
        u_t = signal.sample(t, system.input_shape) if signal is not None else None
        samples.append(TrajectorySample(t, state, _output(coeffs, state, u_t)))
        if i + 1 == len(times):
            break
        v = advance(v, t, times[i + 1])
        if not np.isfinite(v).all():
            raise NumericOverflowError(f"state became non-finite at t={times[i + 1]:.17g}")
    return Trajectory(samples)
