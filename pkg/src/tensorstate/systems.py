"""System definitions for linearly coupled concurrent dynamics with tensor
states: coefficient bundles, piecewise-constant schedules, and the validated
system type used by the simulators and by analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensors import ShapeError, Tensor, _normalize_shape

__all__ = [
    "CoefficientSet",
    "CoefficientSchedule",
    "TensorStateSystem",
    "build_system",
    "lift_matrix_state",
]

TIME_KINDS = ("discrete", "continuous")


@dataclass(frozen=True)
class CoefficientSet:
    """One set of coupling tensors.

    A maps state to next state (order 2r over the state's r modes), B maps
    input to state (order r+p), C maps state to output (order s+r), D maps
    input to output (order s+p). B/C/D may be absent; an absent C means the
    output is the state itself.
    """

    A: Tensor
    B: Tensor | None = None
    C: Tensor | None = None
    D: Tensor | None = None

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, Tensor):
                object.__setattr__(self, name, Tensor.from_array(value))


class CoefficientSchedule:
    """Piecewise-constant assignment of coefficient sets to step/time intervals.

    Segment starts must be strictly increasing with the first at 0; the set in
    force at `when` is the one of the last segment whose start is <= when.
    """

    __slots__ = ("_segments",)

    def __init__(self, segments):
        if isinstance(segments, CoefficientSet):
            segments = [(0, segments)]
        segments = list(segments)
        if not segments:
            raise ValueError("schedule must contain at least one segment")
        cleaned = []
        for entry in segments:
            try:
                start, coeffs = entry
            except (TypeError, ValueError):
                raise ValueError("schedule segments must be (start, CoefficientSet) pairs")
            if not isinstance(coeffs, CoefficientSet):
                raise ValueError("schedule segments must carry a CoefficientSet")
            cleaned.append((float(start), coeffs))
        if cleaned[0][0] != 0:
            raise ValueError(f"first schedule segment must start at 0, got {cleaned[0][0]}")
        for (s0, _), (s1, _) in zip(cleaned, cleaned[1:]):
            if s1 <= s0:
                raise ValueError(f"schedule starts must be strictly increasing ({s0} then {s1})")
        self._segments = tuple(cleaned)

    @property
    def segments(self) -> tuple:
        return self._segments

    @property
    def is_time_invariant(self) -> bool:
        return len(self._segments) == 1

    def at(self, when) -> CoefficientSet:
        """Coefficient set of the last segment with start <= when (when >= 0)."""
        when = float(when)
        if when < 0:
            raise ValueError(f"schedule lookup requires when >= 0, got {when}")
        coeffs = self._segments[0][1]
        for start, candidate in self._segments:
            if start <= when:
                coeffs = candidate
            else:
                break
        return coeffs

    def __len__(self):
        return len(self._segments)

    def __iter__(self):
        return iter(self._segments)


def _shape_or_none(value):
    return None if value is None else _normalize_shape(value)


class TensorStateSystem:
    """A validated linear system whose state, input, and output are tensors.

    Construction checks every coefficient set in the schedule against the
    declared shapes, so downstream code can index coefficients without
    re-checking.
    """

    __slots__ = ("time_kind", "state_shape", "input_shape", "output_shape", "schedule")

    def __init__(self, time_kind, state_shape, schedule, input_shape=None, output_shape=None):
        if time_kind not in TIME_KINDS:
            raise ValueError(f"time_kind must be one of {TIME_KINDS}, got {time_kind!r}")
        state_shape = _normalize_shape(state_shape)
        input_shape = _shape_or_none(input_shape)
        output_shape = _shape_or_none(output_shape)
        if output_shape is None:
            output_shape = state_shape
        if not isinstance(schedule, CoefficientSchedule):
            schedule = CoefficientSchedule(schedule)
        if time_kind == "discrete":
            for start, _ in schedule:
                if start != int(start):
                    raise ValueError(
                        f"discrete schedules need integer step starts, got {start}"
                    )
        for index, (_, coeffs) in enumerate(schedule):
            _validate_coefficients(index, coeffs, state_shape, input_shape, output_shape)
        self.time_kind = time_kind
        self.state_shape = state_shape
        self.input_shape = input_shape
        self.output_shape = output_shape
        self.schedule = schedule

    @property
    def has_input(self) -> bool:
        return self.input_shape is not None

    @property
    def is_time_invariant(self) -> bool:
        return self.schedule.is_time_invariant

    @property
    def state_order(self) -> int:
        return len(self.state_shape)

    @property
    def state_dim(self) -> int:
        return math.prod(self.state_shape)

    @property
    def input_dim(self) -> int | None:
        return None if self.input_shape is None else math.prod(self.input_shape)

    @property
    def output_dim(self) -> int:
        return math.prod(self.output_shape)

    def coefficients_at(self, when) -> CoefficientSet:
        """Coefficients in force at step index / time stamp `when`."""
        return self.schedule.at(when)

    def __repr__(self):
        return (
            f"TensorStateSystem(time_kind={self.time_kind!r}, state_shape={list(self.state_shape)}, "
            f"input_shape={None if self.input_shape is None else list(self.input_shape)}, "
            f"output_shape={list(self.output_shape)}, segments={len(self.schedule)})"
        )


def _expect_shape(segment, name, tensor, expected, meaning):
    if tensor.shape != expected:
        raise ShapeError(
            f"segment {segment}: coefficient {name} has shape {list(tensor.shape)}, "
            f"expected {list(expected)} ({meaning})"
        )


def _validate_coefficients(segment, coeffs, state_shape, input_shape, output_shape):
    _expect_shape(segment, "A", coeffs.A, state_shape + state_shape, "state_shape + state_shape")
    if input_shape is None:
        if coeffs.B is not None:
            raise ShapeError(
                f"segment {segment}: coefficient B given but the system declares no input_shape"
            )
        if coeffs.D is not None:
            raise ShapeError(
                f"segment {segment}: coefficient D given but the system declares no input_shape"
            )
    else:
        if coeffs.B is None:
            raise ShapeError(
                f"segment {segment}: coefficient B missing for a system with input_shape {list(input_shape)}"
            )
        _expect_shape(segment, "B", coeffs.B, state_shape + input_shape, "state_shape + input_shape")
        if coeffs.D is not None:
            _expect_shape(segment, "D", coeffs.D, output_shape + input_shape, "output_shape + input_shape")
    if coeffs.C is not None:
        _expect_shape(segment, "C", coeffs.C, output_shape + state_shape, "output_shape + state_shape")
    elif output_shape != state_shape:
        raise ShapeError(
            f"segment {segment}: coefficient C absent, so the output is the state, but "
            f"output_shape {list(output_shape)} differs from state_shape {list(state_shape)}"
        )


def build_system(time_kind, state_shape, schedule, input_shape=None, output_shape=None) -> TensorStateSystem:
    """Validate and assemble a system from its descriptor parts.

    `schedule` may be a CoefficientSchedule, a list of (start, CoefficientSet)
    pairs, or a bare CoefficientSet (time-invariant). Raises ShapeError naming
    the offending coefficient on any order/shape mismatch.
    """
    return TensorStateSystem(time_kind, state_shape, schedule, input_shape, output_shape)


def _lift(matrix, columns, name) -> Tensor:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be a matrix, got array of ndim {m.ndim}")
    eye = np.eye(columns)
    # T[(i, alpha), (j, beta)] = m[i, j] * delta(alpha, beta)
    lifted = m[:, None, :, None] * eye[None, :, None, :]
    return Tensor._wrap(lifted)


def lift_matrix_state(A, B=None, C=None, D=None, *, columns, time_kind="discrete") -> TensorStateSystem:
    """Lift a matrix-state system Z' = A Z + B U, W = C Z + D U into tensor form.

    The state is an m x `columns` matrix whose columns all share the same
    coupling matrices (homogeneous coupling); the lifted order-4 tensors act
    column by column, so one step equals the matrix equation exactly.
    """
    columns = int(columns)
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"A must be square, got shape {list(A.shape)}")
    m = A.shape[0]
    state_shape = (m, columns)
    input_shape = None
    output_shape = None
    lifted_b = lifted_c = lifted_d = None
    if B is not None:
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != m:
            raise ShapeError(f"B must have {m} rows, got shape {list(B.shape)}")
        input_shape = (B.shape[1], columns)
        lifted_b = _lift(B, columns, "B")
    if C is not None:
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[1] != m:
            raise ShapeError(f"C must have {m} columns, got shape {list(C.shape)}")
        output_shape = (C.shape[0], columns)
        lifted_c = _lift(C, columns, "C")
    if D is not None:
        if B is None or C is None:
            raise ShapeError("D requires both B and C")
        D = np.asarray(D, dtype=float)
        if D.shape != (C.shape[0], B.shape[1]):
            raise ShapeError(
                f"D must have shape {[C.shape[0], B.shape[1]]}, got {list(D.shape)}"
            )
        lifted_d = _lift(D, columns, "D")
    coeffs = CoefficientSet(A=_lift(A, columns, "A"), B=lifted_b, C=lifted_c, D=lifted_d)
    return TensorStateSystem(time_kind, state_shape, coeffs, input_shape, output_shape)
