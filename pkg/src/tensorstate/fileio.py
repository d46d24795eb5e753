"""System definition files (JSON), trajectory CSV emission, and the
plain-text analysis report.

Tensors on disk are {"shape": [...], "data": [...]} with row-major flat
data. Numbers in CSV output carry 17 significant digits so parsing them
back reproduces the exact doubles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .multirate import MultirateSystem, constant_function, index_function
from .simulate import InputSignal, Trajectory
from .systems import CoefficientSet, TensorStateSystem, build_system
from .tensors import ShapeError, Tensor, vec

__all__ = [
    "ParseError",
    "SystemFile",
    "MultirateFile",
    "parse_system_file",
    "render_system_file",
    "write_system_file",
    "trajectory_csv",
    "multirate_csv",
    "render_report",
]


class ParseError(ValueError):
    """Malformed system file; the message names the offending field."""


@dataclass(frozen=True)
class SystemFile:
    """Parsed tensor-system file: the validated system plus its run data."""

    system: TensorStateSystem
    x0: Tensor
    input_signal: InputSignal | None


@dataclass(frozen=True)
class MultirateFile:
    """Parsed multirate file; specs kept for verbatim re-emission."""

    system: MultirateSystem
    boundary_spec: object
    input_spec: object | None


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _int_if_integral(value):
    value = float(value)
    return int(value) if value == int(value) else value


def _check_keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {unknown}")
    for key in required:
        if key not in obj:
            raise ParseError(f"{where}: missing field '{key}'")


def _number(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_shape(value, where):
    if not isinstance(value, list) or not value:
        raise ParseError(f"{where}: expected a non-empty list of mode sizes")
    shape = []
    for entry in value:
        if isinstance(entry, bool) or not isinstance(entry, int) or entry < 1:
            raise ParseError(f"{where}: mode sizes must be integers >= 1, got {entry!r}")
        shape.append(entry)
    return tuple(shape)


def _parse_tensor(obj, where) -> Tensor:
    _check_keys(obj, where, required=("shape", "data"))
    shape = _parse_shape(obj["shape"], f"{where}.shape")
    data = obj["data"]
    if not isinstance(data, list):
        raise ParseError(f"{where}.data: expected a list of numbers")
    expected = math.prod(shape)
    if len(data) != expected:
        raise ParseError(
            f"{where}: data length {len(data)} does not match shape {list(shape)} "
            f"(expected {expected})"
        )
    values = [_number(v, f"{where}.data") for v in data]
    try:
        return Tensor(shape, values)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _parse_signal(obj, input_shape, where) -> InputSignal:
    _check_keys(obj, where, required=("kind",), optional=("value", "samples"))
    kind = obj["kind"]
    if kind == "zero":
        if len(obj) > 1:
            raise ParseError(f"{where}: kind 'zero' takes no other fields")
        return InputSignal.zero()
    if kind == "constant":
        if "value" not in obj or "samples" in obj:
            raise ParseError(f"{where}: kind 'constant' needs exactly the field 'value'")
        value = _parse_tensor(obj["value"], f"{where}.value")
        if value.shape != input_shape:
            raise ParseError(
                f"{where}.value: shape {list(value.shape)} does not match "
                f"input_shape {list(input_shape)}"
            )
        return InputSignal.constant(value)
    if kind == "table":
        if "samples" not in obj or "value" in obj:
            raise ParseError(f"{where}: kind 'table' needs exactly the field 'samples'")
        samples = obj["samples"]
        if not isinstance(samples, list) or not samples:
            raise ParseError(f"{where}.samples: expected a non-empty list of [when, tensor] pairs")
        entries = []
        for k, pair in enumerate(samples):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"{where}.samples[{k}]: expected a [when, tensor] pair")
            when = _number(pair[0], f"{where}.samples[{k}]")
            value = _parse_tensor(pair[1], f"{where}.samples[{k}]")
            if value.shape != input_shape:
                raise ParseError(
                    f"{where}.samples[{k}]: shape {list(value.shape)} does not match "
                    f"input_shape {list(input_shape)}"
                )
            entries.append((when, value))
        try:
            return InputSignal.table(entries)
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
    raise ParseError(f"{where}.kind: expected 'zero', 'constant', or 'table', got {kind!r}")


def _parse_tensor_system(obj, path) -> SystemFile:
    _check_keys(
        obj,
        path,
        required=("time", "state_shape", "schedule", "x0"),
        optional=("input_shape", "output_shape", "input"),
    )
    time_kind = obj["time"]
    if time_kind not in ("discrete", "continuous"):
        raise ParseError(f"{path}.time: expected 'discrete' or 'continuous', got {time_kind!r}")
    state_shape = _parse_shape(obj["state_shape"], f"{path}.state_shape")
    input_shape = None
    if "input_shape" in obj:
        input_shape = _parse_shape(obj["input_shape"], f"{path}.input_shape")
    output_shape = None
    if "output_shape" in obj:
        output_shape = _parse_shape(obj["output_shape"], f"{path}.output_shape")
    raw_schedule = obj["schedule"]
    if not isinstance(raw_schedule, list) or not raw_schedule:
        raise ParseError(f"{path}.schedule: expected a non-empty list of segments")
    segments = []
    for k, seg in enumerate(raw_schedule):
        where = f"{path}.schedule[{k}]"
        _check_keys(seg, where, required=("start", "A"), optional=("B", "C", "D"))
        start = _number(seg["start"], f"{where}.start")
        coeffs = {}
        for name in ("A", "B", "C", "D"):
            if name in seg:
                coeffs[name] = _parse_tensor(seg[name], f"{where}.{name}")
        segments.append((start, CoefficientSet(**coeffs)))
    try:
        system = build_system(
            time_kind, state_shape, segments, input_shape=input_shape, output_shape=output_shape
        )
    except ShapeError:
        raise
    except ValueError as exc:
        raise ParseError(f"{path}.schedule: {exc}") from None
    x0 = _parse_tensor(obj["x0"], f"{path}.x0")
    if x0.shape != state_shape:
        raise ParseError(
            f"{path}.x0: shape {list(x0.shape)} does not match state_shape {list(state_shape)}"
        )
    signal = None
    if "input" in obj:
        if input_shape is None:
            raise ParseError(f"{path}.input: input given but the file declares no input_shape")
        signal = _parse_signal(obj["input"], input_shape, f"{path}.input")
    return SystemFile(system=system, x0=x0, input_signal=signal)


def _parse_matrix(value, where) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ParseError(f"{where}: expected a non-empty list of rows")
    rows = []
    for k, row in enumerate(value):
        if not isinstance(row, list):
            raise ParseError(f"{where}[{k}]: expected a list of numbers")
        rows.append([_number(v, f"{where}[{k}]") for v in row])
    width = len(rows[0])
    for k, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{where}[{k}]: row length {len(row)} != {width}")
    return np.array(rows)


def _process_function(spec, count, where):
    """Build the (process, index) -> value callable described by `spec`.

    Returns (callable, canonical_spec). A single spec object applies to all
    processes; a list supplies one spec per process.
    """
    if isinstance(spec, list):
        if len(spec) != count:
            raise ParseError(f"{where}: expected {count} per-process specs, got {len(spec)}")
        pairs = [
            _single_process_function(entry, f"{where}[{k}]") for k, entry in enumerate(spec)
        ]
        funcs = [func for func, _ in pairs]

        def dispatch(i, n):
            return funcs[i - 1](i, n)

        return dispatch, [canon for _, canon in pairs]
    return _single_process_function(spec, where)


def _single_process_function(spec, where):
    _check_keys(spec, where, required=("kind",), optional=("value", "values"))
    kind = spec.get("kind")
    if kind == "constant":
        if "value" not in spec or "values" in spec:
            raise ParseError(f"{where}: kind 'constant' needs exactly the field 'value'")
        value = _number(spec["value"], f"{where}.value")
        return constant_function(value), {"kind": "constant", "value": value}
    if kind == "index":
        if len(spec) > 1:
            raise ParseError(f"{where}: kind 'index' takes no other fields")
        return index_function(), {"kind": "index"}
    if kind == "table":
        if "values" not in spec or "value" in spec:
            raise ParseError(f"{where}: kind 'table' needs exactly the field 'values'")
        raw = spec["values"]
        if not isinstance(raw, list) or not raw:
            raise ParseError(f"{where}.values: expected a non-empty list of [index, value] pairs")
        table = {}
        for k, pair in enumerate(raw):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"{where}.values[{k}]: expected an [index, value] pair")
            idx = pair[0]
            if isinstance(idx, bool) or not isinstance(idx, int) or idx < 0:
                raise ParseError(f"{where}.values[{k}]: index must be an integer >= 0, got {idx!r}")
            if idx in table:
                raise ParseError(f"{where}.values[{k}]: duplicate index {idx}")
            table[idx] = _number(pair[1], f"{where}.values[{k}]")

        def lookup(i, n):
            return table[n]

        canon = {"kind": "table", "values": [[n, table[n]] for n in sorted(table)]}
        return lookup, canon
    raise ParseError(f"{where}.kind: expected 'constant', 'index', or 'table', got {kind!r}")


def _parse_multirate(obj, path) -> MultirateFile:
    _check_keys(
        obj, path, required=("kind", "A", "clocks", "boundary"), optional=("B", "input")
    )
    a = _parse_matrix(obj["A"], f"{path}.A")
    clocks = obj["clocks"]
    if not isinstance(clocks, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in clocks
    ):
        raise ParseError(f"{path}.clocks: expected a list of integers")
    count = a.shape[0]
    boundary, boundary_spec = _process_function(obj["boundary"], count, f"{path}.boundary")
    b = None
    input_func = None
    input_spec = None
    if "B" in obj:
        b = _parse_matrix(obj["B"], f"{path}.B")
        if "input" not in obj:
            raise ParseError(f"{path}: B given but no input")
    if "input" in obj:
        if b is None:
            raise ParseError(f"{path}.input: input given but no B")
        input_func, input_spec = _process_function(obj["input"], count, f"{path}.input")
    system = MultirateSystem(a, clocks, boundary, B=b, input=input_func)
    return MultirateFile(system=system, boundary_spec=boundary_spec, input_spec=input_spec)


def parse_system_file(path) -> SystemFile | MultirateFile:
    """Read and validate a system definition; see README for the format.

    Raises ParseError naming the bad field, or the underlying shape error
    verbatim when the tensors disagree with the declared shapes.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()

    def reject(literal):
        raise ParseError(f"{path}: non-finite number literal {literal!r} not allowed")

    try:
        obj = json.loads(text, parse_constant=reject)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a top-level object")
    if obj.get("kind") == "multirate":
        return _parse_multirate(obj, str(path))
    if "kind" in obj:
        raise ParseError(f"{path}.kind: expected 'multirate', got {obj['kind']!r}")
    return _parse_tensor_system(obj, str(path))


def _tensor_doc(t: Tensor) -> dict:
    return {"shape": list(t.shape), "data": [float(v) for v in t.data]}


def _signal_doc(signal: InputSignal) -> dict:
    if signal.kind == "zero":
        return {"kind": "zero"}
    if signal.kind == "constant":
        return {"kind": "constant", "value": _tensor_doc(signal.constant_value)}
    samples = [
        [_int_if_integral(when), _tensor_doc(value)] for when, value in signal.table_samples
    ]
    return {"kind": "table", "samples": samples}


def render_system_file(file) -> str:
    """Canonical JSON text for a parsed or constructed system file.

    Re-rendering the parse of this output reproduces it byte for byte.
    """
    if isinstance(file, MultirateFile):
        system = file.system
        doc = {"kind": "multirate", "A": [[float(v) for v in row] for row in system.A]}
        if system.B is not None:
            doc["B"] = [[float(v) for v in row] for row in system.B]
        doc["clocks"] = list(system.clocks)
        doc["boundary"] = file.boundary_spec
        if file.input_spec is not None:
            doc["input"] = file.input_spec
    else:
        system = file.system
        doc = {"time": system.time_kind, "state_shape": list(system.state_shape)}
        if system.has_input:
            doc["input_shape"] = list(system.input_shape)
        if any(coeffs.C is not None for _, coeffs in system.schedule):
            doc["output_shape"] = list(system.output_shape)
        segments = []
        for start, coeffs in system.schedule:
            seg = {"start": _int_if_integral(start), "A": _tensor_doc(coeffs.A)}
            for name in ("B", "C", "D"):
                value = getattr(coeffs, name)
                if value is not None:
                    seg[name] = _tensor_doc(value)
            segments.append(seg)
        doc["schedule"] = segments
        doc["x0"] = _tensor_doc(file.x0)
        if system.has_input:
            signal = file.input_signal if file.input_signal is not None else InputSignal.zero()
            doc["input"] = _signal_doc(signal)
    return json.dumps(doc, indent=2) + "\n"


def write_system_file(file, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_system_file(file))


def _columns(prefix, shape):
    return [f"{prefix}_" + "_".join(str(i) for i in idx) for idx in np.ndindex(*shape)]


def trajectory_csv(trajectory: Trajectory, emit_output=False) -> str:
    """CSV text: column t, then the vec'd state entries in row-major column
    order, then (with emit_output) the vec'd output entries."""
    first = trajectory[0]
    header = ["t"] + _columns("x", first.state.shape)
    if emit_output:
        header += _columns("y", first.output.shape)
    lines = [",".join(header)]
    for sample in trajectory:
        row = [_fmt(sample.when)] + [_fmt(v) for v in vec(sample.state)]
        if emit_output:
            row += [_fmt(v) for v in vec(sample.output)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def multirate_csv(values, clock) -> str:
    """CSV text for a multirate grid sweep: comment line with d and the
    per-process factors, then rows at n = 0, d, 2d, ..."""
    values = np.asarray(values, dtype=float)
    header = "# d={} f={}".format(clock.d, ",".join(str(f) for f in clock.factors))
    columns = "t," + ",".join(f"x_{i}" for i in range(1, values.shape[1] + 1))
    lines = [header, columns]
    for k, row in enumerate(values):
        lines.append(",".join([_fmt(k * clock.d)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def render_report(report) -> str:
    """Plain-text analysis report, one field per line, fixed order,
    absent parts omitted."""
    lines = [
        f"state_dim={report.state_dim}",
        f"spectral_radius={_fmt(report.spectral_radius)}",
    ]
    if report.max_real_part is not None:
        lines.append(f"max_real_part={_fmt(report.max_real_part)}")
    lines.append(f"stability={report.verdict}")
    if report.controllability_rank is not None:
        lines.append(f"controllability_rank={report.controllability_rank}")
    if report.observability_rank is not None:
        lines.append(f"observability_rank={report.observability_rank}")
    return "\n".join(lines) + "\n"
