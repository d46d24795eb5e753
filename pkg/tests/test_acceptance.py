"""End-to-end acceptance checks, one test per criterion.

Each test prints a single "criterion N: PASS/FAIL - ..." line (visible with
pytest -s) and fails loudly otherwise. Tolerances are part of the contract,
not tuning knobs.
"""

import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from tensorstate import (
    CoefficientSet,
    InputSignal,
    MultirateSystem,
    Tensor,
    build_system,
    contract_last,
    controllability_rank,
    devec,
    eval_state,
    global_clock,
    lift_matrix_state,
    observability_rank,
    parse_system_file,
    render_system_file,
    simulate_continuous,
    simulate_discrete,
    solve_discrete_closed_form,
    spectral_radius,
    table_function,
    unfold,
    vec,
    vector_twin,
    write_system_file,
)
from tensorstate.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "sample_systems"


@contextmanager
def criterion(number, description):
    try:
        yield
    except Exception:
        print(f"criterion {number}: FAIL - {description}")
        raise
    print(f"criterion {number}: PASS - {description}")


def random_shape(rng, order, max_size=3):
    return tuple(int(rng.integers(2, max_size + 1)) for _ in range(order))


def test_criterion_1_contraction_unfolding():
    with criterion(1, "contraction-unfolding equivalence on 200 random pairs"):
        rng = np.random.default_rng(1001)
        started = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            order = int(rng.integers(1, 4))
            shape = random_shape(rng, order)
            a = Tensor.from_array(rng.normal(size=shape + shape))
            x = Tensor.from_array(rng.normal(size=shape))
            left = vec(contract_last(a, x))
            right = unfold(a, order) @ vec(x)
            worst = max(worst, float(np.max(np.abs(left - right))))
        elapsed = time.perf_counter() - started
        assert worst < 1e-12, f"worst deviation {worst}"
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_criterion_2_tensor_vector_equivalence():
    with criterion(2, "50 random order-2 systems match their unfolded twins"):
        rng = np.random.default_rng(1002)
        started = time.perf_counter()
        steps = 20
        for case in range(50):
            shape = random_shape(rng, 2)
            q = int(np.prod(shape))
            p = int(rng.integers(1, 4))
            kwargs = {
                "A": Tensor.from_array(rng.normal(size=shape + shape) * (0.8 / q)),
                "B": Tensor.from_array(rng.normal(size=shape + (p,))),
            }
            output_shape = None
            if case % 2 == 0:
                s = int(rng.integers(1, 4))
                kwargs["C"] = Tensor.from_array(rng.normal(size=(s,) + shape))
                kwargs["D"] = Tensor.from_array(rng.normal(size=(s, p)))
                output_shape = (s,)
            system = build_system(
                "discrete", shape, CoefficientSet(**kwargs),
                input_shape=(p,), output_shape=output_shape,
            )
            twin = vector_twin(system)
            table = [(n, rng.normal(size=p)) for n in range(steps)]
            x0 = Tensor.from_array(rng.normal(size=shape))
            traj = simulate_discrete(system, x0, steps, u=InputSignal.table(table))
            twin_traj = simulate_discrete(
                twin, devec(vec(x0), (q,)), steps, u=InputSignal.table(table)
            )
            assert np.max(np.abs(traj.state_matrix() - twin_traj.state_matrix())) < 1e-11
            assert np.max(np.abs(traj.output_matrix() - twin_traj.output_matrix())) < 1e-11
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_criterion_3_matrix_state_homogeneity():
    with criterion(3, "lifted matrix states equal per-column simulations"):
        rng = np.random.default_rng(1003)
        steps = 15
        for _ in range(20):
            k = int(rng.integers(2, 4))
            p = int(rng.integers(1, 3))
            columns = int(rng.integers(2, 5))
            m = rng.normal(size=(k, k)) * (0.9 / k)
            b = rng.normal(size=(k, p))
            lifted = lift_matrix_state(m, B=b, columns=columns)
            x0 = rng.normal(size=(k, columns))
            u_table = [(n, rng.normal(size=(p, columns))) for n in range(steps)]
            traj = simulate_discrete(
                lifted,
                Tensor.from_array(x0),
                steps,
                u=InputSignal.table(u_table),
            )

            column_system = build_system(
                "discrete",
                (k,),
                CoefficientSet(A=Tensor.from_array(m), B=Tensor.from_array(b)),
                input_shape=(p,),
            )
            for j in range(columns):
                col_table = [(n, u[:, j]) for n, u in u_table]
                col = simulate_discrete(
                    column_system,
                    Tensor.from_array(x0[:, j]),
                    steps,
                    u=InputSignal.table(col_table),
                )
                for n in range(steps + 1):
                    lifted_col = traj[n].state.array[:, j]
                    assert np.max(np.abs(lifted_col - col[n].state.array)) < 1e-12


def test_criterion_4_closed_form_vs_iteration():
    with criterion(4, "closed form matches iteration at n=50, spectral radius <= 1"):
        rng = np.random.default_rng(1004)
        for case in range(20):
            if case % 2 == 0:
                shape = (int(rng.integers(2, 5)),)
            else:
                shape = random_shape(rng, 2)
            q = int(np.prod(shape))
            a = rng.normal(size=shape + shape)
            rho = spectral_radius(a.reshape(q, q))
            a *= float(rng.uniform(0.3, 1.0)) / rho
            p = int(rng.integers(1, 3))
            system = build_system(
                "discrete",
                shape,
                CoefficientSet(
                    A=Tensor.from_array(a), B=Tensor.from_array(rng.normal(size=shape + (p,)))
                ),
                input_shape=(p,),
            )
            u = InputSignal.constant(Tensor.from_array(rng.normal(size=p)))
            x0 = Tensor.from_array(rng.normal(size=shape))
            iterated = simulate_discrete(system, x0, 50, u=u).final_state
            closed = solve_discrete_closed_form(system, x0, 50, u=u)
            assert np.max(np.abs(vec(closed) - vec(iterated))) < 1e-9


def test_criterion_5_rk4_convergence_order():
    with criterion(5, "RK4 terminal error drops 12x-20x when h halves"):
        rng = np.random.default_rng(1005)
        for _ in range(10):
            q = np.linalg.qr(rng.normal(size=(3, 3)))[0]
            eigs = rng.uniform(-2.0, -0.5, size=3)
            a = q @ np.diag(eigs) @ q.T
            b = rng.normal(size=(3, 1))
            system = build_system(
                "continuous",
                (3,),
                CoefficientSet(A=Tensor.from_array(a), B=Tensor.from_array(b)),
                input_shape=(1,),
            )
            u = InputSignal.constant(Tensor.from_array(rng.normal(size=1)))
            x0 = Tensor.from_array(rng.normal(size=3))
            reference = simulate_continuous(
                system, x0, 1.0, h=0.1, u=u, method="exact"
            ).final_state.array
            errors = []
            for h in (0.1, 0.05):
                got = simulate_continuous(
                    system, x0, 1.0, h=h, u=u, method="rk4"
                ).final_state.array
                errors.append(float(np.max(np.abs(got - reference))))
            ratio = errors[0] / errors[1]
            assert 12.0 <= ratio <= 20.0, f"ratio {ratio}"


def test_criterion_6_analysis_classics():
    with criterion(6, "controllability/observability/spectral radius classics"):
        def matrix_system(a, b=None, c=None):
            kwargs = {"A": Tensor.from_array(a)}
            input_shape = output_shape = None
            if b is not None:
                kwargs["B"] = Tensor.from_array(b)
                input_shape = (b.shape[1],)
            if c is not None:
                kwargs["C"] = Tensor.from_array(c)
                output_shape = (c.shape[0],)
            return build_system(
                "discrete", (a.shape[0],), CoefficientSet(**kwargs),
                input_shape=input_shape, output_shape=output_shape,
            )

        companion = matrix_system(
            np.array([[0.0, 1.0], [0.0, 0.0]]), b=np.array([[0.0], [1.0]])
        )
        assert controllability_rank(companion) == 2

        deficient = matrix_system(np.eye(2), b=np.array([[1.0], [0.0]]))
        assert controllability_rank(deficient) == 1

        rng = np.random.default_rng(1006)
        for _ in range(50):
            a = rng.normal(size=(4, 4))
            c = rng.normal(size=(2, 4))
            if rng.random() < 0.3:
                c[1] = 2.0 * c[0]
            obs = observability_rank(matrix_system(a, c=c))
            dual = controllability_rank(matrix_system(a.T, b=c.T))
            assert obs == dual

        assert abs(spectral_radius(np.diag([0.5, -0.25])) - 0.5) <= 1e-10


def test_criterion_7_multirate_worked_instance():
    with criterion(7, "worked multirate instance: clocks (2,3), values 4/10/11"):
        clock = global_clock((2, 3))
        assert clock.d == 6
        assert clock.factors == (3, 2)

        a = [[1.0, 1.0], [0.0, 1.0]]
        clocks = (2, 3)

        def boundary(i, n):
            return float(n) if i == 1 else 1.0

        # independent expansion of the dependency DAG, no memo, no engine code
        def expand(i, n):
            if n > 0 and n % 6 == 0:
                return sum(
                    a[i - 1][j] * expand(j + 1, n // clocks[j]) for j in range(2)
                )
            return boundary(i, n)

        bruteforce = [expand(1, n) for n in (6, 18, 36)]
        assert bruteforce == [4.0, 10.0, 11.0]

        system = MultirateSystem(A=a, clocks=clocks, boundary=boundary)
        engine = [eval_state(system, 1, n) for n in (6, 18, 36)]
        assert engine == bruteforce


def test_criterion_8_multirate_degeneracy():
    with criterion(8, "equal clocks reproduce subsampled single-rate runs"):
        rng = np.random.default_rng(1008)
        for case in range(10):
            c = int(rng.choice([2, 3]))
            m = int(rng.choice([1, 3, 5]))
            if m % c == 0:
                m += 1
            depth = 6
            a = rng.normal(size=(2, 2)) * 0.5
            with_input = case % 2 == 0
            x0 = rng.normal(size=2)

            u_values = {}
            b = None
            input_func = None
            if with_input:
                b = rng.normal(size=(2, 2)) * 0.5
                for i in (1, 2):
                    for j in range(depth + 1):
                        u_values[(i, m * c**j)] = float(rng.normal())
                input_func = table_function(u_values)

            def boundary(i, n, m=m, x0=x0):
                if n == m:
                    return float(x0[i - 1])
                raise LookupError

            multi = MultirateSystem(
                A=a, B=b, clocks=(c, c), boundary=boundary, input=input_func
            )

            kwargs = {"A": Tensor.from_array(a)}
            input_shape = None
            if with_input:
                kwargs["B"] = Tensor.from_array(b)
                input_shape = (2,)
            single = build_system(
                "discrete", (2,), CoefficientSet(**kwargs), input_shape=input_shape
            )
            u = None
            if with_input:
                u = InputSignal.table(
                    [
                        (j, [u_values[(1, m * c**j)], u_values[(2, m * c**j)]])
                        for j in range(depth)
                    ]
                )
            traj = simulate_discrete(single, Tensor.from_array(x0), depth, u=u)

            for j in range(depth + 1):
                for i in (1, 2):
                    chain = eval_state(multi, i, m * c**j)
                    reference = traj[j].state.tolist()[i - 1]
                    assert abs(chain - reference) < 1e-12


@pytest.mark.filterwarnings("ignore:overflow")
def test_criterion_9_cli_round_trip_and_exit_codes(tmp_path):
    with criterion(9, "CLI round trip, determinism, and exit-code contract"):
        # emit -> parse -> emit, byte-identical, for every shipped sample
        for name in sorted(path.name for path in SAMPLES.glob("*.json")):
            source = SAMPLES / name
            emitted = render_system_file(parse_system_file(source))
            assert emitted == source.read_text(encoding="utf-8"), name
            copy = tmp_path / name
            write_system_file(parse_system_file(source), copy)
            assert render_system_file(parse_system_file(copy)) == emitted, name

        # repeated simulate runs are byte-identical
        out1 = tmp_path / "run1.csv"
        out2 = tmp_path / "run2.csv"
        args = ["simulate", "--system", str(SAMPLES / "discrete_pair.json"),
                "--steps", "20", "--emit-output"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

        # exit-code contract on three crafted failure files
        malformed = tmp_path / "malformed.json"
        malformed.write_text("{broken", encoding="utf-8")
        assert main(
            ["simulate", "--system", str(malformed), "--out", str(tmp_path / "a.csv"),
             "--steps", "1"]
        ) == 1

        overflow = tmp_path / "overflow.json"
        overflow.write_text(
            json.dumps(
                {
                    "time": "discrete",
                    "state_shape": [1],
                    "schedule": [
                        {"start": 0, "A": {"shape": [1, 1], "data": [1e308]}}
                    ],
                    "x0": {"shape": [1], "data": [1e308]},
                }
            ),
            encoding="utf-8",
        )
        assert main(
            ["simulate", "--system", str(overflow), "--out", str(tmp_path / "b.csv"),
             "--steps", "3"]
        ) == 2

        missing = tmp_path / "missing_boundary.json"
        missing.write_text(
            json.dumps(
                {
                    "kind": "multirate",
                    "A": [[1, 1], [0, 1]],
                    "clocks": [2, 3],
                    "boundary": {"kind": "table", "values": [[0, 0.0]]},
                }
            ),
            encoding="utf-8",
        )
        assert main(
            ["multirate", "--system", str(missing), "--out", str(tmp_path / "c.csv"),
             "--horizon", "1"]
        ) == 2
