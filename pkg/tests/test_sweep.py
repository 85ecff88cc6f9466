import io
import math

import numpy as np
import pytest

from clustertransfer.atomsys import DissipationParams
from clustertransfer.sweep import (
    CARDINAL_AVERAGE,
    CARDINAL_STATES,
    HEADER,
    PLUS,
    SweepConfig,
    SweepRow,
    curves,
    emit_table,
    format_number,
    read_table,
    run_sweep,
    transfer_fidelity,
)

# Computed once with tests/oracle.py (mpmath, 40 digits) before the package existed.
FROZEN = {
    (0.05, 0.05): 0.93055563580642588149,
    (0.2, 0.01): 0.86304853809692116747,
}


@pytest.mark.parametrize("q", CARDINAL_STATES, ids=["0", "1", "+", "-", "+i", "-i"])
def test_no_decay_is_perfect(q):
    assert transfer_fidelity(q, DissipationParams(0, 0)) == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("point", sorted(FROZEN))
def test_frozen_oracle_values(point):
    f = transfer_fidelity(PLUS, DissipationParams(*point, s=1.2))
    assert abs(f - FROZEN[point]) < 1e-9


def test_equal_rates_closed_form():
    # gamma == kappa: each branch decays uniformly during its own wait
    for g in (0.01, 0.05, 0.3):
        expect = (math.exp(-g * math.pi / 2.4) + math.exp(-g * math.pi / 2)) / 2
        assert transfer_fidelity(PLUS, DissipationParams(g, g)) == pytest.approx(expect, abs=1e-12)


@pytest.mark.slow
def test_oracle_reproduces_frozen_values():
    oracle = pytest.importorskip("oracle")
    for (g, k), value in FROZEN.items():
        assert abs(float(oracle.five_level_fidelity(g, k)) - value) < 1e-15


def test_renormalized_not_below_raw():
    for g, k in [(0.05, 0.05), (0.2, 0.01), (0.5, 0.1), (0.0, 0.3)]:
        d = DissipationParams(g, k)
        for q in CARDINAL_STATES:
            assert transfer_fidelity(q, d, renormalize=True) >= transfer_fidelity(q, d) - 1e-12


def test_larger_fock_cutoff_agrees():
    d = DissipationParams(0.1, 0.07)
    assert abs(transfer_fidelity(PLUS, d, fock_cutoff=2) - transfer_fidelity(PLUS, d)) < 1e-12


def test_input_must_be_qubit():
    with pytest.raises(ValueError):
        transfer_fidelity([1, 0, 0], DissipationParams())


def test_single_point_grid():
    rows = run_sweep(SweepConfig((0.0,), (0.0,)))
    assert len(rows) == 1
    assert rows[0].fidelity == pytest.approx(1, abs=1e-10)


def test_grid_shape_and_monotone():
    c = SweepConfig(np.linspace(0, 0.5, 11), (0.01, 0.05, 0.1))
    rows = run_sweep(c)
    assert len(rows) == 33
    by_kappa = curves(rows)
    assert list(by_kappa) == [0.01, 0.05, 0.1]
    for curve in by_kappa.values():
        fs = [r.fidelity for r in curve]
        assert all(b <= a + 1e-9 for a, b in zip(fs, fs[1:]))
    for lo, mid, hi in zip(*by_kappa.values()):
        assert lo.fidelity >= mid.fidelity >= hi.fidelity


def test_monotone_in_kappa():
    fs = [transfer_fidelity(PLUS, DissipationParams(0.1, k)) for k in np.linspace(0, 0.5, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))


def test_cardinal_average_policy():
    d = (0.1, 0.05)
    row, = run_sweep(SweepConfig((d[0],), (d[1],), input_state_policy=CARDINAL_AVERAGE))
    expect = np.mean([transfer_fidelity(q, DissipationParams(*d)) for q in CARDINAL_STATES])
    assert row.fidelity == pytest.approx(expect, abs=1e-15)


def test_workers_do_not_change_output():
    c = SweepConfig(np.linspace(0, 0.5, 7), (0.1, 0.01))
    serial, threaded = run_sweep(c), run_sweep(c, workers=4)
    assert serial == threaded
    assert [r.kappa_over_h for r in serial][:7] == [0.01] * 7


def test_sweep_is_deterministic():
    c = SweepConfig((0.0, 0.25, 0.5), (0.05,))
    a, b = io.StringIO(), io.StringIO()
    emit_table(run_sweep(c), a)
    emit_table(run_sweep(c), b)
    assert a.getvalue() == b.getvalue()


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig((), (0.1,))
    with pytest.raises(ValueError):
        SweepConfig((-0.1,), (0.1,))
    with pytest.raises(ValueError):
        SweepConfig((0.1,), (0.1,), input_state_policy="Other")
    with pytest.raises(ValueError):
        SweepRow(0, 0, 1.2, 1.5)


def test_emit_header_only():
    out = io.StringIO()
    emit_table([], out)
    assert out.getvalue() == ",".join(HEADER) + "\n"


def test_emit_single_row():
    out = io.StringIO()
    emit_table([SweepRow(0, 0, 1.2, 1)], out)
    assert out.getvalue().splitlines()[1] == "0,0,1.2,1.000000000000"


def test_format_number():
    assert [format_number(x) for x in (0, 0.5, 1.2, 1e-5, 0.1 + 0.2)] == ["0", "0.5", "1.2", "1e-05", "0.30000000000000004"]


def test_table_round_trip(tmp_path):
    rows = run_sweep(SweepConfig(np.linspace(0, 0.5, 4), (0.01, 0.1)))
    path = str(tmp_path / "t.csv")
    emit_table(rows, path)
    back = read_table(path)
    for a, b in zip(rows, back, strict=True):
        assert (a.gamma_over_h, a.kappa_over_h, a.s) == (b.gamma_over_h, b.kappa_over_h, b.s)
        assert b.fidelity == float(f"{a.fidelity:.12f}")


def test_read_rejects_bad_header():
    with pytest.raises(ValueError):
        read_table(io.StringIO("a,b,c,d\n"))
