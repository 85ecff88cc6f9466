"""Command-line entry point.

Settings come from, in increasing precedence: built-in defaults, a flat
``key = value`` config file given by ``--config``, and command-line flags.
Config keys are the long flag names with dashes or underscores. Relative
output paths are resolved against ``$CLUSTERTRANSFER_OUTDIR`` when it is set.

Exit codes: 0 success, 1 numerical contract violation, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import cluster, hilbert
from .atomsys import DissipationParams
from .cluster import Graph, LeakageError
from .protocol import (
    TransferError,
    five_level_transfer_protocol,
    format_trace,
    four_level_swap_protocol,
    protocol_trace,
    qubit_to_site,
    register_target,
    run_protocol,
    site_target,
    step_count,
    transfer_register,
)
from .sweep import CARDINAL_AVERAGE, FIXED_SUPERPOSITION, SweepConfig, emit_table, run_sweep, transfer_fidelity

OUTDIR_ENV = "CLUSTERTRANSFER_OUTDIR"
COMMANDS = ("transfer", "swap4", "register", "sweep", "mbqc-demo", "selftest")

DEFAULTS = {
    "s": 1.2,
    "h_right": 1.0,
    "fock_cutoff": 1,
    "seed": 0,
    "input": "g'",
    "n": 2,
    "graph": "chain",
    "scheme": "five",
    "gamma": None,
    "kappa": None,
    "policy": FIXED_SUPERPOSITION,
    "renormalize": False,
    "trace_steps": False,
    "out": None,
    "workers": 1,
    "angles": "0,0,0",
}

_R = 1 / math.sqrt(2)
NAMED_INPUTS = {
    "g": (1, 0), "0": (1, 0),
    "g'": (0, 1), "1": (0, 1),
    "+": (_R, _R), "plus": (_R, _R),
    "-": (_R, -_R), "minus": (_R, -_R),
    "+i": (_R, 1j * _R), "-i": (_R, -1j * _R),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    s: float = 1.2
    h_right: float = 1.0
    fock_cutoff: int = 1
    seed: int = 0
    input: str = "g'"
    n: int = 2
    graph: str = "chain"
    scheme: str = "five"
    gamma: str | None = None
    kappa: str | None = None
    policy: str = FIXED_SUPERPOSITION
    renormalize: bool = False
    trace_steps: bool = False
    out: str | None = None
    workers: int = 1
    angles: str = "0,0,0"

    @property
    def h_left(self) -> float:
        return self.s * self.h_right

    @property
    def dissipative(self) -> bool:
        return self.gamma is not None or self.kappa is not None


def read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes", "on"):
        return True
    if str(v).lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def parse_grid(text: str) -> list[float]:
    """``start:stop:count`` (inclusive linspace), a comma list, or a single value."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(count))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid specification {text!r}") from None


def parse_qubit(text: str) -> np.ndarray:
    if text in NAMED_INPUTS:
        return np.array(NAMED_INPUTS[text], dtype=complex)
    parts = text.split(",")
    try:
        if len(parts) != 2:
            raise ValueError
        return hilbert.ket([complex(p.replace(" ", "")) for p in parts], normalize=True)
    except ValueError:
        raise UsageError(f"unknown input state {text!r}; use one of {sorted(NAMED_INPUTS)} or 'a,b'") from None


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--s", type=float, help="coupling ratio h_L/h_R (default 1.2)")
    common.add_argument("--h-right", type=float, help="right-mode coupling h_R (default 1)")
    common.add_argument("--fock-cutoff", type=int, help="max photons per mode (default 1)")
    common.add_argument("--out", help="output file")

    dissip = argparse.ArgumentParser(add_help=False)
    dissip.add_argument("--gamma", help="atomic decay rate gamma/h")
    dissip.add_argument("--kappa", help="cavity decay rate kappa/h")

    parser = argparse.ArgumentParser(prog="clustertransfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transfer", parents=[common, dissip], help="five-level single-site transfer")
    p.add_argument("--input", help="atomic input: g, g', +, -, +i, -i or 'a,b'")
    p.add_argument("--trace-steps", action="store_const", const=True, help="print the step trace")
    p.add_argument("--renormalize", action="store_const", const=True, help="renormalize the photonic state")

    p = sub.add_parser("swap4", parents=[common, dissip], help="four-level three-step swap")
    p.add_argument("--input")
    p.add_argument("--trace-steps", action="store_const", const=True)

    p = sub.add_parser("register", parents=[common], help="transfer an n-qubit cluster state")
    p.add_argument("--n", type=int)
    p.add_argument("--graph", help="'chain' or an edge-list file")
    p.add_argument("--scheme", choices=("five", "four"))

    p = sub.add_parser("sweep", parents=[common, dissip], help="fidelity sweep over gamma and kappa")
    p.add_argument("--policy", choices=(FIXED_SUPERPOSITION, CARDINAL_AVERAGE))
    p.add_argument("--renormalize", action="store_const", const=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("mbqc-demo", parents=[common], help="one-way rotation through photonic readout")
    p.add_argument("--angles", help="three Euler angles xi,eta,zeta")
    p.add_argument("--seed", type=int)

    sub.add_parser("selftest", parents=[common], help="run built-in exactness checks")
    return parser


_TYPES = {"s": float, "h_right": float, "fock_cutoff": int, "seed": int, "n": int, "workers": int,
          "renormalize": _parse_bool, "trace_steps": _parse_bool}


def parse_args(argv=None) -> RunConfig:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _resolve(args)
    except (UsageError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _resolve(args) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    from_file = read_config_file(args.config) if args.config else {}
    unknown = set(from_file) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}")
    merged = dict(DEFAULTS)
    for key, value in from_file.items():
        try:
            merged[key] = _TYPES.get(key, str)(value)
        except ValueError:
            raise UsageError(f"bad value for {key}: {value!r}") from None
    merged.update(flags)
    c = RunConfig(command=args.command, **merged)
    _validate(c)
    return c


def _validate(c: RunConfig) -> None:
    if c.s <= 0 or c.h_right <= 0:
        raise UsageError("couplings must be positive")
    if c.fock_cutoff < 1:
        raise UsageError("--fock-cutoff must be >= 1")
    if c.command == "swap4" and c.dissipative:
        raise UsageError("dissipation is only modelled for the five-level transfer")
    if c.command == "register" and c.scheme == "four" and c.dissipative:
        raise UsageError("dissipation is only modelled for the five-level transfer")
    if c.command in ("transfer", "swap4"):
        parse_qubit(c.input)
    if c.command == "transfer":
        for name in ("gamma", "kappa"):
            value = getattr(c, name)
            if value is not None and (len(parse_grid(value)) != 1 or parse_grid(value)[0] < 0):
                raise UsageError(f"--{name} must be a single non-negative rate for transfer")
    if c.command == "sweep":
        grids = [parse_grid(c.gamma or "0:0.5:50"), parse_grid(c.kappa or "0.01,0.05,0.1")]
        if not all(grids) or min(min(g) for g in grids) < 0:
            raise UsageError("sweep grids must be nonempty and non-negative")
        if c.workers < 1:
            raise UsageError("--workers must be >= 1")
    if c.command == "register" and not 1 <= c.n:
        raise UsageError("--n must be >= 1")
    if c.command == "mbqc-demo":
        try:
            angles = [float(a) for a in c.angles.split(",")]
        except ValueError:
            raise UsageError(f"bad --angles {c.angles!r}") from None
        if len(angles) != 3:
            raise UsageError("--angles needs exactly three values")


def output_path(path: str) -> str:
    base = os.environ.get(OUTDIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _fmt(x: float) -> str:
    return f"{x:.12f}"


def _format_state(psi: np.ndarray, space, threshold: float = 1e-9) -> list[str]:
    lines = []
    for k in np.flatnonzero(np.abs(psi) > threshold):
        a = psi[k]
        lines.append(f"  {space.format_label(k)} {a.real:+.12f}{a.imag:+.12f}j")
    return lines


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(output_path(out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_transfer(c: RunConfig) -> int:
    qubit = parse_qubit(c.input)
    p = five_level_transfer_protocol(c.h_left, c.h_right)
    space = p.space(c.fock_cutoff)
    d = None
    if c.dissipative:
        d = DissipationParams(parse_grid(c.gamma or "0")[0], parse_grid(c.kappa or "0")[0], c.s)
    psi0 = qubit_to_site(p, space) @ qubit
    out = run_protocol(psi0, p, d, space=space)
    lines = [f"protocol FiveLevelTransfer stages={step_count(p, 1)} input={c.input}", "final state:"]
    lines += _format_state(out, space)
    lines.append(f"norm {_fmt(np.linalg.norm(out))}")
    f = transfer_fidelity(qubit, d or DissipationParams(0.0, 0.0, c.s), c.renormalize, c.fock_cutoff)
    lines.append(f"fidelity {_fmt(f)}")
    text = "\n".join(lines) + "\n"
    if c.trace_steps:
        text += "trace:\n" + format_trace(protocol_trace(psi0, p, d, space=space))
    _write_or_print(text, c.out)
    return 0 if -1e-12 <= f <= 1 + 1e-9 else 1


def _cmd_swap4(c: RunConfig) -> int:
    qubit = parse_qubit(c.input)
    p = four_level_swap_protocol(c.h_left, c.h_right)
    space = p.space(c.fock_cutoff)
    psi0 = qubit_to_site(p, space) @ qubit
    out = run_protocol(psi0, p, space=space)
    f = hilbert.overlap_fidelity(site_target(space) @ qubit, out)
    lines = [f"protocol FourLevelSwap stages={step_count(p, 1)} input={c.input}", "final state:"]
    lines += _format_state(out, space)
    lines.append(f"fidelity {_fmt(f)}")
    text = "\n".join(lines) + "\n"
    if c.trace_steps:
        text += "trace:\n" + format_trace(protocol_trace(psi0, p, space=space))
    _write_or_print(text, c.out)
    return 0 if f >= 1 - 1e-9 else 1


def _cmd_register(c: RunConfig) -> int:
    if c.graph == "chain":
        g = Graph.chain(c.n)
    else:
        with open(c.graph) as fh:
            g = cluster.parse_graph(fh.read())
    if c.scheme == "five":
        p = five_level_transfer_protocol(c.h_left, c.h_right)
    else:
        p = four_level_swap_protocol(c.h_left, c.h_right)
    state = cluster.graph_cluster_state(g)
    out = transfer_register(state, g.n, p, c.fock_cutoff, check=False)
    f = hilbert.overlap_fidelity(register_target(state, g.n, p, c.fock_cutoff), out)
    text = (f"register n={g.n} edges={sorted(g.edges)} scheme={p.label} dim={out.size} "
            f"steps={step_count(p, g.n)}\nfidelity {_fmt(f)}\n")
    _write_or_print(text, c.out)
    return 0 if f >= 1 - 1e-9 else 1


def _cmd_sweep(c: RunConfig) -> int:
    config = SweepConfig(parse_grid(c.gamma or "0:0.5:50"), parse_grid(c.kappa or "0.01,0.05,0.1"),
                         c.s, c.policy, c.renormalize, c.fock_cutoff)
    rows = run_sweep(config, c.workers)
    if c.out:
        emit_table(rows, output_path(c.out))
        print(f"wrote {len(rows)} rows to {output_path(c.out)}", file=sys.stderr)
    else:
        emit_table(rows, sys.stdout)
    return 0


def _cmd_mbqc(c: RunConfig) -> int:
    angles = [float(a) for a in c.angles.split(",")]
    result = cluster.mbqc_rotation_demo(angles, seed=c.seed, h_left=c.h_left, h_right=c.h_right)
    m = result.effective_map
    lines = [f"angles {' '.join(f'{a:.12g}' for a in result.angles)} seed {c.seed}",
             "site theta phi outcome probability"]
    lines += [r.format() for r in result.records]
    lines.append(f"byproduct x={result.byproduct[0]} z={result.byproduct[1]}")
    lines.append("effective map:")
    lines += [f"  {m[i, 0].real:+.12f}{m[i, 0].imag:+.12f}j {m[i, 1].real:+.12f}{m[i, 1].imag:+.12f}j"
              for i in range(2)]
    lines.append(f"max deviation from target {result.error:.3e}")
    _write_or_print("\n".join(lines) + "\n", c.out)
    return 0 if result.error < 1e-8 else 1


def selftest_checks(c: RunConfig | None = None):
    """Yield ``(name, passed)`` for the built-in exactness checks."""
    c = c or RunConfig("selftest")
    five = five_level_transfer_protocol(c.h_left, c.h_right)
    s5 = five.space(c.fock_cutoff)
    yield "five-level |g,0,0> -> |g,0L,1R>", \
        np.vdot(s5.ket("g", 0, 1), run_protocol(s5.ket("g"), five, space=s5)).real >= 1 - 1e-10
    yield "five-level |g',0,0> -> |g,1L,0R>", \
        np.vdot(s5.ket("g", 1, 0), run_protocol(s5.ket("g'"), five, space=s5)).real >= 1 - 1e-10
    four = four_level_swap_protocol(c.h_left, c.h_right)
    s4 = four.space(c.fock_cutoff)
    yield "four-level |g,0L,1R> -> |g,0L,1R>", \
        np.vdot(s4.ket("g", 0, 1), run_protocol(s4.ket("g", 0, 1), four, space=s4)).real >= 1 - 1e-10
    yield "four-level |g',0L,1R> -> |g,1L,0R>", \
        np.vdot(s4.ket("g", 1, 0), run_protocol(s4.ket("g'", 0, 1), four, space=s4)).real >= 1 - 1e-10
    f = transfer_fidelity(NAMED_INPUTS["+"], DissipationParams(0.0, 0.0, c.s), fock_cutoff=c.fock_cutoff)
    yield "fidelity at gamma = kappa = 0", abs(f - 1) < 1e-10


def _cmd_selftest(c: RunConfig) -> int:
    ok = True
    lines = []
    for name, passed in selftest_checks(c):
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}")
    _write_or_print("\n".join(lines) + "\n", c.out)
    return 0 if ok else 1


HANDLERS = {
    "transfer": _cmd_transfer,
    "swap4": _cmd_swap4,
    "register": _cmd_register,
    "sweep": _cmd_sweep,
    "mbqc-demo": _cmd_mbqc,
    "selftest": _cmd_selftest,
}


def dispatch(c: RunConfig) -> int:
    try:
        return HANDLERS[c.command](c)
    except (TransferError, LeakageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    try:
        c = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return dispatch(c)


if __name__ == "__main__":
    sys.exit(main())
