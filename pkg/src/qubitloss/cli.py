"""Command-line entry point: ``qubitloss <subcommand> ...``.

Exit status is 0 on success, 2 on a usage error and 1 on a runtime error.
Every subcommand accepts ``--config FILE`` with ``key = value`` lines (keys
are option names without the leading dashes); flags given on the command
line win over the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import cavity
from .circuit import Circuit
from .correction import MeasurementMode, correct_after_loss
from .errors import QubitLossError
from .gbp import GBP, LogicalQubit, encode, logical_state, repetition_code, verify_erasure_code
from .leakage import LevelLabel, handle_leak
from .loss import apply_loss, compensate_qnd_phase, insert_fresh, qnd_phase, qnd_sweep
from .montecarlo import TrialConfig, analytic_failure, run_trials, summarize
from .qstate import DensityMatrix

CSV_COLUMNS = ["f", "detuning_ratio", "N", "phi", "delta_phi", "N_sc", "cond_i", "cond_ii"]
TRIAL_COLUMNS = ["trial", "failed", "n_losses", "n_leaks", "final_fidelity"]


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_level(text: str) -> LevelLabel:
    try:
        f, m = (int(x) for x in text.split(","))
        return LevelLabel(f, m)
    except (ValueError, QubitLossError):
        raise argparse.ArgumentTypeError(f"expected a level as F,m (e.g. 1,+1), got {text!r}") from None


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path: str) -> dict[str, str]:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise QubitLossError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_state(path: str) -> DensityMatrix:
    if path == "-":
        return DensityMatrix.from_json(sys.stdin.read())
    with open(path) as fh:
        return DensityMatrix.from_json(fh.read())


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _logical(args) -> LogicalQubit:
    if getattr(args, "normalize", False):
        return LogicalQubit.normalized(args.c0, args.c1)
    return LogicalQubit(args.c0, args.c1)


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(args.seed)


def _print_circuit(circuit: Circuit) -> None:
    sys.stdout.write(circuit.to_text())


# --- subcommands --------------------------------------------------------------


def cmd_encode(args) -> int:
    rho = encode(_logical(args))
    _write(rho.to_json() + "\n", args.output)
    return 0


def cmd_lose(args) -> int:
    rho = _load_state(args.input) if args.input else encode(_logical(args))
    rho = apply_loss(rho, args.site)
    if args.reinsert:
        rho = insert_fresh(rho, args.site, args.depolarizing)
    _write(rho.to_json() + "\n", args.output)
    return 0


def _report(outcome, lost_site: int, emit_circuit: bool) -> None:
    print(f"lost site: {lost_site}")
    print(f"measured bit: {outcome.measured_bit} (probability {outcome.probability:.12g})")
    if outcome.recovered_fidelity is not None:
        print(f"recovered fidelity: {round(outcome.recovered_fidelity, 12)!r}")
    if emit_circuit:
        print("circuit:")
        _print_circuit(outcome.circuit_applied)


def cmd_correct(args) -> int:
    rho = _load_state(args.input)
    if rho.n_qubits != 4:
        raise QubitLossError(f"correct expects a refilled 4-qubit register, got {rho.n_qubits} qubits")
    reference = None
    if args.c0 is not None or args.c1 is not None:
        c0 = 0 if args.c0 is None else args.c0
        c1 = 0 if args.c1 is None else args.c1
        reference = logical_state(LogicalQubit(c0, c1))
    outcome = correct_after_loss(
        rho.with_sites(None), args.lost_site, args.mode, rng=_rng(args),
        forced_bit=args.force_bit, reference=reference,
    )
    if args.emit_circuit:
        _print_circuit(outcome.circuit_applied)
    else:
        _report(outcome, args.lost_site, False)
    if args.output:
        _write(outcome.output.to_json() + "\n", args.output)
    return 0


def cmd_run_protocol(args) -> int:
    lq = _logical(args)
    reference = logical_state(lq)
    rho = encode(lq)
    rng = _rng(args)
    site = args.lost_site
    if args.leak_level is not None:
        rho, rec = handle_leak(rho, site, args.leak_level)
        print(f"leak at site {site}: identified {rec.classification.identified}")
        sys.stdout.write(rec.plan.to_text())
    else:
        rho = apply_loss(rho, site)
        occupancy = [s != site for s in range(1, 5)]
        (event,) = qnd_sweep(occupancy)
        if args.qnd_phase:
            rho = compensate_qnd_phase(qnd_phase(rho, args.qnd_phase), args.qnd_phase)
        rho = insert_fresh(rho, event.site, args.depolarizing)
    outcome = correct_after_loss(
        rho.with_sites(None), site, args.mode, rng=rng, forced_bit=args.force_bit, reference=reference
    )
    _report(outcome, site, True)
    return 0


def cmd_verify_code(args) -> int:
    code = GBP if args.code == "gbp" else repetition_code()
    if args.position == "all":
        positions = range(1, code.n_physical + 1)
    else:
        positions = [int(args.position)]
    reports = [verify_erasure_code(code, p) for p in positions]
    if args.json:
        doc = [
            {"position": r.position, "correctable": r.correctable, "max_violation": r.max_violation}
            for r in reports
        ]
        print(json.dumps({"code": code.name, "positions": doc}))
    else:
        for r in reports:
            verdict = "true" if r.correctable else "false"
            print(f"position {r.position}: correctable: {verdict} (max violation {r.max_violation:.3e})")
    return 0 if all(r.correctable for r in reports) or not args.strict else 1


def _photon_numbers(args) -> list[float]:
    if args.n_logspace:
        lo, hi, num = args.n_logspace
        return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), int(num))]
    return args.photon_number


def cmd_sweep_cavity(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for f, ratio, n in itertools.product(args.finesse, args.detuning_ratio, _photon_numbers(args)):
        params = cavity.CavityParams(
            finesse=f, detuning_ratio=ratio, photon_number=n, waist_ratio=args.waist_ratio,
            wavelength=args.wavelength, atom_radius=args.atom_radius, d0=args.d0, k=args.k,
        )
        rep = cavity.feasibility(params)
        writer.writerow([
            _fmt(f), _fmt(ratio), _fmt(n),
            "nan" if rep.phi is None else _fmt(rep.phi),
            _fmt(rep.delta_phi), _fmt(rep.n_sc),
            str(rep.condition_i).lower(), str(rep.condition_ii).lower(),
        ])
    _write(buf.getvalue(), args.output)
    if args.summary:
        for f, ratio in itertools.product(args.finesse, args.detuning_ratio):
            window = cavity.photon_window(f, ratio)
            text = "empty" if window is None else f"({window[0]:.6g}, {window[1]:.6g})"
            print(f"# f={f:g} detuning_ratio={ratio:g}: photon window {text}", file=sys.stderr)
    return 0


def cmd_montecarlo(args) -> int:
    cfg = TrialConfig(
        p_loss=args.p_loss, p_leak=args.p_leak, cycles=args.cycles, sweep_period=args.sweep_period,
        seed=args.seed, c0=args.c0, c1=args.c1, mode=args.mode, qnd_phase=args.qnd_phase,
    )
    results = run_trials(cfg, args.trials, args.jobs)
    est = summarize(results)
    summary = {
        "p_loss": cfg.p_loss,
        "p_leak": cfg.p_leak,
        "cycles": cfg.cycles,
        "sweep_period": cfg.sweep_period,
        "seed": cfg.seed,
        "trials": est.n_trials,
        "n_failed": est.n_failed,
        "p_fail_hat": est.p_fail_hat,
        "stderr": est.stderr,
        "p_fail_analytic": analytic_failure(cfg),
    }
    print(json.dumps(summary))
    if args.per_trial_csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for i, r in enumerate(results):
            writer.writerow([i, int(r.failed), r.n_losses, r.n_leaks, _fmt(r.final_fidelity)])
        _write(buf.getvalue(), args.per_trial_csv)
    return 0


# --- parser -------------------------------------------------------------------


def _add_logical(p, required=True):
    p.add_argument("--c0", type=parse_complex, default=None if not required else 1.0,
                   help="amplitude of |0_L> (complex, e.g. 0.6 or 0.6j)")
    p.add_argument("--c1", type=parse_complex, default=None if not required else 0.0,
                   help="amplitude of |1_L>")
    if required:
        p.add_argument("--normalize", action="store_true", help="rescale c0, c1 to unit norm")


def _add_measurement(p):
    p.add_argument("--mode", choices=[m.value for m in MeasurementMode], default="projective")
    p.add_argument("--force-bit", type=int, choices=[0, 1], default=None,
                   help="post-select the qubit-2 outcome instead of sampling it")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="qubitloss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
        p.add_argument("--config", metavar="FILE", help="key=value defaults for this command")
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("encode", cmd_encode, "print the encoded logical state as fixture JSON")
    _add_logical(p)
    p.add_argument("--output", "-o", help="write to FILE instead of stdout")

    p = add("lose", cmd_lose, "lose one qubit of an encoded state (and refill the site)")
    _add_logical(p)
    p.add_argument("--input", help="fixture JSON to start from instead of encoding c0, c1")
    p.add_argument("--site", type=int, required=True)
    p.add_argument("--reinsert", type=parse_bool, default=True, help="refill with |0> (default true)")
    p.add_argument("--depolarizing", type=float, default=0.0, help="imperfection of the inserted atom")
    p.add_argument("--output", "-o")

    p = add("correct", cmd_correct, "run the recovery circuit on a refilled 4-qubit fixture")
    p.add_argument("--input", required=True, help="fixture JSON ('-' for stdin)")
    p.add_argument("--lost-site", type=int, required=True)
    _add_measurement(p)
    _add_logical(p, required=False)
    p.add_argument("--emit-circuit", action="store_true", help="print only the applied circuit")
    p.add_argument("--output", "-o", help="write the corrected state as fixture JSON")

    p = add("run-protocol", cmd_run_protocol, "encode, lose (or leak), refill and correct")
    _add_logical(p)
    p.add_argument("--lost-site", type=int, default=1)
    p.add_argument("--leak-level", type=parse_level, default=None,
                   help="leak to this F,m level instead of losing the atom")
    p.add_argument("--qnd-phase", type=float, default=0.0, help="QND phase per sweep (compensated)")
    p.add_argument("--depolarizing", type=float, default=0.0)
    _add_measurement(p)

    p = add("verify-code", cmd_verify_code, "check the erasure conditions of a code")
    p.add_argument("--position", default="all", help="1..n or 'all'")
    p.add_argument("--code", choices=["gbp", "repetition"], default="gbp")
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true", help="exit 1 if any position fails")

    p = add("sweep-cavity", cmd_sweep_cavity, "tabulate QND feasibility as CSV")
    p.add_argument("--finesse", type=parse_float_list, default=[1e5])
    p.add_argument("--detuning-ratio", type=parse_float_list, default=[1e3])
    p.add_argument("--photon-number", type=parse_float_list, default=[1.0])
    p.add_argument("--n-logspace", type=float, nargs=3, metavar=("MIN", "MAX", "NUM"))
    p.add_argument("--d0", type=float, default=None, help="resonant optical density")
    p.add_argument("--wavelength", type=float, default=None, help="meters")
    p.add_argument("--atom-radius", type=float, default=None, help="w0 in meters")
    p.add_argument("--waist-ratio", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0, help="shot-noise prefactor")
    p.add_argument("--summary", action="store_true", help="print photon windows to stderr")
    p.add_argument("--output", "-o")

    p = add("montecarlo", cmd_montecarlo, "estimate the logical failure rate")
    p.add_argument("--p-loss", type=float, default=0.0)
    p.add_argument("--p-leak", type=float, default=0.0)
    p.add_argument("--cycles", type=int, default=1)
    p.add_argument("--sweep-period", type=int, default=1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c0", type=parse_complex, default=1.0)
    p.add_argument("--c1", type=parse_complex, default=0.0)
    p.add_argument("--mode", choices=[m.value for m in MeasurementMode], default="projective")
    p.add_argument("--qnd-phase", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--per-trial-csv", metavar="FILE")

    return parser, subs


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "version", "config"):
            sub.error(f"unknown config key {key!r}")
        if action.nargs == 0:
            defaults[key] = parse_bool(raw)
        elif action.nargs is not None:
            conv = action.type or str
            defaults[key] = [conv(x) for x in raw.split()]
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except argparse.ArgumentTypeError as exc:
                sub.error(f"config key {key!r}: {exc}")
        if action.required:
            action.required = False
    sub.set_defaults(**defaults)


def _find_config(argv: list[str], subs: dict) -> tuple[str, str] | None:
    """(subcommand, path) when ``--config`` is present, found before full parsing."""
    command = next((a for a in argv if a in subs), None)
    if command is None:
        return None
    rest = argv[argv.index(command) + 1 :]
    for i, arg in enumerate(rest):
        if arg == "--config" and i + 1 < len(rest):
            return command, rest[i + 1]
        if arg.startswith("--config="):
            return command, arg.split("=", 1)[1]
    return None


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subs = build_parser()
    try:
        config = _find_config(argv, subs)
        if config is not None:
            command, path = config
            _apply_config(subs[command], read_config(path))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (QubitLossError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
