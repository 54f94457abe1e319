"""Run orchestration: ``su2plaq ground-state | evolve | observables``.

Options come from CLI flags with optional ``--config FILE`` defaults (simple
``key = value`` lines, same names as the flags).  Outputs land in ``--out``:
a versioned ``manifest.json`` plus the command's data files.  Exit codes:
0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from . import io_files as iof
from .chain import ChainSpec
from .evolution import EvolutionConfig, PropagationError, evolve, prepare_initial_state
from .ground_state import ConvergenceError, VacuumResult, self_consistent_vacuum
from .honeycomb import HoneycombSpec
from .models import TadpoleField, get_model_ops
from .observables import SRE_QUBIT_LIMIT, bipartite_entropy, stabilizer_renyi
from .paulis import StateVector

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_OPTION_TYPES = {
    "model": str, "L": int, "Lx": int, "Ly": int, "g": float,
    "dt": float, "tmax": float, "mode": str, "initial": str,
    "sc_tol": float, "sc_max_iter": int, "record_every": int, "krylov_dim": int,
    "tol": float, "max_iter": int, "mixing": float,
    "out": str, "vacuum_dir": str, "state": str, "source": str,
    "cut": str, "sre": str,
}

_DEFAULTS = {
    "g": 0.5, "dt": 0.025, "tmax": 10.0, "mode": "dynamical", "initial": "psi1",
    "sc_tol": 1e-10, "sc_max_iter": 100, "record_every": 1, "krylov_dim": 30,
    "tol": 1e-10, "max_iter": 200, "mixing": 1.0,
    "source": "vacuum", "sre": "auto",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="su2plaq",
        description="Truncated SU(2) plaquette simulator with dynamical tadpole improvement",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value file supplying defaults for any flag")
        p.add_argument("--model", choices=["chain", "honeycomb"])
        p.add_argument("--L", type=int, help="chain plaquette count")
        p.add_argument("--Lx", type=int, help="honeycomb cells in x")
        p.add_argument("--Ly", type=int, help="honeycomb cells in y")
        p.add_argument("--g", type=float, help="coupling (lattice units)")
        p.add_argument("--out", help="output directory")

    gs = sub.add_parser("ground-state", help="solve the self-consistent interacting vacuum")
    add_common(gs)
    gs.add_argument("--tol", type=float, help="max-norm tadpole-change tolerance")
    gs.add_argument("--max-iter", dest="max_iter", type=int)
    gs.add_argument("--mixing", type=float, help="fixed-point update fraction in (0, 1]")
    gs.set_defaults(func=cmd_ground_state)

    ev = sub.add_parser("evolve", help="time-evolve an initial state and record observables")
    add_common(ev)
    ev.add_argument("--dt", type=float)
    ev.add_argument("--tmax", type=float)
    ev.add_argument("--mode", choices=["dynamical", "unimproved", "vacuum"])
    ev.add_argument("--initial", choices=["psi1", "psi2"])
    ev.add_argument("--sc-tol", dest="sc_tol", type=float)
    ev.add_argument("--sc-max-iter", dest="sc_max_iter", type=int)
    ev.add_argument("--record-every", dest="record_every", type=int)
    ev.add_argument("--krylov-dim", dest="krylov_dim", type=int)
    ev.add_argument("--mixing", type=float)
    ev.add_argument("--vacuum-dir", dest="vacuum_dir", help="reuse a cached ground-state output directory")
    ev.add_argument("--dump-state", dest="dump_state", action="store_true",
                    help="also dump the final state vector")
    ev.set_defaults(func=cmd_evolve)

    ob = sub.add_parser("observables", help="report profiles, entropies and magic of a state")
    add_common(ob)
    ob.add_argument("--source", choices=["vacuum", "psi1", "psi2", "state"],
                    help="state to analyze (default: the interacting vacuum)")
    ob.add_argument("--state", help="state dump file (with --source state)")
    ob.add_argument("--vacuum-dir", dest="vacuum_dir")
    ob.add_argument("--tol", type=float)
    ob.add_argument("--max-iter", dest="max_iter", type=int)
    ob.add_argument("--mixing", type=float)
    ob.add_argument("--cut", help="comma-separated qubit list for the entropy cut")
    ob.add_argument("--sre", choices=["auto", "on", "off"],
                    help="stabilizer Renyi entropies (auto: when feasible)")
    ob.set_defaults(func=cmd_observables)
    return parser


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from --config, then from the hard defaults."""
    from_file: dict[str, str] = {}
    if getattr(args, "config", None):
        from_file = iof.parse_config(args.config)
        unknown = set(from_file) - set(_OPTION_TYPES)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, caster in _OPTION_TYPES.items():
        if getattr(args, key, None) is not None:
            continue
        if key in from_file:
            try:
                setattr(args, key, caster(from_file[key]))
            except ValueError as exc:
                raise ValueError(f"config key {key}: {exc}") from exc
        elif key in _DEFAULTS and hasattr(args, key):
            setattr(args, key, _DEFAULTS[key])
    return args


def _build_model(args):
    if args.model == "chain":
        if args.L is None:
            raise ValueError("chain model requires --L")
        return ChainSpec(args.L, args.g)
    if args.model == "honeycomb":
        if args.Lx is None or args.Ly is None:
            raise ValueError("honeycomb model requires --Lx and --Ly")
        return HoneycombSpec(args.Lx, args.Ly, args.g)
    raise ValueError("--model must be 'chain' or 'honeycomb'")


def _model_payload(spec) -> dict:
    if isinstance(spec, ChainSpec):
        return {"type": "chain", "L": spec.L, "g": spec.g}
    return {"type": "honeycomb", "Lx": spec.Lx, "Ly": spec.Ly, "g": spec.g}


def _out_dir(args) -> Path:
    if not args.out:
        raise ValueError("--out directory is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve_vacuum(spec, args, out: Path | None) -> VacuumResult:
    """Solve the vacuum, writing vacuum.json + vacuum.state when ``out`` is set."""
    result = self_consistent_vacuum(spec, tol=args.tol, max_iter=args.max_iter, mixing=args.mixing)
    if out is not None:
        iof.save_state(out / "vacuum.state", result.state.amplitudes)
        iof.write_vacuum(out / "vacuum.json", result, _model_payload(spec), "vacuum.state")
    return result


def _load_vacuum(spec, vacuum_dir) -> VacuumResult:
    vdir = Path(vacuum_dir)
    payload = iof.read_vacuum(vdir / "vacuum.json")
    if payload["model"] != _model_payload(spec):
        raise ValueError(
            f"cached vacuum in {vacuum_dir} was solved for {payload['model']}, "
            f"not {_model_payload(spec)}"
        )
    amps = iof.load_state(vdir / payload["state_file"])
    kind = payload["tadpole_kind"]
    return VacuumResult(
        state=StateVector(amps),
        tadpole=TadpoleField(np.array(payload["tadpole"]), kind),
        total_energy=payload["total_energy"],
        energy_density=payload["energy_density"],
        iterations=payload["iterations"],
        final_residual=payload["final_residual"],
        gap_estimate=payload["gap_estimate"],
        degenerate=False,
    )


def _vacuum_for(spec, args, out: Path | None) -> VacuumResult:
    if getattr(args, "vacuum_dir", None):
        return _load_vacuum(spec, args.vacuum_dir)
    return _solve_vacuum(spec, args, out)


# -- commands -----------------------------------------------------------------


def cmd_ground_state(args) -> int:
    spec = _build_model(args)
    out = _out_dir(args)
    started = time.time()
    result = _solve_vacuum(spec, args, out)
    iof.write_manifest(
        out / "manifest.json",
        {
            "command": "ground-state",
            "code_version": __version__,
            "model": _model_payload(spec),
            "duration_seconds": time.time() - started,
            "convergence": {
                "iterations": result.iterations,
                "final_residual": result.final_residual,
                "residual_history": result.residual_history,
            },
            "outputs": {"vacuum": "vacuum.json", "state": "vacuum.state"},
            "status": "success",
        },
    )
    print(f"energy_density = {iof.fmt(result.energy_density)}")
    print(f"total_energy   = {iof.fmt(result.total_energy)}")
    print(f"iterations     = {result.iterations}")
    u = result.tadpole.values
    print(f"tadpole[u^{result.tadpole.exponent}] = {np.array2string(u, precision=6)}")
    return 0


def cmd_evolve(args) -> int:
    spec = _build_model(args)
    out = _out_dir(args)
    cfg = EvolutionConfig(
        dt=args.dt,
        t_max=args.tmax,
        mode=args.mode,
        sc_tol=args.sc_tol,
        sc_max_iter=args.sc_max_iter,
        record_every=args.record_every,
        krylov_dim=args.krylov_dim,
        mixing=args.mixing,
    )
    started = time.time()
    vacuum = None
    if cfg.mode == "vacuum" or args.initial == "psi2":
        # reuse the cached solve when provided, otherwise embed one
        vac_args = argparse.Namespace(
            vacuum_dir=getattr(args, "vacuum_dir", None),
            tol=_DEFAULTS["tol"], max_iter=_DEFAULTS["max_iter"], mixing=args.mixing,
        )
        vacuum = _vacuum_for(spec, vac_args, out)
    psi0 = prepare_initial_state(args.initial, spec, vacuum)

    manifest = {
        "command": "evolve",
        "code_version": __version__,
        "model": _model_payload(spec),
        "evolution": {
            "dt": cfg.dt, "t_max": cfg.t_max, "mode": cfg.mode,
            "sc_tol": cfg.sc_tol, "sc_max_iter": cfg.sc_max_iter,
            "record_every": cfg.record_every, "krylov_dim": cfg.krylov_dim,
            "mixing": cfg.mixing,
        },
        "initial_state": args.initial,
        "outputs": {"series": "series.csv"},
    }
    csv_path = out / "series.csv"
    n_plaq = get_model_ops(spec).n_plaquettes
    try:
        with open(csv_path, "w") as fh:
            fh.write(iof.series_header(n_plaq) + "\n")

            def flush_row(record):
                fh.write(iof.format_record_row(record) + "\n")
                fh.flush()

            series = evolve(psi0, spec, vacuum, cfg, on_record=flush_row)
    except (ConvergenceError, PropagationError) as exc:
        manifest.update(
            status="error",
            error=str(exc),
            duration_seconds=time.time() - started,
        )
        iof.write_manifest(out / "manifest.json", manifest)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.dump_state:
        iof.save_state(out / "final.state", series.final_state.amplitudes)
        manifest["outputs"]["final_state"] = "final.state"
    histogram = Counter(len(trace) for trace in series.residual_traces)
    manifest.update(
        status="success",
        duration_seconds=time.time() - started,
        convergence={
            "vacuum_iterations": vacuum.iterations if vacuum else None,
            "step_iterations_histogram": {str(k): v for k, v in sorted(histogram.items())},
        },
    )
    iof.write_manifest(out / "manifest.json", manifest)
    print(f"wrote {len(series.records)} records to {csv_path}")
    return 0


def cmd_observables(args) -> int:
    spec = _build_model(args)
    out = _out_dir(args)
    started = time.time()
    ops = get_model_ops(spec)
    source = args.source
    vacuum = None
    if source in ("vacuum", "psi2"):
        vacuum = _vacuum_for(spec, args, out if source == "vacuum" else None)
    if source == "vacuum":
        psi = vacuum.state
    elif source == "state":
        if not args.state:
            raise ValueError("--source state requires --state FILE")
        amps = iof.load_state(args.state)
        if amps.size != 1 << ops.n_qubits:
            raise ValueError(
                f"state file holds {amps.size} amplitudes, model needs {1 << ops.n_qubits}"
            )
        psi = StateVector(amps)
    else:
        psi = prepare_initial_state(source, spec, vacuum)

    entries: list[tuple[str, object]] = [
        ("model", _model_payload(spec)["type"]),
        ("n_qubits", ops.n_qubits),
        ("source", source),
    ]
    profile = ops.measure_electric_profile(psi)
    field = ops.measure_tadpoles(psi)
    entries += [(f"E_{i}", float(v)) for i, v in enumerate(profile)]
    entries += [(f"u_{i}", float(v)) for i, v in enumerate(field.values)]

    n = ops.n_qubits
    if args.cut:
        cut = [int(tok) for tok in args.cut.split(",") if tok.strip() != ""]
        entries.append((f"entropy_cut_{args.cut}", bipartite_entropy(psi, cut)))
    else:
        entries.append(("entropy_half", bipartite_entropy(psi, list(range(n // 2)))))
        for q in range(n):
            entries.append((f"entropy_site_{q}", bipartite_entropy(psi, [q])))

    if args.sre == "on" or (args.sre == "auto" and n <= SRE_QUBIT_LIMIT):
        m1 = stabilizer_renyi(psi, 1)
        m2 = stabilizer_renyi(psi, 2)
        entries += [
            ("M1", m1.value), ("M2", m2.value),
            ("M1_per_L", m1.per_qubit), ("M2_per_L", m2.per_qubit),
            ("sre_log_base", m1.log_base),
        ]

    iof.write_report(out / "report.txt", entries)
    iof.write_manifest(
        out / "manifest.json",
        {
            "command": "observables",
            "code_version": __version__,
            "model": _model_payload(spec),
            "source": source,
            "duration_seconds": time.time() - started,
            "outputs": {"report": "report.txt"},
            "status": "success",
        },
    )
    for key, value in entries:
        print(f"{key} = {iof.fmt(value) if isinstance(value, float) else value}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return args.func(args)
    except (ConvergenceError, PropagationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
