"""Command-line front end: simulate, certify, sweep, verify, validate.

Exit status is 0 when everything requested passed, 1 when a certificate or
study failed, and 2 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import verify
from .config import RunOptions, build_config, load_document, numeric_keys, set_key
from .dynamics import ConfigError, SimulationError, SystemConfig, Trajectory, simulate
from .sliding import COLUMNS, Certificate, certify

__all__ = [
    "RunManifest",
    "main",
    "run",
    "sweep",
    "write_trajectory",
    "read_trajectory",
    "write_certificate",
    "read_record",
    "WORKERS_ENV",
]

WORKERS_ENV = "PHASEFIELD_SMC_WORKERS"
STUDIES = ("modes", "eps", "dt", "contdep", "energy", "signderiv", "oracle")
SWEEP_COLUMNS = ("psi0", "G", "M", "T_star_observed", "T_star_bound", "passed")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: Path | None
    out_dir: Path | None = None
    axis: str | None = None
    ladder: tuple[float, ...] = ()
    study: str | None = None
    emit_coeffs: bool = False


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def write_trajectory(path: Path, traj: Trajectory, emit_coeffs: bool = False):
    """Diagnostics table, one row per step; optional coefficient columns."""
    diag = traj.diagnostics
    cols = [diag[name] for name in COLUMNS]
    header = list(COLUMNS)
    if emit_coeffs:
        n = traj.config.basis.n_modes
        for name in ("w", "theta", "phi"):
            header += [f"{name}_{k}" for k in range(n)]
        data = np.column_stack(cols + [traj.w, traj.theta, traj.phi])
    else:
        data = np.column_stack(cols)
    _atomic_write(path, _table(header, data.tolist()))


def read_trajectory(path: Path) -> dict[str, np.ndarray]:
    """Inverse of :func:`write_trajectory`: column name to float array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _record_text(record: dict[str, str]) -> str:
    return "".join(f"{k}={v}\n" for k, v in record.items())


def write_certificate(path: Path, cert: Certificate):
    _atomic_write(path, _record_text(cert.as_record()))


def read_record(path: Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition("=")
        out[key] = value
    return out


def _load(path: Path | None) -> dict:
    if path is None:
        raise UsageError("--config is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return load_document(text)


def _simulate(c: SystemConfig, opts: RunOptions) -> Trajectory:
    return simulate(c, method=opts.method)


def _certify_run(doc: dict, out_dir: Path | None, emit: bool) -> tuple[Certificate, SystemConfig]:
    c, opts = build_config(doc)
    traj = _simulate(c, opts)
    cert = certify(traj, delta=opts.delta)
    if out_dir is not None:
        write_trajectory(out_dir / "trajectory.csv", traj, emit)
        write_certificate(out_dir / "certificate.txt", cert)
    return cert, c


def _sweep_level(args) -> list:
    doc, axis, value, level_dir, emit = args
    cert, _ = _certify_run(set_key(doc, axis, value), level_dir, emit)
    return [value, cert.psi0, cert.G, cert.M, cert.T_star_observed, cert.T_star_bound, cert.passed]


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer (got {raw!r})") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer (got {n})")
    return n


def sweep(m: RunManifest, out=None) -> int:
    """One certified run per ladder value, then a consolidated table.

    If a level fails with an error, the rows finished before it are still
    written and the status is 2.
    """
    out = sys.stdout if out is None else out
    doc = _load(m.config_path)
    axis = m.axis or "control.rho"
    if axis not in numeric_keys():
        raise UsageError(f"unknown sweep axis {axis!r}; numeric keys: {', '.join(numeric_keys())}")
    if not m.ladder:
        raise UsageError("sweep needs a ladder (--rho or --ladder)")
    out_dir = m.out_dir or Path(".")
    jobs = [
        (doc, axis, v, out_dir / f"level_{i:03d}", m.emit_coeffs) for i, v in enumerate(m.ladder)
    ]
    header = [axis, *SWEEP_COLUMNS]
    rows: list[list] = []
    status = EXIT_OK
    workers = min(_workers(), len(jobs))
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_sweep_level, jobs):
                    rows.append(row)
        else:
            for job in jobs:
                rows.append(_sweep_level(job))
    except (ConfigError, SimulationError, ValueError, KeyError) as exc:
        _atomic_write(out_dir / "sweep.csv", _table(header, rows))
        msg = "; ".join(exc.diagnostics) if isinstance(exc, ConfigError) else str(exc)
        print(f"error at level {len(rows)} ({axis}={m.ladder[len(rows)]!r}): {msg}", file=sys.stderr)
        return EXIT_ERROR
    _atomic_write(out_dir / "sweep.csv", _table(header, rows))
    for row in rows:
        print(f"{axis}={_fmt(row[0])} T_star_observed={_fmt(row[4])} passed={_fmt(row[-1])}", file=out)
        if not row[-1]:
            status = EXIT_FAIL
    return status


def _study(m: RunManifest, doc: dict) -> verify.StudyReport:
    c, opts = build_config(doc)
    ladder = list(m.ladder)
    if m.study == "modes":
        return verify.mode_convergence(c, [int(v) for v in ladder] or (16, 32, 64))
    if m.study == "eps":
        return verify.eps_convergence(c, ladder or (1e-1, 3e-2, 1e-2))
    if m.study == "dt":
        return verify.dt_convergence(c, ladder or (4e-4, 2e-4, 1e-4), method=opts.method)
    if m.study == "contdep":
        rhos = [c.rho, 2 * c.rho] if c.rho > 0 else [c.rho]
        return verify.continuous_dependence(c, ladder or (1e-2, 1e-3), rhos=rhos)
    if m.study == "oracle":
        return verify.linear_oracle_order(opts.method, ladder or None)
    traj = _simulate(c, opts)
    if m.study == "energy":
        return verify.energy_monitor(traj)
    return verify.sign_derivative_check(traj)


def _verify(m: RunManifest, out) -> int:
    if m.study not in STUDIES:
        raise UsageError(f"--study must be one of {', '.join(STUDIES)}")
    report = _study(m, _load(m.config_path))
    out_dir = m.out_dir or Path(".")
    header, rows = report.rows()
    _atomic_write(out_dir / "report.csv", _table(header, rows))
    _atomic_write(out_dir / "report.txt", _record_text(report.summary()))
    print(f"study={report.kind} passed={_fmt(report.passed)}", file=out)
    for name, ok in report.checks.items():
        if not ok:
            print(f"failed check: {name}", file=out)
    return EXIT_OK if report.passed else EXIT_FAIL


def run(m: RunManifest, out=None) -> int:
    """Execute one manifest and return the exit status."""
    out = sys.stdout if out is None else out
    try:
        if m.command == "validate":
            build_config(_load(m.config_path))
            print("config ok", file=out)
            return EXIT_OK
        if m.command == "simulate":
            c, opts = build_config(_load(m.config_path))
            traj = _simulate(c, opts)
            write_trajectory((m.out_dir or Path(".")) / "trajectory.csv", traj, m.emit_coeffs)
            print(f"steps={len(traj) - 1} psi_final={_fmt(traj.diagnostics['psi'][-1])}", file=out)
            return EXIT_OK
        if m.command == "certify":
            cert, _ = _certify_run(_load(m.config_path), m.out_dir or Path("."), m.emit_coeffs)
            print(_record_text(cert.as_record()), end="", file=out)
            return EXIT_OK if cert.passed else EXIT_FAIL
        if m.command == "sweep":
            return sweep(m, out)
        if m.command == "verify":
            return _verify(m, out)
        raise UsageError(f"unknown command {m.command!r}")
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_ERROR
    except (UsageError, SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _ladder(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("ladder is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasefield-smc",
        description="Sliding-mode control of a type-III phase-field system: simulation and certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", type=Path, help="TOML run file")
        if out:
            p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("simulate", help="integrate and write trajectory.csv")
    common(p)
    p.add_argument("--emit-coeffs", action="store_true", help="append w, theta, phi coefficients")
    p = sub.add_parser("certify", help="simulate, then write certificate.txt")
    common(p)
    p.add_argument("--emit-coeffs", action="store_true")
    p = sub.add_parser("sweep", help="certify along a ladder of one numeric key")
    common(p)
    p.add_argument("--rho", type=_ladder, help="shorthand for --axis control.rho --ladder ...")
    p.add_argument("--axis", help="dotted numeric key, e.g. control.rho")
    p.add_argument("--ladder", type=_ladder)
    p.add_argument("--emit-coeffs", action="store_true")
    p = sub.add_parser("verify", help="run a convergence or property study")
    common(p)
    p.add_argument("--study", required=True, choices=STUDIES)
    p.add_argument("--ladder", type=_ladder, help="study ladder (modes, eps, dt or delta values)")
    p = sub.add_parser("validate", help="parse and check a run file")
    common(p, out=False)
    return parser


def manifest_from_args(ns: argparse.Namespace) -> RunManifest:
    axis, ladder = getattr(ns, "axis", None), getattr(ns, "ladder", None)
    rho = getattr(ns, "rho", None)
    if rho is not None:
        if axis not in (None, "control.rho") or ladder is not None:
            raise UsageError("--rho cannot be combined with --axis/--ladder")
        axis, ladder = "control.rho", rho
    return RunManifest(
        command=ns.command,
        config_path=ns.config,
        out_dir=getattr(ns, "out", None),
        axis=axis,
        ladder=tuple(ladder or ()),
        study=getattr(ns, "study", None),
        emit_coeffs=getattr(ns, "emit_coeffs", False),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        manifest = manifest_from_args(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
