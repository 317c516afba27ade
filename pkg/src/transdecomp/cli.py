"""Command line entry point.

    transdecomp <command> --config run.ini [--out DIR] [--set section.key=value ...] [--cache DIR]

Commands: poles, smatrix, energy-density, spatial-density, mexp, decompose.
Each writes its CSV plus a key-value manifest (manifest_<command>.txt).
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import logging
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .lyapunov import build_cached
from .numerics import EighError, NewtonError, UniformGrid
from .resonance import PoleSearch, search_poles
from .scattering import Potential, s_matrix
from .statelab import (
    approx_resonance_state,
    density_decomposition,
    m_expectation_series,
    position_reconstruct,
    synthesis_matrix,
)

log = logging.getLogger("transdecomp")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("poles", "smatrix", "energy-density", "spatial-density", "mexp", "decompose")


class NumericalFailure(RuntimeError):
    pass


def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def csv_text(header, columns, precision: int, int_columns=()) -> str:
    """Header row plus one row per sample; floats in fixed scientific notation."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    fmt = f"{{:.{precision - 1}e}}"
    for row in zip(*columns):
        cells = [
            str(int(v)) if name in int_columns else fmt.format(float(v))
            for name, v in zip(header, row)
        ]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


class Run:
    """State shared by the stages of one command invocation."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, cache: Path | None):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.cache = cache
        self.potential = Potential(**vars(cfg.potential))
        self.timings: dict[str, float] = {}
        self.files: list[Path] = []
        self.warnings: list[str] = []
        self.summary: dict[str, str] = {}
        self.clamp_report = None
        self.search: PoleSearch | None = None

    def stage(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        finally:
            self.timings[name] = time.perf_counter() - t0

    def emit(self, name: str, header, columns, int_columns=()) -> Path:
        text = csv_text(header, columns, self.cfg.output.precision, int_columns)
        path = write_atomic(self.out / name, text)
        self.files.append(path)
        return path

    # pipeline pieces

    def poles(self) -> PoleSearch:
        if self.search is None:
            pc = self.cfg.poles
            self.search = self.stage(
                "poles", search_poles, self.potential, (pc.e_min, pc.e_max), pc.n_seeds, pc.tol
            )
            for s in self.search.skipped:
                self.warnings.append(f"seed E={s.energy:.6g} skipped: {s.reason}")
        return self.search

    def mu(self) -> complex:
        if self.cfg.state.mu is not None:
            return self.cfg.state.mu
        found = self.poles().poles
        idx = self.cfg.state.pole
        if not 1 <= idx <= len(found):
            listing = ", ".join(f"{i}: {q.mu:.6g}" for i, q in enumerate(found, 1)) or "none"
            raise ConfigError(f"state.pole={idx} out of range; found poles: {listing}")
        return found[idx - 1].mu

    def energy_grid(self, n=None) -> UniformGrid:
        return UniformGrid(0.0, self.cfg.energy_grid.e_max, n or self.cfg.energy_grid.n)

    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.cfg.x_grid.x_max, self.cfg.x_grid.n)

    def times(self) -> np.ndarray:
        tc = self.cfg.time
        if tc.times:
            return np.array(tc.times, dtype=float)
        return np.linspace(tc.t_min, tc.t_max, tc.n)

    def manifest(self, status: str, error: str = "") -> Path:
        mf = configparser.ConfigParser(interpolation=None)
        mf.optionxform = str
        mf["run"] = {"command": self.command, "status": status, "error": error}
        echo = configparser.ConfigParser(interpolation=None)
        echo.read_string(self.cfg.to_ini())
        mf["config"] = {f"{s}.{k}": v for s in echo.sections() for k, v in echo.items(s)}
        mf["versions"] = {
            "transdecomp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        }
        mf["timing"] = {k: f"{v:.6f}" for k, v in self.timings.items()}
        if self.clamp_report is not None:
            cr = self.clamp_report
            mf["clamp_report"] = {
                "below": str(cr.below),
                "above": str(cr.above),
                "worst_excess": repr(cr.worst_excess),
            }
        if self.search is not None:
            mf["poles"] = {
                f"pole.{i}": f"{q.mu.real!r}, {q.mu.imag!r}, residual={q.residual:.3e}"
                for i, q in enumerate(self.search.poles, 1)
            }
        if self.summary:
            mf["summary"] = self.summary
        mf["warnings"] = {f"w{i}": w for i, w in enumerate(self.warnings, 1)}
        mf["files"] = {p.name: sha256(p) for p in self.files}
        buf = io.StringIO()
        mf.write(buf)
        return write_atomic(self.out / f"manifest_{self.command}.txt", buf.getvalue())


def cmd_poles(run: Run):
    found = run.poles().poles
    if not found:
        run.warnings.append("no resonance poles found in the search window")
    run.emit(
        "poles.csv",
        ["index", "re_mu", "im_mu", "e_res", "gamma", "residual", "iterations"],
        [
            range(1, len(found) + 1),
            [q.mu.real for q in found],
            [q.mu.imag for q in found],
            [q.e_res for q in found],
            [q.gamma for q in found],
            [q.residual for q in found],
            [q.iterations for q in found],
        ],
        int_columns=("index", "iterations"),
    )


def cmd_smatrix(run: Run):
    E = run.energy_grid().nodes
    S = run.stage("smatrix", s_matrix, E, run.potential)
    phase = np.unwrap(np.angle(S))
    run.summary["max_unitarity_defect"] = f"{np.max(np.abs(np.abs(S) - 1)):.3e}"
    run.emit("smatrix.csv", ["E", "re_S", "im_S", "phase"], [E, S.real, S.imag, phase])


def cmd_energy_density(run: Run):
    grid = run.energy_grid()
    s = approx_resonance_state(run.mu(), grid)
    run.emit("energy_density.csv", ["E", "abs2_psi_app"], [grid.nodes, s.energy_density()])


def cmd_spatial_density(run: Run):
    s = approx_resonance_state(run.mu(), run.energy_grid())
    x = run.x_nodes()
    psi = run.stage("reconstruct", position_reconstruct, s, run.potential, x, 0.0)
    run.emit("spatial_density.csv", ["x", "abs2_psi_app"], [x, np.abs(psi) ** 2])


def cmd_mexp(run: Run):
    mu = run.mu()
    s = approx_resonance_state(mu, run.energy_grid(run.cfg.energy_grid.mexp_n))
    series = run.stage("mexp", m_expectation_series, s, run.times())
    run.summary["max_increase"] = f"{series.max_increase():.3e}"
    gamma = -2 * mu.imag
    try:
        run.summary["decay_rate"] = repr(series.decay_rate(0.5 / gamma, 2 / gamma))
        run.summary["gamma"] = repr(gamma)
    except ValueError as exc:
        run.warnings.append(f"decay fit skipped: {exc}")
    run.emit("mexp.csv", ["t", "m_expectation"], [series.times, series.values])


def cmd_decompose(run: Run):
    mu = run.mu()
    grid = run.energy_grid()
    op = run.stage("lyapunov", build_cached, grid, run.cache)
    run.clamp_report = op.clamp_report
    s = approx_resonance_state(mu, grid)
    x = run.x_nodes()
    basis = run.stage("basis", synthesis_matrix, grid, run.potential, x)
    gamma = -2 * mu.imag
    cols = [[] for _ in range(6)]
    worst = 0.0
    for u in run.cfg.time.snapshots:
        t = u / gamma
        sl = run.stage(f"snapshot_{u:g}", density_decomposition, s, op, run.potential, x, t, basis)
        worst = max(worst, sl.identity_residual())
        for col, vals in zip(cols, [np.full_like(x, t), x, sl.rho_total, sl.rho_b, sl.rho_tr, sl.rho_f]):
            col.append(vals)
    run.summary["identity_residual"] = f"{worst:.3e}"
    run.emit(
        "density.csv",
        ["t", "x", "rho_total", "rho_b", "rho_tr", "rho_f"],
        [np.concatenate(c) if c else [] for c in cols],
    )


HANDLERS = {
    "poles": cmd_poles,
    "smatrix": cmd_smatrix,
    "energy-density": cmd_energy_density,
    "spatial-density": cmd_spatial_density,
    "mexp": cmd_mexp,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="transdecomp",
        description="Square-barrier resonances and the transition decomposition of their evolution.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=None, help="output directory (default: output.directory, i.e. ./out)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    ap.add_argument("--cache", default=None, help="directory for cached Lyapunov operators")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg.output.directory)
    run = Run(args.command, cfg, out, Path(args.cache) if args.cache else None)
    try:
        HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        run.manifest("config-error", str(exc))
        return EXIT_CONFIG
    except (EighError, NewtonError, NumericalFailure, FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        run.manifest("numerical-failure", str(exc))
        return EXIT_NUMERICAL
    path = run.manifest("ok")
    for f in run.files:
        print(f)
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
