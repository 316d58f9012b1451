"""Command line entry point.

Matrix recipes are positional: ``pg Q`` (projective plane of prime order Q)
or ``sts V`` (Steiner triple system), modified by ``--remove-oval``,
``--remove-blocks i,j`` and built with ``--hadamard fourier|real``.

Every command writes ``<name>.config.json`` next to its outputs; passing that
file back through ``--config`` reruns the command with the same resolved
parameters and reproduces the CSV outputs byte for byte.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pbdcs import certify as cert
from pbdcs import construction as con
from pbdcs import designs
from pbdcs import experiments as exp
from pbdcs import hadamard as had
from pbdcs import recovery as rec

OUTPUT_ENV = "PBDCS_OUTPUT_DIR"
COMMANDS = ("build", "certify", "recover", "sweep", "noise-table", "spectrum", "hadamard-check")


class CLIError(Exception):
    """An error case: reported on stderr, exit status 1."""


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def to_text(self) -> str:
        return json.dumps({"command": self.command, "params": self.params}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        if d.get("command") not in COMMANDS:
            raise CLIError(f"config names unknown command {d.get('command')!r}")
        return cls(d["command"], dict(d.get("params", {})))


# --- helpers -----------------------------------------------------------------

def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_ints(text: str | None) -> list[int]:
    if not text:
        return []
    return [int(t) for t in text.split(",") if t.strip()]


def parse_range(text: str) -> list[int]:
    """``a:b`` (inclusive), ``a:b:step`` or a comma list."""
    if ":" in text:
        parts = [int(t) for t in text.split(":")]
        a, b = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(a, b + 1, step))
    return _parse_ints(text)


def build_design(source: str, param: int, remove_oval: bool = False, remove_blocks=()):
    stage = "design"
    try:
        if source == "pg":
            d = designs.projective_plane(param)
        elif source == "sts":
            d = designs.steiner_triple_system(param)
        else:
            raise CLIError(f"unknown design source {source!r}; expected 'pg' or 'sts'")
        if remove_oval:
            stage = "remove-oval"
            if source != "pg":
                raise CLIError("--remove-oval needs a projective plane recipe")
            d = designs.remove_points(d, designs.find_conic_oval(d, param))
        if remove_blocks:
            stage = "remove-blocks"
            d = designs.remove_blocks_with_points(d, remove_blocks)
    except CLIError:
        raise
    except (ValueError, KeyError) as e:
        raise CLIError(f"recipe failed at stage '{stage}': {e}") from e
    return d


def build_matrix(p: dict) -> con.SensingMatrix:
    d = build_design(p["source"], p["param"], p.get("remove_oval", False), p.get("remove_blocks", []))
    try:
        return con.build_with_kind(d, p.get("hadamard", "fourier"))
    except (ValueError, KeyError) as e:
        raise CLIError(f"recipe failed at stage 'hadamard': {e}") from e


def load_matrix_file(path: str):
    text = Path(path).read_text()
    head = text.split("\n", 1)[0]
    try:
        if head.startswith("csmatrix-real "):
            return con.loads_real_matrix(text)
        if head.startswith("csmatrix "):
            return con.loads_matrix(text)
    except (ValueError, KeyError, IndexError) as e:
        raise CLIError(f"cannot read matrix file {path}: {e}") from e
    raise CLIError(f"{path} is not a matrix file")


def resolve_matrix(p: dict):
    """SensingMatrix, RealSensingMatrix or dense Gaussian array, plus an id string."""
    if p.get("matrix"):
        return load_matrix_file(p["matrix"]), Path(p["matrix"]).name
    if p.get("gaussian"):
        rows, cols = p["gaussian"]
        return exp.gaussian_ensemble(rows, cols, p.get("gaussian_seed", 0)), f"gaussian {rows}x{cols} seed={p.get('gaussian_seed', 0)}"
    if not p.get("source"):
        raise CLIError("no matrix given: pass a recipe (pg Q | sts V), --matrix FILE or --gaussian R C")
    return build_matrix(p), recipe_id(p)


def recipe_id(p: dict) -> str:
    parts = [p["source"], str(p["param"])]
    if p.get("remove_oval"):
        parts.append("--remove-oval")
    if p.get("remove_blocks"):
        parts.append("--remove-blocks " + ",".join(map(str, p["remove_blocks"])))
    parts.append("--hadamard " + p.get("hadamard", "fourier"))
    return " ".join(parts)


def out_path(p: dict, suffix: str) -> Path:
    return Path(p["out"]) / f"{p['name']}{suffix}"


# --- commands ----------------------------------------------------------------

def cmd_build(p: dict, say) -> None:
    m = build_matrix(p)
    files = {".matrix.csv": con.dumps_matrix(m)}
    shape = f"{m.n}x{m.N}"
    if p.get("realify"):
        r = con.realify(m)
        files[".real.csv"] = con.dumps_real_matrix(r)
        shape += f" -> {r.shape[0]}x{r.shape[1]}"
    for suffix, text in files.items():
        atomic_write(out_path(p, suffix), text)
    bounds = cert.recovery_guarantee_bounds(m)
    reps = sorted(set(m.replication))
    say(f"recipe: {recipe_id(p)}")
    say(f"shape: {shape}")
    say(f"n={m.n} N={m.N} v={m.v}")
    say(f"replication numbers: {','.join(map(str, reps))}")
    say(f"coherence: {con.coherence(m):.12g}")
    say(f"recovery bounds: t_guaranteed={bounds.t_guaranteed} t_impossible={bounds.t_impossible}")
    for k, s in sorted(bounds.witnesses.items()):
        say(f"  witness {k}: sparsity {s}")


def cmd_certify(p: dict, say) -> None:
    m, mid = resolve_matrix(p)
    if not isinstance(m, con.SensingMatrix):
        raise CLIError("certify needs a complex matrix file with its metadata")
    lines = [f"matrix: {mid}", f"n={m.n} N={m.N}"]
    failures = []
    best = None
    if m.v >= 2:
        p1, p2 = cert.min_replication_points(m)
        w = cert.spark_witness_two_points(m, p1, p2)
        res = float(np.max(np.abs(m.entries @ w)))
        s = int(np.count_nonzero(w))
        best = s
        lines.append(f"two-point witness: points {p1},{p2} sparsity {s} residual {res:.3e}")
        m1, m2 = cert.split_nonrecoverable(m, w)
        lines.append(
            f"split: {np.count_nonzero(m1)}-sparse and {np.count_nonzero(m2)}-sparse vectors with equal images;"
            f" {np.count_nonzero(m2)}-sparse non-recoverable pair exhibited"
        )
    arc = cert.real_arc(m)
    if arc is not None:
        w = cert.arc_nullvector(m, arc)
        s = int(np.count_nonzero(w))
        res = float(np.max(np.abs(m.entries @ w)))
        best = s if best is None else min(best, s)
        lines.append(f"arc witness: points {','.join(map(str, arc))} arc nullvector sparsity {s} (3r/2) residual {res:.3e}")
    if p.get("smax"):
        try:
            found = cert.spark_search(m, p["smax"], budget=p.get("budget", cert.DEFAULT_SPARK_BUDGET))
            lines.append(str(found))
            if found.spark is not None:
                best = found.spark
                lines.append(f"dependent columns: {','.join(map(str, found.support))}")
        except had.SearchBudgetExceeded as e:
            failures.append(f"spark: budget exceeded ({e})")
            lines.append(failures[-1])
    if best is not None:
        lines.append(f"spark <= {best}")
    bounds = cert.recovery_guarantee_bounds(m)
    lines.append(f"recovery bounds: t_guaranteed={bounds.t_guaranteed} t_impossible={bounds.t_impossible}")
    text = "\n".join(lines) + "\n"
    atomic_write(out_path(p, ".txt"), text)
    for ln in lines:
        say(ln)
    if failures:
        raise CLIError("; ".join(failures))


def _read_vector(path: str) -> np.ndarray:
    try:
        return rec.loads_vector(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise CLIError(f"cannot read vector file {path}: {e}") from e


def cmd_recover(p: dict, say) -> None:
    m, mid = resolve_matrix(p)
    alg = p["algorithm"]
    if alg == "alg1":
        if not isinstance(m, con.SensingMatrix):
            raise CLIError("alg1 needs a complex matrix with metadata")
        phi = m.entries
    else:
        op = con.realify(m) if isinstance(m, con.SensingMatrix) else m
        phi = np.asarray(con.dense(op), dtype=float)
    truth = None
    if p.get("signal"):
        x = _read_vector(p["signal"])
        if alg != "alg1" and isinstance(m, con.SensingMatrix) and x.size == m.N:
            x = con.complex_to_real_vector(x.astype(complex))
        if x.size != phi.shape[1]:
            raise CLIError(f"dimension mismatch: signal has {x.size} entries, matrix has {phi.shape[1]} columns")
        truth = x
        y = phi @ x
    elif p.get("samples"):
        y = _read_vector(p["samples"])
        if alg != "alg1" and isinstance(m, con.SensingMatrix) and y.size == m.n:
            y = con.complex_to_real_vector(y.astype(complex))
        if y.size != phi.shape[0]:
            raise CLIError(f"dimension mismatch: samples have {y.size} entries, matrix has {phi.shape[0]} rows")
    else:
        raise CLIError("recover needs --signal or --samples")
    tol = p.get("tolerance")
    if alg == "omp":
        res = rec.omp(phi, y) if tol is None else rec.omp(phi, y, tol=tol)
    elif alg == "bp":
        res = rec.basis_pursuit(phi, y) if tol is None else rec.basis_pursuit(phi, y, tol=tol)
    else:
        res = rec.alg1_recover(m, y, p.get("s_size", 0))
    if truth is not None:
        err = float(np.linalg.norm(res.estimate - truth))
        res.notes["error"] = err
        res.notes["success"] = err < p.get("epsilon", exp.DEFAULT_EPSILON)
    atomic_write(out_path(p, ".result.txt"), res.to_text())
    atomic_write(out_path(p, ".estimate.csv"), rec.dumps_vector(res.estimate))
    say(f"matrix: {mid}")
    for ln in res.to_text().splitlines():
        say(ln)


def _signal_template(p: dict) -> exp.SignalSpec:
    return exp.SignalSpec(
        N=0, t=0, value_model=p.get("value_model", "uniform"), signed=p.get("signed", False),
        normalize=not p.get("no_normalize", False), complex_phase=p.get("complex_phase", False),
    )


def _noise_spec(p: dict, level: float) -> exp.NoiseSpec:
    return exp.NoiseSpec(model=p.get("noise_model", "uniform"), signed=p.get("noise_signed", False),
                         target_l2=level, burst_len=p.get("burst_len"))


def _write_sweep(p: dict, res: exp.SweepResult, say) -> None:
    atomic_write(out_path(p, ".csv"), exp.dumps_sweep(res))
    levels = sorted({r.noise_l2 for r in res.rows})
    for lvl in levels:
        suffix = ".plot.csv" if len(levels) == 1 else f".plot-noise{lvl!r}.csv"
        atomic_write(out_path(p, suffix), exp.dumps_sweep_plot(res, lvl))
    if p.get("timing"):
        atomic_write(out_path(p, ".timing.csv"), exp.dumps_sweep_timing(res))
    for r in res.rows:
        say(f"t={r.sparsity} noise={r.noise_l2:g} successes={r.successes}/{r.trials} nonConverged={r.nonconverged}")


def cmd_sweep(p: dict, say) -> None:
    m, mid = resolve_matrix(p)
    noise = _noise_spec(p, p["noise"]) if p.get("noise") else None
    try:
        res = exp.run_sweep(m, p["algorithm"], p["sparsities"], p["trials"], epsilon=p["epsilon"],
                            signal=_signal_template(p), noise=noise, master_seed=p["seed"],
                            tol=p.get("tolerance"), s_size=p.get("s_size", 0), matrix_id=mid)
    except (TypeError, ValueError) as e:
        raise CLIError(str(e)) from e
    _write_sweep(p, res, say)


def cmd_noise_table(p: dict, say) -> None:
    m, mid = resolve_matrix(p)
    try:
        res = exp.noise_table(m, p["algorithm"], p["sparsities"], p["noise_levels"], p["trials"],
                              noise=_noise_spec(p, 0.0), epsilon=p["epsilon"], signal=_signal_template(p),
                              master_seed=p["seed"], tol=p.get("tolerance"), s_size=p.get("s_size", 0),
                              matrix_id=mid)
    except (TypeError, ValueError) as e:
        raise CLIError(str(e)) from e
    _write_sweep(p, res, say)
    # compact sparsity x noise grid of success counts
    levels = [float(x) for x in p["noise_levels"]]
    grid = ["sparsity," + ",".join(repr(x) for x in levels)]
    for t in sorted({r.sparsity for r in res.rows}):
        grid.append(f"{t}," + ",".join(str(res.cell(t, lvl).successes) for lvl in levels))
    atomic_write(out_path(p, ".grid.csv"), "\n".join(grid) + "\n")


def cmd_spectrum(p: dict, say) -> None:
    m, mid = resolve_matrix(p)
    try:
        res = exp.gram_spectrum_experiment(m, p["t"], p["trials"], not p.get("any_columns", False), p["seed"])
    except (TypeError, ValueError) as e:
        raise CLIError(str(e)) from e
    res.config["matrix"] = mid
    atomic_write(out_path(p, ".csv"), exp.dumps_spectrum(res))
    say(f"matrix: {mid}")
    say(f"eigenvalues in [{res.min_eigenvalue:.6f}, {res.max_eigenvalue:.6f}] over {p['trials']} trials of {2 * p['t']} columns")
    say(f"max ||Psi_S||_op = {res.delta:.6f}")


def cmd_hadamard_check(p: dict, say) -> None:
    try:
        h = had.hadamard_of_kind(p["kind"], p["order"])
    except ValueError as e:
        raise CLIError(str(e)) from e
    r = h.order
    lines = [f"hadamard kind={h.kind} r={r}",
             f"orthogonality error: {h.orthogonality_error():.3e}",
             f"modulus error: {h.modulus_error():.3e}",
             "u,minSupport,lowerBound"]
    umax = min(p.get("umax") or r, r)
    try:
        for u in range(1, umax + 1):
            lines.append(f"{u},{had.min_support_combination(h, u, budget=p['budget'])},{-(-r // u)}")
        if p.get("kmax"):
            lines.append(f"optimal up to k={p['kmax']}: {had.is_optimal(h, p['kmax'], budget=p['budget'])}")
    except had.SearchBudgetExceeded as e:
        raise CLIError(f"budget exceeded: {e}") from e
    atomic_write(out_path(p, ".hadamard.csv"), "\n".join(lines) + "\n")
    for ln in lines:
        say(ln)


HANDLERS = {
    "build": cmd_build,
    "certify": cmd_certify,
    "recover": cmd_recover,
    "sweep": cmd_sweep,
    "noise-table": cmd_noise_table,
    "spectrum": cmd_spectrum,
    "hadamard-check": cmd_hadamard_check,
}


# --- argument parsing --------------------------------------------------------

def _common(sp: argparse.ArgumentParser, name: str) -> None:
    sp.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    sp.add_argument("--name", default=name, help="output file stem")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--epsilon", type=float, default=exp.DEFAULT_EPSILON, help="success threshold on ||m - m_hat||_2")
    sp.add_argument("--tolerance", type=float, default=None, help="solver tolerance (module default if omitted)")
    sp.add_argument("--config", default=None, help="rerun from an emitted config file")


def _recipe(sp: argparse.ArgumentParser, required: bool) -> None:
    nargs = None if required else "?"
    sp.add_argument("source", nargs=nargs, choices=["pg", "sts"], help="design source")
    sp.add_argument("param", nargs=nargs, type=int, help="plane order q or STS order v")
    sp.add_argument("--remove-oval", action="store_true")
    sp.add_argument("--remove-blocks", type=_parse_ints, default=[], help="comma separated block indices")
    sp.add_argument("--hadamard", choices=["fourier", "real"], default="fourier")


def _matrix_source(sp: argparse.ArgumentParser) -> None:
    _recipe(sp, required=False)
    sp.add_argument("--matrix", default=None, help="matrix file written by build")
    sp.add_argument("--gaussian", type=int, nargs=2, metavar=("ROWS", "COLS"), default=None)
    sp.add_argument("--gaussian-seed", type=int, default=0)


def _signal_opts(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--algorithm", choices=list(exp.ALGORITHMS), default="omp")
    sp.add_argument("--s-size", type=int, default=0, help="alg1 support size (0 means r1)")
    sp.add_argument("--value-model", choices=["uniform", "grid"], default="uniform")
    sp.add_argument("--signed", action="store_true")
    sp.add_argument("--no-normalize", action="store_true")
    sp.add_argument("--complex-phase", action="store_true")
    sp.add_argument("--noise-model", choices=["uniform", "burst"], default="uniform")
    sp.add_argument("--noise-signed", action="store_true")
    sp.add_argument("--burst-len", type=int, default=None)
    sp.add_argument("--timing", action="store_true", help="also write a wall-clock sidecar CSV")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbdcs", description="Design-based compressed sensing matrices and recovery experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build", help="build a matrix from a recipe")
    _recipe(sp, required=False)
    sp.add_argument("--realify", action="store_true")
    _common(sp, "build")

    sp = sub.add_parser("certify", help="witnesses, spark search and recovery bounds")
    _matrix_source(sp)
    sp.add_argument("--smax", type=int, default=None, help="run the exhaustive spark search up to smax")
    sp.add_argument("--budget", type=int, default=cert.DEFAULT_SPARK_BUDGET)
    _common(sp, "certify")

    sp = sub.add_parser("recover", help="recover one signal")
    _matrix_source(sp)
    sp.add_argument("--signal", default=None, help="vector file; samples are computed from it")
    sp.add_argument("--samples", default=None, help="sample vector file")
    _signal_opts(sp)
    _common(sp, "recover")

    sp = sub.add_parser("sweep", help="success counts over a sparsity range")
    _matrix_source(sp)
    sp.add_argument("--sparsities", type=parse_range, default=parse_range("1:50"))
    sp.add_argument("--noise", type=float, default=0.0, help="noise l2 norm")
    _signal_opts(sp)
    _common(sp, "sweep")

    sp = sub.add_parser("noise-table", help="success counts over sparsity x noise level")
    _matrix_source(sp)
    sp.add_argument("--sparsities", type=parse_range, default=parse_range("30:60:5"))
    sp.add_argument("--noise-levels", type=lambda s: [float(x) for x in s.split(",")],
                    default=[0.0, 1e-12, 1e-10, 1e-9, 2e-9])
    _signal_opts(sp)
    _common(sp, "noise-table")
    sp.set_defaults(algorithm="bp")

    sp = sub.add_parser("spectrum", help="Gram spectrum of random column subsets")
    _matrix_source(sp)
    sp.add_argument("--t", type=int, default=12, help="half the number of columns drawn")
    sp.add_argument("--any-columns", action="store_true", help="do not force columns from distinct points")
    _common(sp, "spectrum")

    sp = sub.add_parser("hadamard-check", help="orthogonality and minimal supports of a Hadamard matrix")
    sp.add_argument("kind", choices=["fourier", "real"])
    sp.add_argument("order", type=int)
    sp.add_argument("--umax", type=int, default=None)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--budget", type=int, default=int(had.DEFAULT_BUDGET))
    _common(sp, "hadamard-check")
    return ap


def resolve(ns: argparse.Namespace) -> RunConfig:
    if ns.config:
        cfg = RunConfig.from_text(Path(ns.config).read_text())
        if cfg.command != ns.command:
            raise CLIError(f"config is for '{cfg.command}', not '{ns.command}'")
        if ns.out is not None:
            cfg.params["out"] = ns.out
        return cfg
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    if params.get("out") is None:
        params["out"] = os.environ.get(OUTPUT_ENV, ".")
    if ns.command == "build" and not params.get("source"):
        raise CLIError("build needs a recipe: pg Q | sts V")
    return RunConfig(ns.command, params)


def run(cfg: RunConfig, say=print) -> None:
    atomic_write(out_path(cfg.params, ".config.json"), cfg.to_text())
    HANDLERS[cfg.command](cfg.params, say)


def main(argv=None) -> int:
    ap = make_parser()
    ns = ap.parse_args(argv)
    try:
        run(resolve(ns))
    except CLIError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
