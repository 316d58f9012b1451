"""Simulation harness: signal and noise models, sparsity sweeps, noise
tables, the Gaussian baseline and the Gram-spectrum experiment.

Randomness
----------
Every trial draws from ``numpy.random.Generator(PCG64(seed))`` where
``seed = trial_seed(master, sparsity, trial)`` is the first 8 bytes
(little endian) of ``blake2b(b"<master>:<sparsity>:<trial>", digest_size=8)``.
Signal entries are drawn first, then the noise vector, from the same stream.
The seed ignores the noise level, so a noise table compares the same signals
and noise directions at every level.
"""
from __future__ import annotations

import hashlib
import io
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from pbdcs.construction import SensingMatrix, dense, realify
from pbdcs.recovery import RecoveryResult, alg1_recover, basis_pursuit, omp

DEFAULT_EPSILON = 1e-8
ALGORITHMS = ("omp", "bp", "alg1")


def trial_seed(master: int, sparsity: int, trial: int) -> int:
    key = f"{int(master)}:{int(sparsity)}:{int(trial)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# --- signals and noise -------------------------------------------------------

@dataclass(frozen=True)
class SignalSpec:
    N: int
    t: int
    value_model: str = "uniform"  # uniform on (0,1] | grid {i/100}
    signed: bool = False
    normalize: bool = True
    seed: int = 0
    # unimodular random phases; only meaningful for complex matrices
    complex_phase: bool = False


def _signal_from_rng(spec: SignalSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.t > spec.N or spec.t < 0:
        raise ValueError(f"sparsity t={spec.t} must lie in [0, N={spec.N}]")
    dtype = np.complex128 if spec.complex_phase else np.float64
    x = np.zeros(spec.N, dtype=dtype)
    if spec.t == 0:
        return x
    support = rng.choice(spec.N, size=spec.t, replace=False)
    if spec.value_model == "uniform":
        vals = 1.0 - rng.random(spec.t)  # (0, 1], never exactly zero
    elif spec.value_model == "grid":
        vals = rng.integers(1, 101, size=spec.t) / 100.0
    else:
        raise ValueError(f"unknown value model {spec.value_model!r}")
    if spec.signed:
        vals = np.where(rng.random(spec.t) < 0.5, -vals, vals)
    if spec.complex_phase:
        vals = vals * np.exp(2j * np.pi * rng.random(spec.t))
    x[support] = vals
    if spec.normalize:
        x = x / np.linalg.norm(x)
    return x


def gen_sparse_signal(spec: SignalSpec) -> np.ndarray:
    """Exactly ``t``-sparse vector, deterministic in ``spec.seed``."""
    return _signal_from_rng(spec, make_rng(spec.seed))


@dataclass(frozen=True)
class NoiseSpec:
    model: str = "uniform"  # uniform | burst
    signed: bool = False
    target_l2: float = 0.0
    burst_len: int | None = None  # default ceil(N/20)
    seed: int = 0


def _noise_from_rng(spec: NoiseSpec, N: int, rng: np.random.Generator) -> np.ndarray:
    if spec.model == "uniform":
        lo, hi = 0, N
    elif spec.model == "burst":
        L = spec.burst_len if spec.burst_len is not None else math.ceil(N / 20)
        if not 0 < L <= N:
            raise ValueError(f"burst length {L} must lie in [1, N={N}]")
        lo = int(rng.integers(0, N - L + 1))
        hi = lo + L
    else:
        raise ValueError(f"unknown noise model {spec.model!r}")
    e = np.zeros(N)
    k = hi - lo
    e[lo:hi] = rng.uniform(-1.0, 1.0, k) if spec.signed else rng.random(k)
    if spec.target_l2 == 0.0:
        return np.zeros(N)
    nrm = np.linalg.norm(e)
    if nrm == 0.0:
        e[lo] = 1.0
        nrm = 1.0
    return e * (spec.target_l2 / nrm)


def gen_noise(spec: NoiseSpec, N: int) -> np.ndarray:
    return _noise_from_rng(spec, N, make_rng(spec.seed))


def gaussian_ensemble(rows: int, cols: int, seed: int = 0) -> np.ndarray:
    """iid N(0,1) entries with every column scaled to unit l2 norm."""
    g = make_rng(seed).standard_normal((rows, cols))
    return g / np.linalg.norm(g, axis=0)


# --- sweeps ------------------------------------------------------------------

@dataclass
class SweepRow:
    sparsity: int
    noise_l2: float
    trials: int
    successes: int
    mean_residual: float
    mean_error: float
    nonconverged: int
    mean_elapsed: float = 0.0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 1.0


@dataclass
class SweepResult:
    rows: list[SweepRow]
    config: dict = field(default_factory=dict)

    def cell(self, sparsity: int, noise_l2: float = 0.0) -> SweepRow:
        for r in self.rows:
            if r.sparsity == sparsity and r.noise_l2 == noise_l2:
                return r
        raise KeyError((sparsity, noise_l2))

    def successes(self) -> dict[tuple[int, float], int]:
        return {(r.sparsity, r.noise_l2): r.successes for r in self.rows}


def _operator(matrix, algorithm: str):
    """Pick the matrix the algorithm works on: complex for alg1, real otherwise."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if algorithm == "alg1":
        if not isinstance(matrix, SensingMatrix):
            raise TypeError("alg1 needs a SensingMatrix with its row bookkeeping")
        return matrix, matrix.entries
    if isinstance(matrix, SensingMatrix):
        matrix = realify(matrix)
    a = np.asarray(dense(matrix), dtype=np.float64)
    return a, a


def _recover(algorithm: str, op, y, tol: float | None, s_size: int) -> RecoveryResult:
    if algorithm == "omp":
        return omp(op, y) if tol is None else omp(op, y, tol=tol)
    if algorithm == "bp":
        return basis_pursuit(op, y) if tol is None else basis_pursuit(op, y, tol=tol)
    if algorithm == "alg1":
        return alg1_recover(op, y, s_size)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def run_sweep(
    matrix,
    algorithm: str,
    sparsities,
    trials: int,
    epsilon: float = DEFAULT_EPSILON,
    signal: SignalSpec | None = None,
    noise: NoiseSpec | None = None,
    master_seed: int = 0,
    tol: float | None = None,
    s_size: int = 0,
    matrix_id: str = "",
) -> SweepResult:
    """Success counts per sparsity; success means ||m - m_hat||_2 < epsilon.

    ``signal`` is a template: its N, t and seed are overwritten per trial.
    Solver exceptions count as failures and never abort the sweep; trials
    whose solver did not report ``converged`` are tallied in ``nonconverged``
    but still judged by their error.
    """
    op, phi = _operator(matrix, algorithm)
    N = phi.shape[1]
    template = signal or SignalSpec(N=N, t=0)
    rows = []
    noise_l2 = noise.target_l2 if noise is not None else 0.0
    for t in sorted(set(int(s) for s in sparsities)):
        succ = 0
        nonconv = 0
        res_sum = err_sum = time_sum = 0.0
        for k in range(trials):
            rng = make_rng(trial_seed(master_seed, t, k))
            m = _signal_from_rng(replace(template, N=N, t=t), rng)
            x = m
            if noise is not None:
                e = _noise_from_rng(noise, N, rng)
                x = m + e
            y = phi @ x
            t0 = time.perf_counter()
            try:
                res = _recover(algorithm, op, y, tol, s_size)
            except (ArithmeticError, ValueError, np.linalg.LinAlgError):
                nonconv += 1
                err_sum += float(np.linalg.norm(m))
                time_sum += time.perf_counter() - t0
                continue
            time_sum += time.perf_counter() - t0
            err = float(np.linalg.norm(m - res.estimate))
            succ += err < epsilon
            nonconv += res.status != "converged"
            res_sum += res.residual_norm
            err_sum += err
        n = max(trials, 1)
        rows.append(SweepRow(t, float(noise_l2), trials, int(succ), res_sum / n, err_sum / n, nonconv, time_sum / n))
    config = {
        "matrix": matrix_id,
        "rows": phi.shape[0],
        "cols": N,
        "algorithm": algorithm,
        "epsilon": epsilon,
        "trials": trials,
        "masterSeed": master_seed,
        "seedHash": "blake2b-64(master:sparsity:trial)",
        "rng": "PCG64",
        "tolerance": tol,
        "sSize": s_size if algorithm == "alg1" else None,
        "signal": {k: v for k, v in asdict(template).items() if k not in ("N", "t", "seed")},
        "noise": None if noise is None else {k: v for k, v in asdict(noise).items() if k != "seed"},
    }
    return SweepResult(rows, config)


def noise_table(matrix, algorithm: str, sparsities, noise_levels, trials: int, noise: NoiseSpec | None = None, **kw) -> SweepResult:
    """One sweep per noise level; rows ordered by (sparsity, noise)."""
    base = noise or NoiseSpec()
    rows: list[SweepRow] = []
    config: dict = {}
    for lvl in noise_levels:
        spec = None if lvl == 0 else replace(base, target_l2=float(lvl))
        res = run_sweep(matrix, algorithm, sparsities, trials, noise=spec, **kw)
        rows += res.rows
        config = res.config
    rows.sort(key=lambda r: (r.sparsity, r.noise_l2))
    config = dict(config, noise={k: v for k, v in asdict(base).items() if k not in ("seed", "target_l2")},
                  noiseLevels=[float(x) for x in noise_levels])
    return SweepResult(rows, config)


def _header(config: dict) -> str:
    return "".join(f"# {k}={_cfg_value(v)}\n" for k, v in config.items())


def _cfg_value(v) -> str:
    if isinstance(v, dict):
        return "{" + ",".join(f"{k}:{_cfg_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_sweep(res: SweepResult) -> str:
    """Deterministic CSV: no wall-clock data (see dumps_sweep_timing)."""
    out = io.StringIO()
    out.write(_header(res.config))
    out.write("sparsity,noiseL2,trials,successes,successRate,meanResidual,meanError,nonConverged\n")
    for r in res.rows:
        out.write(
            f"{r.sparsity},{r.noise_l2!r},{r.trials},{r.successes},{r.success_rate!r},"
            f"{r.mean_residual!r},{r.mean_error!r},{r.nonconverged}\n"
        )
    return out.getvalue()


def dumps_sweep_timing(res: SweepResult) -> str:
    out = io.StringIO()
    out.write("sparsity,noiseL2,meanElapsed\n")
    for r in res.rows:
        out.write(f"{r.sparsity},{r.noise_l2!r},{r.mean_elapsed!r}\n")
    return out.getvalue()


def dumps_sweep_plot(res: SweepResult, noise_l2: float | None = None) -> str:
    """Two columns (sparsity, successRate) for one noise level."""
    lvl = noise_l2 if noise_l2 is not None else (res.rows[0].noise_l2 if res.rows else 0.0)
    out = io.StringIO()
    out.write("sparsity,successRate\n")
    for r in res.rows:
        if r.noise_l2 == lvl:
            out.write(f"{r.sparsity},{r.success_rate!r}\n")
    return out.getvalue()


def loads_sweep(text: str) -> SweepResult:
    rows = []
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    config = {}
    for ln in text.splitlines():
        if ln.startswith("# ") and "=" in ln:
            k, v = ln[2:].split("=", 1)
            config[k] = v
    for ln in body[1:]:
        p = ln.split(",")
        rows.append(SweepRow(int(p[0]), float(p[1]), int(p[2]), int(p[3]), float(p[5]), float(p[6]), int(p[7])))
    return SweepResult(rows, config)


# --- Gram spectrum -----------------------------------------------------------

@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray  # trials x 2t, ascending per row
    psi_norms: np.ndarray  # ||Phi_S* Phi_S - I||_op per trial
    max_offdiag: np.ndarray  # largest |off-diagonal Gram entry| per trial
    hermitian_defect: float
    config: dict = field(default_factory=dict)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues.min()) if self.eigenvalues.size else 1.0

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues.max()) if self.eigenvalues.size else 1.0

    @property
    def delta(self) -> float:
        return float(self.psi_norms.max()) if self.psi_norms.size else 0.0


def gram_spectrum_experiment(m, t: int, trials: int, distinct_points: bool = True, seed: int = 0) -> SpectrumResult:
    """Eigenvalues of Phi_S* Phi_S for random sets S of 2t columns.

    With ``distinct_points`` every column of S belongs to a different point:
    2t points are drawn without replacement, then one column of each.
    """
    phi = dense(m)
    N = phi.shape[1]
    size = 2 * t
    if distinct_points:
        if not isinstance(m, SensingMatrix):
            raise TypeError("distinct_points needs a SensingMatrix")
        if size > m.v:
            raise ValueError(f"2t={size} exceeds the number of points v={m.v}")
    elif size > N:
        raise ValueError(f"2t={size} exceeds the number of columns N={N}")
    eig = np.zeros((trials, size))
    psi = np.zeros(trials)
    off = np.zeros(trials)
    defect = 0.0
    for k in range(trials):
        rng = make_rng(trial_seed(seed, size, k))
        if distinct_points:
            pts = rng.choice(m.v, size=size, replace=False)
            cols = []
            for p in pts:
                a, b = m.point_cols[p]
                cols.append(a + int(rng.integers(0, b - a)))
            cols = np.array(cols)
        else:
            cols = rng.choice(N, size=size, replace=False)
        sub = phi[:, np.sort(cols)]
        g = sub.conj().T @ sub
        defect = max(defect, float(np.max(np.abs(g - g.conj().T), initial=0.0)))
        g = (g + g.conj().T) / 2
        w = np.linalg.eigvalsh(g)
        eig[k] = w
        psi[k] = float(np.max(np.abs(w - 1.0), initial=0.0))
        d = g - np.diag(np.diag(g))
        off[k] = float(np.max(np.abs(d), initial=0.0))
    config = {"t": t, "columns": size, "trials": trials, "distinctPoints": distinct_points, "seed": seed,
              "seedHash": "blake2b-64(seed:2t:trial)", "rng": "PCG64"}
    return SpectrumResult(eig, psi, off, defect, config)


def dumps_spectrum(res: SpectrumResult) -> str:
    out = io.StringIO()
    summary = dict(res.config, minEigenvalue=res.min_eigenvalue, maxEigenvalue=res.max_eigenvalue,
                   maxPsiNorm=res.delta, hermitianDefect=res.hermitian_defect)
    out.write(_header(summary))
    size = res.eigenvalues.shape[1]
    out.write("trial,psiNorm,maxOffDiagonal," + ",".join(f"ev{i}" for i in range(size)) + "\n")
    for k in range(res.eigenvalues.shape[0]):
        vals = ",".join(repr(float(x)) for x in res.eigenvalues[k])
        out.write(f"{k},{float(res.psi_norms[k])!r},{float(res.max_offdiag[k])!r},{vals}\n")
    return out.getvalue()


def loads_spectrum(text: str) -> SpectrumResult:
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]]).reshape(len(body) - 1, -1)
    config = {}
    for ln in text.splitlines():
        if ln.startswith("# ") and "=" in ln:
            k, v = ln[2:].split("=", 1)
            config[k] = v
    defect = float(config.get("hermitianDefect", 0.0))
    return SpectrumResult(data[:, 3:], data[:, 1], data[:, 2], defect, config)
