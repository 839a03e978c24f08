"""Monte Carlo evaluation: configuration, SINR scoring, trials and CSV output."""

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .array_model import ArrayGeometry, SectorSpec, projection_basis, sector_covariance, steering_vector
from .beamformers import SMI, Locsme, LocsmeSG, StandardSG
from .numerics import InvalidInputError
from .scenario import RNG_ALGORITHM, ScenarioConfig, ground_truth, new_trial, snapshot
from .shrinkage import KaParams

log = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "SINR_FLOOR_DB",
    "ConfigError",
    "Hyperparameters",
    "RunConfig",
    "SinrCurve",
    "default_hyperparameters",
    "output_sinr",
    "output_sinr_trace",
    "optimal_sinr",
    "make_beamformers",
    "run_trial",
    "monte_carlo",
    "emit_csv",
    "read_csv",
]

ALGORITHMS = ("locsme", "locsme-sg", "smi", "sg")
SINR_FLOOR_DB = -100.0
CSV_HEADER = ("axis", "algorithm", "mean_sinr_db", "std_sinr_db", "n_trials")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class Hyperparameters:
    """Algorithm settings. ``rank`` of None selects p automatically."""

    mu: float = 0.2
    mu_eps: float = 1.0
    sigma_eps: float = 0.001
    lambda_q: float = 0.99
    r0_scale: float = 10.0
    rho0: float = 0.5
    rho0_cov: float = 0.5
    epsilon0: float = 0.0
    q0: float = 1.0
    rank: Optional[int] = None
    power_smoothing: float = 0.0
    normalize_step: bool = True
    literal_q: bool = False

    def __post_init__(self):
        for name in ("mu", "mu_eps", "sigma_eps", "r0_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.lambda_q < 1:
            raise ConfigError(f"lambda_q must lie in (0, 1), got {self.lambda_q}")
        for name in ("rho0", "rho0_cov"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.q0 < 0:
            raise ConfigError(f"q0 must be nonnegative, got {self.q0}")
        if not 0 <= self.power_smoothing < 1:
            raise ConfigError(f"power_smoothing must lie in [0, 1), got {self.power_smoothing}")


def default_hyperparameters(mismatch):
    """Settings used in the local-scattering experiments."""
    if mismatch == "incoherent":
        return Hyperparameters(mu=0.1, mu_eps=5.0, sigma_eps=0.001, lambda_q=0.99, r0_scale=50.0)
    return Hyperparameters(mu=0.2, mu_eps=1.0, sigma_eps=0.001, lambda_q=0.99, r0_scale=10.0)


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    algorithms: tuple = ALGORITHMS
    n_trials: int = 100
    n_snapshots: int = 500
    sweep: str = "snapshots"
    snr_sweep: tuple = tuple(range(-10, 31, 5))
    sector_half_width: float = 5.0
    quadrature_nodes: int = 64
    hyper: Optional[Hyperparameters] = None
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "snr_sweep", tuple(float(s) for s in self.snr_sweep))
        if self.hyper is None:
            object.__setattr__(self, "hyper", default_hyperparameters(self.scenario.mismatch))
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms must not repeat")
        if self.n_trials < 1 or self.n_snapshots < 1:
            raise ConfigError("n_trials and n_snapshots must be >= 1")
        if self.sweep not in ("snapshots", "snr"):
            raise ConfigError(f"sweep must be 'snapshots' or 'snr', got {self.sweep!r}")
        if self.sweep == "snr" and not self.snr_sweep:
            raise ConfigError("snr sweep needs at least one SNR value")
        if self.hyper.rank is not None and not 1 <= self.hyper.rank <= self.scenario.geom.n_sensors:
            raise ConfigError(f"rank must lie in [1, M], got {self.hyper.rank}")

    @property
    def sector(self):
        return SectorSpec(self.scenario.desired_doa, self.sector_half_width, self.quadrature_nodes)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        sc = self.scenario
        return {
            "scenario": {
                "n_sensors": sc.geom.n_sensors,
                "spacing": sc.geom.spacing,
                "desired_doa": sc.desired_doa,
                "interferer_doas": list(sc.interferer_doas),
                "snr_db": sc.snr_db,
                "sir_db": sc.sir_db,
                "noise_power": sc.noise_power,
                "mismatch": sc.mismatch,
                "n_scatter": sc.n_scatter,
                "scatter_std_deg": sc.scatter_std_deg,
                "scatter_distribution": sc.scatter_distribution,
            },
            "algorithms": list(self.algorithms),
            "n_trials": self.n_trials,
            "n_snapshots": self.n_snapshots,
            "sweep": self.sweep,
            "snr_sweep": list(self.snr_sweep),
            "sector": {"half_width": self.sector_half_width, "quadrature_nodes": self.quadrature_nodes},
            "hyperparameters": dataclasses.asdict(self.hyper),
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, doc):
        """Build a config from a JSON-style dict. Unknown keys are rejected."""
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(doc, ("scenario", "algorithms", "n_trials", "n_snapshots", "sweep",
                              "snr_sweep", "sector", "hyperparameters", "master_seed"), "config")
        try:
            sc = dict(doc.get("scenario", {}))
            _reject_unknown(sc, ("n_sensors", "spacing", *[f.name for f in dataclasses.fields(ScenarioConfig)
                                                           if f.name != "geom"]), "scenario")
            geom = ArrayGeometry(sc.pop("n_sensors", 12), sc.pop("spacing", 0.5))
            scenario = ScenarioConfig(geom=geom, **sc)
            kwargs = {k: doc[k] for k in ("algorithms", "n_trials", "n_snapshots", "sweep",
                                          "snr_sweep", "master_seed") if k in doc}
            sector = doc.get("sector", {})
            _reject_unknown(sector, ("half_width", "quadrature_nodes"), "sector")
            if "half_width" in sector:
                kwargs["sector_half_width"] = sector["half_width"]
            if "quadrature_nodes" in sector:
                kwargs["quadrature_nodes"] = sector["quadrature_nodes"]
            hp = doc.get("hyperparameters", {})
            _reject_unknown(hp, [f.name for f in dataclasses.fields(Hyperparameters)], "hyperparameters")
            hyper = dataclasses.replace(default_hyperparameters(scenario.mismatch), **hp)
            config = cls(scenario=scenario, hyper=hyper, **kwargs)
            config.sector  # validates the sector
            return config
        except ConfigError:
            raise
        except (InvalidInputError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _reject_unknown(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {extra}")


@dataclass
class SinrCurve:
    """Mean output SINR per algorithm along a snapshot or SNR axis.

    ``counts`` holds, per algorithm and axis point, how many trials produced
    a finite SINR (failed trials are excluded from the statistics).
    """

    axis_name: str
    axis: np.ndarray
    mean: dict
    std: dict
    counts: dict
    n_trials: int
    metadata: dict = field(default_factory=dict)

    @property
    def algorithms(self):
        return list(self.mean)


def _sinr_ratio(W, truth):
    W = np.atleast_2d(W)
    den = np.einsum("ni,ij,nj->n", W.conj(), truth.true_inc, W).real
    if truth.desired_cov is not None:
        num = np.einsum("ni,ij,nj->n", W.conj(), truth.desired_cov, W).real
    else:
        num = truth.desired_power * np.abs(W.conj() @ truth.effective_steering) ** 2
    return num, den


def output_sinr_trace(W, truth):
    """Output SINR in dB for each row of ``W``; non-finite rows give NaN."""
    with np.errstate(all="ignore"):
        num, den = _sinr_ratio(W, truth)
        db = 10.0 * np.log10(num / den)
    db = np.where(num <= 0, SINR_FLOOR_DB, np.maximum(db, SINR_FLOOR_DB))
    finite_rows = np.all(np.isfinite(np.atleast_2d(W)), axis=1) & (den > 0)
    return np.where(finite_rows, db, np.nan)


def output_sinr(w, truth):
    """Output SINR of weights ``w`` in dB, floored at -100 dB.

    For incoherent scattering the desired-signal covariance replaces the
    rank-one desired term.
    """
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise InvalidInputError("weight vector is zero")
    return float(output_sinr_trace(w, truth)[0])


def optimal_sinr(truth):
    """Largest achievable output SINR in dB for the given ground truth."""
    R = truth.true_inc
    if truth.desired_cov is not None:
        L = np.linalg.cholesky(R)
        Li = np.linalg.inv(L)
        return 10.0 * math.log10(np.linalg.eigvalsh(Li @ truth.desired_cov @ Li.conj().T)[-1])
    a = truth.effective_steering
    return 10.0 * math.log10(truth.desired_power * np.vdot(a, np.linalg.solve(R, a)).real)


def make_beamformers(config, algorithms=None, projection=None):
    """Fresh beamformers for one trial, keyed by algorithm name."""
    sc, hp = config.scenario, config.hyper
    a = steering_vector(sc.geom, sc.desired_doa)
    M = sc.geom.n_sensors
    if projection is None:
        projection = projection_basis(sector_covariance(sc.geom, config.sector), hp.rank)
    ka = KaParams(hp.mu_eps, hp.sigma_eps, hp.lambda_q, hp.r0_scale * np.eye(M), hp.literal_q)
    factories = {
        "locsme": lambda: Locsme(a, projection, sc.noise_power, hp.rho0, hp.rho0_cov, hp.power_smoothing),
        "locsme-sg": lambda: LocsmeSG(a, projection, sc.noise_power, hp.mu, ka, hp.rho0, hp.epsilon0,
                                      hp.q0, hp.power_smoothing, normalize_step=hp.normalize_step),
        "smi": lambda: SMI(a),
        "sg": lambda: StandardSG(a, hp.mu, normalize_step=hp.normalize_step),
    }
    names = config.algorithms if algorithms is None else algorithms
    return {name: factories[name]() for name in names}


def run_trial(config, trial_index, observer=None):
    """Per-snapshot output SINR (dB) of every configured algorithm.

    All algorithms see the same snapshot stream, fixed by
    ``(config.master_seed, trial_index)``. An algorithm that raises yields a
    NaN trace; the others are unaffected.

    Args:
        observer: Optional callable ``observer(name, i, beamformer)`` invoked
            after every snapshot, for diagnostics.

    Returns:
        Dict mapping algorithm name to an array of length ``n_snapshots``.
    """
    trial = new_trial(config.scenario, config.master_seed, trial_index)
    truth = ground_truth(trial)
    X = np.array([snapshot(trial, i) for i in range(config.n_snapshots)])
    traces = {}
    for name, bf in make_beamformers(config).items():
        W = np.full_like(X, np.nan)
        try:
            with np.errstate(all="ignore"):
                for i, x in enumerate(X):
                    W[i] = bf.step(x)
                    if observer is not None:
                        observer(name, i, bf)
        except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            log.error("trial %d: %s failed at snapshot %d: %s", trial_index, name, i + 1, exc)
            traces[name] = np.full(config.n_snapshots, np.nan)
            continue
        traces[name] = output_sinr_trace(W, truth)
    return traces


def _final_sinr(args):
    config, trial_index = args
    return {k: v[-1] for k, v in run_trial(config, trial_index).items()}


def _map(fn, items, n_jobs):
    if n_jobs == 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items, chunksize=4))


def _stats(rows):
    """Mean, sample std and count of finite entries along axis 0."""
    rows = np.asarray(rows, dtype=float)
    ok = np.isfinite(rows)
    n = ok.sum(axis=0)
    filled = np.where(ok, rows, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = filled.sum(axis=0) / n
        dev = np.where(ok, rows - mean, 0.0)
        std = np.where(n > 1, np.sqrt((dev**2).sum(axis=0) / np.maximum(n - 1, 1)), 0.0)
    mean = np.where(n > 0, mean, np.nan)
    std = np.where(n > 0, std, np.nan)
    return mean, std, n


def monte_carlo(config, n_jobs=1):
    """Average output SINR over ``config.n_trials`` independent trials.

    For a snapshot sweep the axis is the snapshot index 1..N; for an SNR
    sweep each point is the SINR at the last snapshot. Trials are collected
    in index order before aggregation, so the result does not depend on
    ``n_jobs`` or on execution order.
    """
    trials = range(config.n_trials)
    names = list(config.algorithms)
    if config.sweep == "snapshots":
        axis_name, axis = "snapshot", np.arange(1, config.n_snapshots + 1)
        results = _map(_trial_traces, [(config, t) for t in trials], n_jobs)
        per_alg = {k: [r[k] for r in results] for k in names}
    else:
        axis_name, axis = "snr_db", np.array(config.snr_sweep, dtype=float)
        per_alg = {k: [[None] * len(axis) for _ in trials] for k in names}
        for j, snr in enumerate(axis):
            cfg = config.replace(scenario=dataclasses.replace(config.scenario, snr_db=float(snr)))
            results = _map(_final_sinr, [(cfg, t) for t in trials], n_jobs)
            for t, r in enumerate(results):
                for k in names:
                    per_alg[k][t][j] = r[k]
    mean, std, counts = {}, {}, {}
    for k in names:
        mean[k], std[k], counts[k] = _stats(per_alg[k]) if per_alg[k] else (None, None, None)
    return SinrCurve(
        axis_name=axis_name,
        axis=axis,
        mean=mean,
        std=std,
        counts=counts,
        n_trials=config.n_trials,
        metadata={
            "master_seed": config.master_seed,
            "config_hash": config.digest(),
            "rng": RNG_ALGORITHM,
            "version": __version__,
            "sweep": config.sweep,
        },
    )


def _trial_traces(args):
    config, trial_index = args
    return run_trial(config, trial_index)


def _fmt_axis(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _fmt_db(v):
    return "nan" if not np.isfinite(v) else f"{v:.6f}"


def emit_csv(curve, path=None, timestamp=True):
    """Write ``curve`` as CSV; returns the text.

    Metadata comes first as ``# key: value`` lines, followed by the header
    ``axis,algorithm,mean_sinr_db,std_sinr_db,n_trials`` and one row per
    (axis point, algorithm). ``path`` of None only returns the text.
    """
    buf = io.StringIO()
    meta = dict(curve.metadata)
    meta["axis"] = curve.axis_name
    meta["trials"] = curve.n_trials
    for key in sorted(meta):
        buf.write(f"# {key}: {meta[key]}\n")
    if timestamp:
        buf.write(f"# timestamp: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for j, x in enumerate(curve.axis):
        for k in curve.algorithms:
            writer.writerow([_fmt_axis(x), k, _fmt_db(curve.mean[k][j]), _fmt_db(curve.std[k][j]),
                             int(curve.counts[k][j])])
    text = buf.getvalue()
    if path is not None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return text


def read_csv(source):
    """Parse CSV text (or a path) written by :func:`emit_csv`."""
    if "\n" not in source:
        with open(source) as fh:
            source = fh.read()
    meta, body = {}, []
    for line in source.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("missing or malformed CSV header")
    axis, names = [], []
    cols = {}
    for ax, alg, m, s, n in rows[1:]:
        if not axis or axis[-1] != float(ax):
            axis.append(float(ax))
        if alg not in names:
            names.append(alg)
        cols.setdefault(alg, []).append((float(m), float(s), int(n)))
    return SinrCurve(
        axis_name=meta.get("axis", "axis"),
        axis=np.array(axis),
        mean={k: np.array([r[0] for r in cols[k]]) for k in names},
        std={k: np.array([r[1] for r in cols[k]]) for k in names},
        counts={k: np.array([r[2] for r in cols[k]]) for k in names},
        n_trials=int(meta.get("trials", 0)),
        metadata=meta,
    )
