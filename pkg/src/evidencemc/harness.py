"""Replication harness: seeded replicate studies, CSV emission, references.

An experiment is a (model, estimator, parameter-block) triple run over
independent replicates; replicate r is fully determined by the seed
``base_seed + r``.  Results land in a CSV with one row per replicate,
every row carrying the reference value for its model, and failures
recorded in place rather than aborting the study.  Preset files shipped
with the package reproduce the survey's replicate studies with one
command.
"""

from __future__ import annotations

import configparser
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib.resources import files as package_files
from pathlib import Path

import numpy as np

from .benchmarks import (
    BananaParams,
    GaussianToyData,
    banana_model,
    banana_reference_evidence,
    banana_reference_moments,
    gaussian_toy_box_model,
    gaussian_toy_box_reference_evidence,
    gaussian_toy_log_posterior_unnorm,
    gaussian_toy_model,
    gaussian_toy_reference_evidence,
)
from .core import NormalizedDensity, WeightedSample, evidence_from_weights
from .estimators import (
    BridgeConfig,
    bridge_iterative_optimal,
    harmonic_mean_evidence,
    hpd_ellipse,
    mixture_bridge_evidence,
)
from .nested import nested_evidence, nested_posterior_estimates, nested_sampling_run
from .pmc import PmcConfig, pmc_evidence, pmc_run
from .samplers import (
    ConstrainedWalkConfig,
    gibbs_toy_posterior,
    mixture_gibbs_sampler,
    toy_gibbs_kernel,
)

__all__ = [
    "MODELS",
    "ESTIMATORS",
    "SUPPORTED",
    "ExperimentConfig",
    "ResultRow",
    "default_references_path",
    "load_references",
    "regenerate_references",
    "run_experiment",
    "run_config_file",
    "read_rows",
    "write_rows",
    "summarize",
    "summarize_rows",
    "list_presets",
    "preset_path",
]

MODELS = ("gaussian-toy", "banana")
ESTIMATORS = (
    "harmonic-hpd",
    "mixture-bridge",
    "bridge-iterative",
    "nested",
    "pmc",
    "prior-is",
)
# Which estimator runs on which model.  Estimators that need a proper
# prior to sample from (nested, prior-is) use the box-restated toy
# variant and carry its reference; pmc's initialization spread is tied
# to the banana study.
SUPPORTED = {
    "gaussian-toy": (
        "harmonic-hpd",
        "mixture-bridge",
        "bridge-iterative",
        "nested",
        "prior-is",
    ),
    "banana": ("nested", "pmc", "prior-is"),
}

TOY_DATA = GaussianToyData(n=10, xbar=0.0, s2=1.0)
TOY_BOX_BOUNDS = ((-3.0, 3.0), (0.05, 15.0))

DEFAULT_PARAMS = {
    "harmonic-hpd": {"n_draws": 10_000, "burn_in": 0, "hpd_level": 0.1},
    "mixture-bridge": {
        "n_steps": 10_000,
        "pilot_draws": 1000,
        "hpd_level": 0.1,
        "omega_mode": "reference",
    },
    "bridge-iterative": {
        "n_draws": 10_000,
        "burn_in": 0,
        "hpd_level": 0.1,
        "tol": 1e-8,
        "max_iter": 100,
    },
    "nested": {
        "n_live": 1000,
        "n_steps": 50,
        "step_variance": 0.1,
        "max_iterations": 10_000,
        "schedule": "deterministic",
    },
    "pmc": {
        "n_components": 9,
        "dof": 9.0,
        "n_per_iteration": 5000,
        "n_iterations": 10,
        "n_final": 50_000,
    },
    "prior-is": {"n_draws": 10_000},
}

FIELDNAMES = [
    "run",
    "estimator",
    "log_evidence",
    "std_error",
    "ess",
    "n_draws",
    "e_theta1",
    "e_theta2",
    "ref_log_evidence",
    "ref_e_theta1",
    "ref_e_theta2",
    "error",
    "wall_clock_s",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One estimator on one model over seeded replicates.

    Replicate r (r = 0..runs-1) runs with seed ``base_seed + r``; the
    mapping is part of the output contract and never changes.  ``params``
    holds the estimator-specific block; unknown keys are rejected.
    """

    model: str
    estimator: str
    runs: int
    base_seed: int
    params: dict = field(default_factory=dict)
    output: str = "results.csv"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(
                f"unknown estimator {self.estimator!r}; expected one of {ESTIMATORS}"
            )
        if self.estimator not in SUPPORTED[self.model]:
            raise ValueError(
                f"estimator {self.estimator!r} does not support model "
                f"{self.model!r}; supported there: {SUPPORTED[self.model]}"
            )
        if self.runs < 1:
            raise ValueError("runs must be positive")
        defaults = DEFAULT_PARAMS[self.estimator]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown parameter(s) {sorted(unknown)} for estimator "
                f"{self.estimator!r}; known: {sorted(defaults)}"
            )
        merged = {**defaults, **self.params}
        object.__setattr__(self, "params", merged)

    def replicate_seed(self, run: int) -> int:
        return self.base_seed + run


@dataclass
class ResultRow:
    """One replicate's outcome; empty fields serialize as ''."""

    run: int
    estimator: str
    log_evidence: float | None = None
    std_error: float | None = None
    ess: float | None = None
    n_draws: int | None = None
    e_theta1: float | None = None
    e_theta2: float | None = None
    ref_log_evidence: float | None = None
    ref_e_theta1: float | None = None
    ref_e_theta2: float | None = None
    error: str = ""
    wall_clock_s: float | None = None

    def to_csv(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out[f.name] = ""
            elif isinstance(v, float):
                out[f.name] = f"{v:.17g}"
            else:
                out[f.name] = str(v)
        return out

    @classmethod
    def from_csv(cls, record: dict) -> "ResultRow":
        kwargs = {}
        for f in fields(cls):
            raw = record[f.name]
            if f.name in ("run", "n_draws"):
                kwargs[f.name] = int(raw) if raw != "" else None
            elif f.name in ("estimator", "error"):
                kwargs[f.name] = raw
            else:
                kwargs[f.name] = float(raw) if raw != "" else None
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Reference constants
# ---------------------------------------------------------------------------

REFERENCE_SECTIONS = ("gaussian-toy", "gaussian-toy-box", "banana")


@dataclass(frozen=True)
class ReferenceSet:
    """The reference values a result row carries."""

    log_evidence: float
    e_theta1: float | None = None
    e_theta2: float | None = None


def default_references_path() -> Path:
    return Path(str(package_files("evidencemc") / "data" / "references.txt"))


def _expected_reference_params(section: str) -> dict:
    if section == "gaussian-toy":
        return {"n": float(TOY_DATA.n), "xbar": TOY_DATA.xbar, "s2": TOY_DATA.s2}
    if section == "gaussian-toy-box":
        return {
            "n": float(TOY_DATA.n),
            "xbar": TOY_DATA.xbar,
            "s2": TOY_DATA.s2,
            "bounds": [b for pair in TOY_BOX_BOUNDS for b in pair],
        }
    if section == "banana":
        p = BananaParams()
        return {
            "beta": p.beta,
            "sigma1_sq": p.sigma1_sq,
            "box": [v for pair in zip(p.box.lower, p.box.upper) for v in pair],
        }
    raise ValueError(f"unknown reference section {section!r}")


def _compute_reference_section(section: str, resolution: int = 1000) -> dict:
    """Freshly computed values + provenance for one reference section."""
    expected = _expected_reference_params(section)
    out = {k: v for k, v in expected.items()}
    if section == "gaussian-toy":
        ref = gaussian_toy_reference_evidence(TOY_DATA)
    elif section == "gaussian-toy-box":
        ref = gaussian_toy_box_reference_evidence(
            TOY_DATA, TOY_BOX_BOUNDS, cells_per_axis=resolution
        )
    else:
        ref = banana_reference_evidence(cells_per_axis=resolution)
        e1, e2 = banana_reference_moments(cells_per_axis=resolution)
        out["e_theta1"] = e1
        out["e_theta2"] = e2
    out["log_evidence"] = ref.log_value
    out["method"] = ref.method
    out["resolution"] = ref.resolution
    return out


def _format_reference_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return " ".join(f"{x:.17g}" for x in v)
    return str(v)


def regenerate_references(
    model: str = "all", resolution: int = 1000, seed: int = 0, path=None
) -> Path:
    """Recompute reference constants and rewrite the references file.

    Every recomputed section is internally cross-checked (analytic vs.
    quadrature for the toy, grid vs. quadrature elsewhere); any
    disagreement raises before the file is touched.  Sections not being
    regenerated are preserved.  Returns the written path.
    """
    targets = REFERENCE_SECTIONS if model == "all" else (model,)
    for t in targets:
        if t not in REFERENCE_SECTIONS:
            raise ValueError(
                f"unknown reference section {t!r}; expected one of "
                f"{REFERENCE_SECTIONS} or 'all'"
            )
    path = Path(path) if path is not None else default_references_path()
    existing = configparser.ConfigParser()
    if path.exists():
        existing.read(path)
    computed = {t: _compute_reference_section(t, resolution) for t in targets}

    parser = configparser.ConfigParser()
    for section in REFERENCE_SECTIONS:
        if section in computed:
            body = dict(computed[section])
            body["seed"] = seed
        elif existing.has_section(section):
            body = dict(existing[section])
        else:
            continue
        parser.add_section(section)
        for k, v in body.items():
            parser.set(section, k, _format_reference_value(v))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
    return path


def load_references(path=None) -> configparser.ConfigParser:
    path = Path(path) if path is not None else default_references_path()
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"references file not found: {path}")
    return parser


def _reference_section_for(model: str, estimator: str) -> str:
    if model == "banana":
        return "banana"
    if estimator in ("nested", "prior-is"):
        return "gaussian-toy-box"
    return "gaussian-toy"


def _params_match(stored: configparser.SectionProxy, expected: dict) -> bool:
    try:
        for key, want in expected.items():
            got = stored.get(key)
            if got is None:
                return False
            if isinstance(want, (list, tuple)):
                vals = [float(tok) for tok in got.split()]
                if vals != [float(x) for x in want]:
                    return False
            elif float(got) != float(want):
                return False
    except ValueError:
        return False
    return True


def reference_for(model: str, estimator: str, path=None) -> ReferenceSet:
    """The reference constants a (model, estimator) run should carry.

    Reads the stored file; when the section is missing or its stored
    model parameters do not match the replication parameters, the
    reference is recomputed on the fly instead of erroring.
    """
    section = _reference_section_for(model, estimator)
    body = None
    try:
        parser = load_references(path)
        if parser.has_section(section) and _params_match(
            parser[section], _expected_reference_params(section)
        ):
            body = parser[section]
    except FileNotFoundError:
        body = None
    if body is None:
        computed = _compute_reference_section(section)
        return ReferenceSet(
            log_evidence=computed["log_evidence"],
            e_theta1=computed.get("e_theta1"),
            e_theta2=computed.get("e_theta2"),
        )
    return ReferenceSet(
        log_evidence=float(body["log_evidence"]),
        e_theta1=float(body["e_theta1"]) if "e_theta1" in body else None,
        e_theta2=float(body["e_theta2"]) if "e_theta2" in body else None,
    )


# ---------------------------------------------------------------------------
# Single-replicate estimator dispatch
# ---------------------------------------------------------------------------


def _toy_log_posterior(points):
    return gaussian_toy_log_posterior_unnorm(points, TOY_DATA)


def _posterior_ellipse_phi(chain: WeightedSample, level: float) -> NormalizedDensity:
    ell = hpd_ellipse(chain, _toy_log_posterior, level)
    return NormalizedDensity(log_density=ell.log_density, sample=ell.sample)


def _weighted_moments(sample: WeightedSample) -> tuple[float, float]:
    lw = sample.log_weights
    w = np.exp(lw - np.max(lw))
    w = w / w.sum()
    return float(w @ sample.points[:, 0]), float(w @ sample.points[:, 1])


def _estimate_harmonic_hpd(params: dict, seed: int) -> dict:
    chain = gibbs_toy_posterior(TOY_DATA, params["n_draws"], params["burn_in"], seed)
    phi = _posterior_ellipse_phi(chain, params["hpd_level"])
    est = harmonic_mean_evidence(chain, phi, _toy_log_posterior)
    return {
        "log_evidence": est.log_evidence,
        "std_error": est.std_error,
        "ess": est.ess,
        "n_draws": est.n_draws,
    }


def _estimate_mixture_bridge(params: dict, seed: int, ref: ReferenceSet) -> dict:
    if params["omega_mode"] not in ("reference", "pilot"):
        raise ValueError("omega_mode must be 'reference' or 'pilot'")
    rng = np.random.default_rng(seed)
    pilot = gibbs_toy_posterior(TOY_DATA, params["pilot_draws"], 0, rng)
    phi = _posterior_ellipse_phi(pilot, params["hpd_level"])
    if params["omega_mode"] == "reference":
        omega1 = 0.1 * math.exp(-ref.log_evidence)
    else:
        pilot_est = harmonic_mean_evidence(pilot, phi, _toy_log_posterior)
        omega1 = 0.1 * math.exp(-pilot_est.log_evidence)
    chain = mixture_gibbs_sampler(
        gaussian_toy_model(TOY_DATA),
        phi,
        omega1,
        toy_gibbs_kernel(TOY_DATA),
        params["n_steps"],
        seed=rng,
    )
    est = mixture_bridge_evidence(chain, omega1, phi, _toy_log_posterior)
    return {
        "log_evidence": est.log_evidence,
        "std_error": est.std_error,
        "ess": est.ess,
        "n_draws": est.n_draws,
    }


def _estimate_bridge_iterative(params: dict, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    chain = gibbs_toy_posterior(TOY_DATA, params["n_draws"], params["burn_in"], rng)
    ell = hpd_ellipse(chain, _toy_log_posterior, params["hpd_level"])
    draws = ell.sample(rng, params["n_draws"])
    phi_sample = WeightedSample(
        points=draws, log_weights=np.zeros(len(draws)), source="proposal"
    )
    cfg = BridgeConfig(tol=params["tol"], max_iter=params["max_iter"])
    res = bridge_iterative_optimal(
        chain, phi_sample, _toy_log_posterior, ell.log_density, cfg
    )
    return {
        "log_evidence": res.log_value,
        "std_error": res.std_error,
        "ess": res.ess,
        "n_draws": res.n1 + res.n2,
    }


def _model_for(model: str, estimator: str):
    if model == "banana":
        return banana_model()
    if estimator in ("nested", "prior-is"):
        return gaussian_toy_box_model(TOY_DATA, TOY_BOX_BOUNDS)
    return gaussian_toy_model(TOY_DATA)


def _estimate_nested(model: str, params: dict, seed: int) -> dict:
    spec = _model_for(model, "nested")
    walk_cfg = ConstrainedWalkConfig(
        n_steps=params["n_steps"], step_variance=params["step_variance"]
    )
    run = nested_sampling_run(
        spec,
        params["n_live"],
        walk_cfg,
        params["max_iterations"],
        seed,
        params["schedule"],
    )
    est = nested_evidence(run)
    e1, _ = nested_posterior_estimates(run, lambda p: p[:, 0])
    e2, _ = nested_posterior_estimates(run, lambda p: p[:, 1])
    return {
        "log_evidence": est.log_evidence,
        "std_error": est.std_error,
        "ess": est.ess,
        "n_draws": est.n_draws,
        "e_theta1": e1,
        "e_theta2": e2,
    }


def _estimate_pmc(params: dict, seed: int) -> dict:
    cfg = PmcConfig(
        n_components=params["n_components"],
        dof=params["dof"],
        n_per_iteration=params["n_per_iteration"],
        n_iterations=params["n_iterations"],
        n_final=params["n_final"],
    )
    result = pmc_run(banana_model(), cfg, seed)
    est = pmc_evidence(result.sample)
    e1, e2 = _weighted_moments(result.sample)
    return {
        "log_evidence": est.log_evidence,
        "std_error": est.std_error,
        "ess": est.ess,
        "n_draws": est.n_draws,
        "e_theta1": e1,
        "e_theta2": e2,
    }


def _estimate_prior_is(model: str, params: dict, seed: int) -> dict:
    spec = _model_for(model, "prior-is")
    rng = np.random.default_rng(seed)
    points = spec.prior_sampler(rng, params["n_draws"])
    sample = WeightedSample(
        points=points,
        log_weights=np.asarray(spec.log_likelihood(points), dtype=float),
        source="prior",
    )
    est = evidence_from_weights(sample)
    e1, e2 = _weighted_moments(sample)
    return {
        "log_evidence": est.log_evidence,
        "std_error": est.std_error,
        "ess": est.ess,
        "n_draws": est.n_draws,
        "e_theta1": e1,
        "e_theta2": e2,
    }


def _replicate_task(args) -> ResultRow:
    """Run one replicate; exceptions become error-flagged rows."""
    model, estimator, params, run, seed, ref = args
    row = ResultRow(
        run=run,
        estimator=estimator,
        ref_log_evidence=ref.log_evidence,
        ref_e_theta1=ref.e_theta1,
        ref_e_theta2=ref.e_theta2,
    )
    start = time.perf_counter()
    try:
        if estimator == "harmonic-hpd":
            out = _estimate_harmonic_hpd(params, seed)
        elif estimator == "mixture-bridge":
            out = _estimate_mixture_bridge(params, seed, ref)
        elif estimator == "bridge-iterative":
            out = _estimate_bridge_iterative(params, seed)
        elif estimator == "nested":
            out = _estimate_nested(model, params, seed)
        elif estimator == "pmc":
            out = _estimate_pmc(params, seed)
        elif estimator == "prior-is":
            out = _estimate_prior_is(model, params, seed)
        else:  # pragma: no cover - ExperimentConfig already validates
            raise ValueError(f"unknown estimator {estimator!r}")
        for key, value in out.items():
            setattr(row, key, value)
    except Exception as exc:  # noqa: BLE001 - failures become rows by contract
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_clock_s = time.perf_counter() - start
    return row


def replicate_rows(
    cfg: ExperimentConfig, workers: int = 1, references_path=None
) -> list[ResultRow]:
    """All replicates of one config, in run order."""
    if workers < 1:
        raise ValueError("workers must be positive")
    ref = reference_for(cfg.model, cfg.estimator, references_path)
    tasks = [
        (cfg.model, cfg.estimator, cfg.params, r, cfg.replicate_seed(r), ref)
        for r in range(cfg.runs)
    ]
    if workers == 1:
        return [_replicate_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate_task, tasks))


def write_rows(path, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIELDNAMES, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv())
    return path


def read_rows(path) -> list[ResultRow]:
    """Parse a results CSV; malformed content reports its line number."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FIELDNAMES:
            raise ValueError(
                f"{path}: line 1: expected header {','.join(FIELDNAMES)}"
            )
        for record in reader:
            try:
                if None in record or None in record.values():
                    raise ValueError("wrong number of fields")
                rows.append(ResultRow.from_csv(record))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {reader.line_num}: {exc}") from exc
    return rows


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1, references_path=None
) -> list[ResultRow]:
    """Execute a config: CSV written to cfg.output, summary printed."""
    rows = replicate_rows(cfg, workers, references_path)
    write_rows(cfg.output, rows)
    print(summarize_rows(rows))
    return rows


# ---------------------------------------------------------------------------
# Preset / config files
# ---------------------------------------------------------------------------


def presets_dir() -> Path:
    return Path(str(package_files("evidencemc") / "data" / "presets"))


def list_presets() -> list[str]:
    return sorted(p.stem for p in presets_dir().glob("*.ini"))


def preset_path(name: str) -> Path:
    """Resolve a config argument: explicit file path or packaged preset name."""
    direct = Path(name)
    if direct.is_file():
        return direct
    candidate = presets_dir() / (name if name.endswith(".ini") else f"{name}.ini")
    if candidate.is_file():
        return candidate
    raise FileNotFoundError(
        f"no config file {name!r} and no such preset; presets: {list_presets()}"
    )


def _coerce_params(estimator: str, raw: dict) -> dict:
    defaults = DEFAULT_PARAMS[estimator]
    params = {}
    for key, value in raw.items():
        if key not in defaults:
            raise ValueError(
                f"unknown parameter {key!r} for estimator {estimator!r}; "
                f"known: {sorted(defaults)}"
            )
        target = defaults[key]
        if isinstance(target, int):
            params[key] = int(value)
        elif isinstance(target, float):
            params[key] = float(value)
        else:
            params[key] = str(value)
    return params


def parse_config_file(path) -> list[ExperimentConfig]:
    """Read a preset/config file into one ExperimentConfig per estimator.

    Layout: an ``[experiment]`` section with model, runs, base_seed and
    output, plus one ``[estimator:<name>]`` section per estimator whose
    keys override that estimator's default parameter block.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    if not parser.has_section("experiment"):
        raise ValueError(f"{path}: missing [experiment] section")
    exp = parser["experiment"]
    try:
        model = exp["model"]
        runs = exp.getint("runs")
        base_seed = exp.getint("base_seed")
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: bad [experiment] section: {exc}") from exc
    output = exp.get("output", "results.csv")
    configs = []
    for section in parser.sections():
        if section == "experiment":
            continue
        if not section.startswith("estimator:"):
            raise ValueError(f"{path}: unexpected section [{section}]")
        estimator = section.split(":", 1)[1]
        if estimator not in ESTIMATORS:
            raise ValueError(f"{path}: unknown estimator section [{section}]")
        params = _coerce_params(estimator, dict(parser[section]))
        configs.append(
            ExperimentConfig(
                model=model,
                estimator=estimator,
                runs=runs,
                base_seed=base_seed,
                params=params,
                output=output,
            )
        )
    if not configs:
        raise ValueError(f"{path}: no [estimator:...] sections")
    return configs


def run_config_file(
    name,
    runs: int | None = None,
    base_seed: int | None = None,
    output=None,
    workers: int = 1,
    references_path=None,
) -> Path:
    """Run every estimator block of a config file into a single CSV.

    Rows are grouped by estimator block in file order, each block in run
    order; the combined summary is printed.  Optional arguments override
    the file's runs, base_seed and output path.
    """
    path = preset_path(str(name))
    configs = parse_config_file(path)
    overrides = {}
    if runs is not None:
        overrides["runs"] = runs
    if base_seed is not None:
        overrides["base_seed"] = base_seed
    if output is not None:
        overrides["output"] = str(output)
    if overrides:
        configs = [replace(c, **overrides) for c in configs]
    all_rows = []
    for cfg in configs:
        all_rows.extend(replicate_rows(cfg, workers, references_path))
    out_path = write_rows(configs[0].output, all_rows)
    print(f"wrote {out_path} ({len(all_rows)} rows)")
    print(summarize_rows(all_rows))
    return out_path


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = ("log_evidence", "e_theta1", "e_theta2")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def summarize_rows(rows) -> str:
    """Per-estimator five-number summary plus mean/std, as a text table.

    Only non-failed rows enter the statistics; the failure count is
    reported per estimator.  Ordering is deterministic: estimators
    sorted by name, columns in fixed order.
    """
    rows = list(rows)
    if not rows:
        return "no rows"
    estimators = sorted({r.estimator for r in rows})
    header = (
        f"{'estimator':<16} {'column':<13} {'n':>4} {'failed':>6} "
        f"{'min':>12} {'q1':>12} {'median':>12} {'q3':>12} {'max':>12} "
        f"{'mean':>12} {'std':>12}"
    )
    lines = [header]
    for estimator in estimators:
        block = [r for r in rows if r.estimator == estimator]
        good = [r for r in block if not r.error]
        failed = len(block) - len(good)
        for column in SUMMARY_COLUMNS:
            values = np.array(
                [getattr(r, column) for r in good if getattr(r, column) is not None]
            )
            if values.size == 0:
                continue
            q1, med, q3 = np.percentile(values, [25, 50, 75])
            std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
            lines.append(
                f"{estimator:<16} {column:<13} {values.size:>4} {failed:>6} "
                f"{_fmt(values.min()):>12} {_fmt(q1):>12} {_fmt(med):>12} "
                f"{_fmt(q3):>12} {_fmt(values.max()):>12} "
                f"{_fmt(float(values.mean())):>12} {_fmt(std):>12}"
            )
        if not any(
            getattr(r, c) is not None for r in good for c in SUMMARY_COLUMNS
        ):
            lines.append(
                f"{estimator:<16} {'-':<13} {0:>4} {failed:>6} "
                + " ".join(["-".rjust(12)] * 7)
            )
    return "\n".join(lines)


def summarize(path) -> str:
    """Summary table of a results CSV (see summarize_rows)."""
    return summarize_rows(read_rows(path))
