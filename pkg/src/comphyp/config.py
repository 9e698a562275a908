"""YAML experiment configs and the bundled presets.

See ``docs/formats.md`` for the schema. Every validation failure raises
:class:`ConfigError` whose ``field`` names the offending key.
"""

import hashlib
import json
from importlib import resources
from pathlib import Path

import yaml

from .distances import Constant, GaussianRBF
from .models import Gaussian
from .simulate import TESTS, ConfigError, ExperimentConfig, TrainLengths

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "name", "seed", "trials", "n_grid", "tests", "prior",
             "kernel", "train_lengths", "clusters"}


def preset_names():
    files = resources.files("comphyp").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def preset_text(name) -> str:
    if name not in preset_names():
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {preset_names()}")
    return resources.files("comphyp").joinpath("presets", f"{name}.yaml").read_text()


def load_config(source) -> ExperimentConfig:
    """Load a config from a file path, or from a bundled preset name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in preset_names():
        text = preset_text(str(source))
    else:
        raise FileNotFoundError(f"no config file or preset named {str(source)!r}")
    return parse_config(text)


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"not valid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError("<document>", "top level must be a mapping")
    return config_from_dict(raw)


def _require(raw, key, kind, where=""):
    if key not in raw:
        raise ConfigError(where + key, "missing")
    val = raw[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(where + key, f"expected {getattr(kind, '__name__', kind)}, got {val!r}")
    return val


def _n_grid(val):
    if isinstance(val, dict):
        extra = set(val) - {"start", "stop", "step"}
        if extra:
            raise ConfigError("n_grid", f"unknown keys {sorted(extra)}")
        start = _require(val, "start", int, "n_grid.")
        stop = _require(val, "stop", int, "n_grid.")
        step = val.get("step", 1)
        if not isinstance(step, int) or step < 1:
            raise ConfigError("n_grid.step", "must be a positive integer")
        return tuple(range(start, stop + 1, step))
    if isinstance(val, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        return tuple(val)
    raise ConfigError("n_grid", "expected a list of integers or {start, stop, step}")


def _kernel(val):
    if val is None:
        return GaussianRBF(1.0)
    if not isinstance(val, dict):
        raise ConfigError("kernel", "expected a mapping")
    family = val.get("family", "gaussian")
    try:
        if family == "gaussian":
            extra = set(val) - {"family", "bandwidth"}
            if extra:
                raise ConfigError("kernel", f"unknown keys {sorted(extra)}")
            return GaussianRBF(float(val.get("bandwidth", 1.0)))
        if family == "constant":
            extra = set(val) - {"family", "level"}
            if extra:
                raise ConfigError("kernel", f"unknown keys {sorted(extra)}")
            return Constant(float(val.get("level", 1.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("kernel", str(exc)) from None
    raise ConfigError("kernel.family", f"unknown kernel family {family!r}")


def _train_lengths(val):
    if val is None:
        return TrainLengths()
    if not isinstance(val, dict):
        raise ConfigError("train_lengths", "expected a mapping")
    extra = set(val) - {"rule", "value"}
    if extra:
        raise ConfigError("train_lengths", f"unknown keys {sorted(extra)}")
    rule = val.get("rule", "equal")
    value = val.get("value", 1.0)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError("train_lengths.value", f"expected a number, got {value!r}")
    if rule == "fixed" and (not float(value).is_integer() or value < 1):
        raise ConfigError("train_lengths.value", "fixed length must be a positive integer")
    return TrainLengths(rule, float(value))


def _clusters(val):
    if not isinstance(val, list):
        raise ConfigError("clusters", "expected a list of clusters")
    if len(val) < 2:
        raise ConfigError("clusters", f"need clusters ≥ 2, got {len(val)}")
    out = []
    for m, cluster in enumerate(val):
        where = f"clusters[{m}]"
        if not isinstance(cluster, dict) or "members" not in cluster:
            raise ConfigError(where, "expected a mapping with a 'members' list")
        members = cluster["members"]
        if not isinstance(members, list) or not members:
            raise ConfigError(where + ".members", "expected a nonempty list")
        models = []
        for i, spec in enumerate(members):
            mw = f"{where}.members[{i}]"
            if not isinstance(spec, dict):
                raise ConfigError(mw, "expected {mean, variance}")
            extra = set(spec) - {"mean", "variance"}
            if extra:
                raise ConfigError(mw, f"unknown keys {sorted(extra)}")
            if "mean" not in spec:
                raise ConfigError(mw + ".mean", "missing")
            try:
                models.append(Gaussian(spec["mean"], spec.get("variance", 1.0)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(mw, str(exc)) from None
        out.append(tuple(models))
    return tuple(out)


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    tests = raw.get("tests", list(TESTS))
    if not isinstance(tests, list) or not all(isinstance(t, str) for t in tests):
        raise ConfigError("tests", "expected a list of test names")
    seed = raw.get("seed", 0)
    trials = raw.get("trials", 10_000)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")
    if not isinstance(trials, int) or isinstance(trials, bool):
        raise ConfigError("trials", f"expected an integer, got {trials!r}")
    return ExperimentConfig(
        clusters=_clusters(raw.get("clusters")),
        n_grid=_n_grid(_require(raw, "n_grid", (list, dict))),
        trials=trials,
        tests=tuple(t.lower() for t in tests),
        kernel=_kernel(raw.get("kernel")),
        seed=seed,
        train_lengths=_train_lengths(raw.get("train_lengths")),
        prior=raw.get("prior", "member"),
        name=str(raw.get("name", "experiment")),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved config in schema form (round-trips through config_from_dict)."""
    k = cfg.kernel
    kernel = ({"family": "gaussian", "bandwidth": k.bandwidth} if isinstance(k, GaussianRBF)
              else {"family": "constant", "level": k.level})
    def mean(p):
        return p.mean[0] if p.dim == 1 else list(p.mean)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "n_grid": list(cfg.n_grid),
        "tests": list(cfg.tests),
        "prior": cfg.prior,
        "kernel": kernel,
        "train_lengths": {"rule": cfg.train_lengths.rule, "value": cfg.train_lengths.value},
        "clusters": [{"members": [{"mean": mean(p), "variance": p.variance} for p in c]}
                     for c in cfg.clusters],
    }


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
