"""Run configuration: strict JSON parsing, dotted-path overrides, and the
canonical fingerprint that ties every report back to the exact settings that
produced it."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = "1"

_SECTION_KEYS = {
    "domain": {"d", "n", "L"},
    "time": {"T", "dt", "stride"},
    "potential": {"theta", "theta0"},
    "noise": {"s0", "K", "sigma0", "gamma"},
    "scheme": {"kind", "lambda", "n_modes", "newton_tol", "max_newton"},
    "ensemble": {"master_seed", "n_traj"},
    "init": {"kind", "amplitude", "delta0", "path"},
    "output": {"dir"},
    "study": {"kind", "levels"},
    "diagnostics": {"alpha"},
}

_STUDY_KINDS = ("dt_refine", "grid_refine", "lambda_refine", "noise_scale")
_INIT_KINDS = ("constant", "eigen_bump", "file")
_SCHEME_KINDS = ("split_implicit", "yosida_galerkin")


def _need(section: dict, name: str, key: str):
    if key not in section:
        raise ConfigError(f"missing key {name}.{key}")
    return section[key]


def _as_number(value, name, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value) if integer else float(value)


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully defaulted configuration for a run."""

    d: int
    n: int
    L: float
    T: float
    dt: float
    stride: int
    theta: float
    theta0: float
    s0: int
    K: int
    sigma0: float
    gamma: float
    scheme_kind: str
    lam: float
    n_modes: int | None
    newton_tol: float
    max_newton: int
    master_seed: int
    n_traj: int
    init_kind: str
    amplitude: float
    delta0: float
    init_path: str | None
    out_dir: str
    alpha: float
    study_kind: str | None
    study_levels: tuple | None

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def effective_dict(self) -> dict:
        """Canonical nested dict (the config fingerprint hashes this)."""
        out = {
            "domain": {"d": self.d, "n": self.n, "L": self.L},
            "time": {"T": self.T, "dt": self.dt, "stride": self.stride},
            "potential": {"theta": self.theta, "theta0": self.theta0},
            "noise": {"s0": self.s0, "K": self.K, "sigma0": self.sigma0,
                      "gamma": self.gamma},
            "scheme": {"kind": self.scheme_kind, "lambda": self.lam,
                       "n_modes": self.n_modes, "newton_tol": self.newton_tol,
                       "max_newton": self.max_newton},
            "ensemble": {"master_seed": self.master_seed, "n_traj": self.n_traj},
            "init": {"kind": self.init_kind, "amplitude": self.amplitude,
                     "delta0": self.delta0, "path": self.init_path},
            "output": {"dir": self.out_dir},
            "diagnostics": {"alpha": self.alpha},
        }
        if self.study_kind is not None:
            out["study"] = {"kind": self.study_kind,
                            "levels": list(self.study_levels)}
        return out

    def fingerprint(self) -> str:
        payload = json.dumps(self.effective_dict(), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def validate_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for name, allowed in _SECTION_KEYS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section {name} must be an object")
        extra = set(section) - allowed
        if extra:
            raise ConfigError(f"unknown keys in {name}: {sorted(extra)}")

    dom = raw.get("domain", {})
    d = _as_number(_need(dom, "domain", "d"), "domain.d", integer=True)
    n = _as_number(_need(dom, "domain", "n"), "domain.n", integer=True)
    L = _as_number(dom.get("L", 1.0), "domain.L")
    if d not in (1, 2, 3):
        raise ConfigError("domain.d must be 1, 2 or 3")
    if n < 3:
        raise ConfigError("domain.n must be >= 3")
    if L <= 0:
        raise ConfigError("domain.L must be positive")

    tim = raw.get("time", {})
    T = _as_number(_need(tim, "time", "T"), "time.T")
    dt = _as_number(_need(tim, "time", "dt"), "time.dt")
    stride = _as_number(tim.get("stride", 1), "time.stride", integer=True)
    if T <= 0 or dt <= 0 or dt > T * (1 + 1e-12):
        raise ConfigError("need 0 < dt <= T")
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ConfigError("time.T must be an integer multiple of time.dt")
    if stride < 1 or n_steps % stride != 0:
        raise ConfigError("time.stride must be >= 1 and divide T/dt")

    pot = raw.get("potential", {})
    theta = _as_number(pot.get("theta", 1.0), "potential.theta")
    theta0 = _as_number(pot.get("theta0", 2.0), "potential.theta0")
    if not 0 < theta < theta0:
        raise ConfigError("need 0 < potential.theta < potential.theta0")

    noi = raw.get("noise", {})
    s0 = _as_number(noi.get("s0", 3), "noise.s0", integer=True)
    K = _as_number(noi.get("K", 16), "noise.K", integer=True)
    sigma0 = _as_number(noi.get("sigma0", 0.0), "noise.sigma0")
    gamma = _as_number(noi.get("gamma", 1.0), "noise.gamma")
    if s0 < 1:
        raise ConfigError("noise.s0 must be >= 1")
    if K < 1:
        raise ConfigError("noise.K must be >= 1")
    if sigma0 < 0:
        raise ConfigError("noise.sigma0 must be >= 0")
    if gamma <= 0.5:
        raise ConfigError("noise.gamma must exceed 1/2")

    sch = raw.get("scheme", {})
    kind = sch.get("kind", "split_implicit")
    if kind not in _SCHEME_KINDS:
        raise ConfigError(f"scheme.kind must be one of {_SCHEME_KINDS}")
    lam = _as_number(sch.get("lambda", 1e-3), "scheme.lambda")
    n_modes = sch.get("n_modes", None)
    if n_modes is not None:
        n_modes = _as_number(n_modes, "scheme.n_modes", integer=True)
        if not 1 <= n_modes <= n**d:
            raise ConfigError(f"scheme.n_modes must lie in 1..{n**d}")
    newton_tol = _as_number(sch.get("newton_tol", 1e-12), "scheme.newton_tol")
    max_newton = _as_number(sch.get("max_newton", 100), "scheme.max_newton",
                            integer=True)
    if not 0 < newton_tol <= 1e-10:
        raise ConfigError("scheme.newton_tol must lie in (0, 1e-10]")
    if max_newton < 10:
        raise ConfigError("scheme.max_newton must be >= 10")
    if kind == "yosida_galerkin":
        if lam <= 0:
            raise ConfigError("scheme.lambda must be positive")
        if dt * (theta0 - theta + 1.0 / lam) >= 1.0:
            raise ConfigError(
                "stability guard dt*(c_f + 1/lambda) < 1 violated for "
                "yosida_galerkin"
            )

    ens = raw.get("ensemble", {})
    master_seed = _as_number(ens.get("master_seed", 0), "ensemble.master_seed",
                             integer=True)
    n_traj = _as_number(ens.get("n_traj", 1), "ensemble.n_traj", integer=True)
    if not 0 <= master_seed < 2**64:
        raise ConfigError("ensemble.master_seed must be a 64-bit integer")
    if n_traj < 1:
        raise ConfigError("ensemble.n_traj must be >= 1")

    ini = raw.get("init", {})
    init_kind = ini.get("kind", "eigen_bump")
    if init_kind not in _INIT_KINDS:
        raise ConfigError(f"init.kind must be one of {_INIT_KINDS}")
    amplitude = _as_number(ini.get("amplitude", 0.0), "init.amplitude")
    delta0 = _as_number(ini.get("delta0", 0.5), "init.delta0")
    init_path = ini.get("path", None)
    if init_path is not None and not isinstance(init_path, str):
        raise ConfigError("init.path must be a string")
    if not 0 < delta0 < 1:
        raise ConfigError("init.delta0 must lie in (0, 1)")
    if init_kind == "constant" and abs(amplitude) > 1 - delta0 + 1e-12:
        raise ConfigError("constant init needs |amplitude| <= 1 - delta0")
    if init_kind == "file" and not init_path:
        raise ConfigError("file init needs init.path")

    outp = raw.get("output", {})
    out_dir = outp.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.dir must be a nonempty string")

    dia = raw.get("diagnostics", {})
    alpha = _as_number(dia.get("alpha", 0.45), "diagnostics.alpha")
    if not 0 < alpha < 1:
        raise ConfigError("diagnostics.alpha must lie in (0, 1)")

    study_kind, study_levels = None, None
    if "study" in raw:
        st = raw["study"]
        study_kind = _need(st, "study", "kind")
        if study_kind not in _STUDY_KINDS:
            raise ConfigError(f"study.kind must be one of {_STUDY_KINDS}")
        levels = _need(st, "study", "levels")
        if not isinstance(levels, list) or len(levels) < 3:
            raise ConfigError("study.levels needs at least 3 refinement levels")
        study_levels = tuple(
            _as_number(v, "study.levels[]", integer=(study_kind == "grid_refine"))
            for v in levels
        )

    return RunConfig(
        d=d, n=n, L=L, T=T, dt=dt, stride=stride, theta=theta, theta0=theta0,
        s0=s0, K=K, sigma0=sigma0, gamma=gamma, scheme_kind=kind, lam=lam,
        n_modes=n_modes, newton_tol=newton_tol, max_newton=max_newton,
        master_seed=master_seed, n_traj=n_traj, init_kind=init_kind,
        amplitude=amplitude, delta0=delta0, init_path=init_path,
        out_dir=out_dir, alpha=alpha, study_kind=study_kind,
        study_levels=study_levels,
    )


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply repeatable --set key.path=value pairs onto the raw config dict.

    Values parse as JSON scalars; anything unparseable stays a string.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path, _, text = item.partition("=")
        keys = path.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override {item!r} has an empty key component")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-object")
        node[keys[-1]] = value
    return raw


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, list(overrides))
    return validate_config(raw)
