"""Run configuration: YAML document <-> validated RunConfig.

Document layout (every key except ``alpha``, ``N``, ``patches`` and
``ctrl.t_end`` is optional)::

    alpha: 0.5
    N: 256
    scheme: auto              # auto | alpha_lt1 | qg_with_lambda
    quadrature: spectral      # spectral | trapezoid
    output_dir: out
    patches:
      - shape: fourier_perturbed_circle
        params: {radius: 1.0, modes: [[3, 0.1]]}
        center: [0.0, 0.0]
        rotation: 0.0         # radians, about the centre
        orientation: ccw      # ccw | cw
        theta_in: 1.0
        theta_out: 0.0
        prefactor: null       # overrides Theta_alpha / (2 pi)
    reg: {epsilon: 0.0, delta: 0.0, mollifier_kind: fourier_cutoff}
    ctrl: {t_end: 0.5, dt_init: 1.0e-3, cfl: 0.5, ...}
    tangential: {switch_threshold: 1.0e-3}

Shape parameters: ``circle`` {radius = 1}; ``ellipse`` {a, b};
``fourier_perturbed_circle`` {radius = 1, modes = [[k, a_k], ...]} for
r(gamma) = radius + sum a_k cos(k gamma); ``csv_file`` {path} with exactly
N rows, relative paths resolved against the config file's directory.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .curve import ClosedCurve, CurveError, parameter_grid, read_curve_csv
from .dynamics import SimState
from .integrator import StepControl
from .tangential import UNIFORM_SWITCH
from .velocity import PatchConfig, RegularizationSpec

SHAPES = ("circle", "ellipse", "fourier_perturbed_circle", "csv_file")
SCHEME_CHOICES = ("auto", "alpha_lt1", "qg_with_lambda")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e-3" as a string; accept any decimal float literal
_FLOAT = re.compile(
    r"""^[-+]?(?:\d[\d_]*\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\.inf|\.Inf|\.INF|\.nan|\.NaN|\.NAN)$""",
    re.X,
)
_Loader.yaml_implicit_resolvers = {k: list(v) for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()}
for _ch in list("-+0123456789."):
    _Loader.yaml_implicit_resolvers[_ch] = [
        (tag, rx) for tag, rx in _Loader.yaml_implicit_resolvers.get(_ch, []) if tag != "tag:yaml.org,2002:float"
    ]
_Loader.add_implicit_resolver("tag:yaml.org,2002:float", _FLOAT, list("-+0123456789."))


class _Dumper(yaml.SafeDumper):
    pass


def _float_repr(dumper: yaml.SafeDumper, value: float) -> yaml.ScalarNode:
    if math.isnan(value):
        text = ".nan"
    elif math.isinf(value):
        text = ".inf" if value > 0 else "-.inf"
    else:
        text = format(value, ".16e")
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float_repr)


def load_yaml(text: str) -> Any:
    return yaml.load(text, Loader=_Loader)


def dump_yaml(doc: Any) -> str:
    return yaml.dump(doc, Dumper=_Dumper, sort_keys=False, default_flow_style=None)


@dataclass(frozen=True)
class PatchSpec:
    shape: str
    params: dict = field(default_factory=dict)
    center: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    orientation: str = "ccw"
    theta_in: float = 1.0
    theta_out: float = 0.0
    prefactor: float | None = None

    def to_dict(self) -> dict:
        params = {k: ([list(m) for m in v] if k == "modes" else v) for k, v in self.params.items()}
        return {
            "shape": self.shape,
            "params": params,
            "center": list(self.center),
            "rotation": self.rotation,
            "orientation": self.orientation,
            "theta_in": self.theta_in,
            "theta_out": self.theta_out,
            "prefactor": self.prefactor,
        }


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    N: int
    patches: tuple[PatchSpec, ...]
    ctrl: StepControl
    scheme: str = "alpha_lt1"
    quadrature: str = "spectral"
    reg: RegularizationSpec = field(default_factory=RegularizationSpec)
    lambda_switch: float = UNIFORM_SWITCH
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "N": self.N,
            "scheme": self.scheme,
            "quadrature": self.quadrature,
            "output_dir": self.output_dir,
            "patches": [p.to_dict() for p in self.patches],
            "reg": {
                "epsilon": self.reg.epsilon,
                "delta": self.reg.delta,
                "mollifier_kind": self.reg.mollifier_kind,
            },
            "ctrl": {f.name: getattr(self.ctrl, f.name) for f in fields(StepControl)},
            "tangential": {"switch_threshold": self.lambda_switch},
        }

    def to_yaml(self) -> str:
        return dump_yaml(self.to_dict())


# ---------------------------------------------------------------- validation


def _check_keys(doc: Any, path: str, allowed: tuple[str, ...], required: tuple[str, ...] = ()) -> dict:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(path, f"expected a mapping, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            raise ConfigError(_join(path, str(key)), "unknown key")
    for key in required:
        if key not in doc:
            raise ConfigError(_join(path, key), "missing required key")
    return doc


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(value: Any, path: str, *, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return int(value)


def _choice(value: Any, path: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise ConfigError(path, f"must be one of {', '.join(choices)}; got {value!r}")
    return value


def _positive(value: float, path: str) -> float:
    if value <= 0:
        raise ConfigError(path, "must be positive")
    return value


def _shape_params(shape: str, doc: Any, path: str, base_dir: Path) -> dict:
    if shape == "circle":
        doc = _check_keys(doc, path, ("radius",))
        return {"radius": _positive(_number(doc.get("radius", 1.0), _join(path, "radius")), _join(path, "radius"))}
    if shape == "ellipse":
        doc = _check_keys(doc, path, ("a", "b"), ("a", "b"))
        return {k: _positive(_number(doc[k], _join(path, k)), _join(path, k)) for k in ("a", "b")}
    if shape == "fourier_perturbed_circle":
        doc = _check_keys(doc, path, ("radius", "modes"))
        radius = _positive(_number(doc.get("radius", 1.0), _join(path, "radius")), _join(path, "radius"))
        raw = doc.get("modes", [])
        if not isinstance(raw, list):
            raise ConfigError(_join(path, "modes"), "expected a list of [k, a_k] pairs")
        modes = []
        for i, m in enumerate(raw):
            mp = f"{_join(path, 'modes')}[{i}]"
            if not isinstance(m, (list, tuple)) or len(m) != 2:
                raise ConfigError(mp, "expected a [k, a_k] pair")
            k = _integer(m[0], mp + "[0]")
            if k < 1:
                raise ConfigError(mp + "[0]", "mode number must be >= 1")
            modes.append((k, _number(m[1], mp + "[1]")))
        if sum(abs(a) for _, a in modes) >= radius:
            raise ConfigError(_join(path, "modes"), "perturbation amplitude must stay below radius")
        return {"radius": radius, "modes": tuple(modes)}
    doc = _check_keys(doc, path, ("path",), ("path",))
    if not isinstance(doc["path"], str):
        raise ConfigError(_join(path, "path"), "expected a file path")
    p = Path(doc["path"])
    if not p.is_absolute():
        p = (base_dir / p).resolve()
    return {"path": str(p)}


def _patch(doc: Any, path: str, base_dir: Path) -> PatchSpec:
    allowed = ("shape", "params", "center", "rotation", "orientation", "theta_in", "theta_out", "prefactor")
    doc = _check_keys(doc, path, allowed, ("shape",))
    shape = _choice(doc["shape"], _join(path, "shape"), SHAPES)
    params = _shape_params(shape, doc.get("params"), _join(path, "params"), base_dir)
    center = doc.get("center", [0.0, 0.0])
    if not isinstance(center, list) or len(center) != 2:
        raise ConfigError(_join(path, "center"), "expected [x, y]")
    center = tuple(_number(c, f"{_join(path, 'center')}[{i}]") for i, c in enumerate(center))
    theta_in = _number(doc.get("theta_in", 1.0), _join(path, "theta_in"))
    theta_out = _number(doc.get("theta_out", 0.0), _join(path, "theta_out"))
    return PatchSpec(
        shape=shape,
        params=params,
        center=center,
        rotation=_number(doc.get("rotation", 0.0), _join(path, "rotation")),
        orientation=_choice(doc.get("orientation", "ccw"), _join(path, "orientation"), ("ccw", "cw")),
        theta_in=theta_in,
        theta_out=theta_out,
        prefactor=_number(doc.get("prefactor"), _join(path, "prefactor"), allow_none=True),
    )


_CTRL_INT = ("record_every", "snapshot_every")
_CTRL_OPTIONAL = ("reuniformize_threshold", "stiffness_safety")


def _ctrl(doc: Any, path: str) -> StepControl:
    names = tuple(f.name for f in fields(StepControl))
    doc = _check_keys(doc, path, names, ("t_end",))
    kwargs = {}
    for name, value in doc.items():
        p = _join(path, name)
        if name in _CTRL_INT:
            kwargs[name] = _integer(value, p)
        else:
            kwargs[name] = _number(value, p, allow_none=name in _CTRL_OPTIONAL)
    try:
        return StepControl(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def parse_config(source: str | dict, base_dir: str | Path = ".") -> RunConfig:
    """Validate a YAML document (text or already-loaded mapping) into a RunConfig.

    Raises ConfigError with the dotted key path of the first problem found.
    """
    base_dir = Path(base_dir)
    doc = load_yaml(source) if isinstance(source, str) else source
    allowed = ("alpha", "N", "scheme", "quadrature", "output_dir", "patches", "reg", "ctrl", "tangential")
    doc = _check_keys(doc, "", allowed, ("alpha", "N", "patches", "ctrl"))

    alpha = _number(doc["alpha"], "alpha")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("alpha", f"must lie in (0, 1], got {alpha}")
    N = _integer(doc["N"], "N")
    if N < 8 or N % 2:
        raise ConfigError("N", f"must be even and >= 8, got {N}")

    scheme = _choice(doc.get("scheme", "auto"), "scheme", SCHEME_CHOICES)
    if scheme == "auto":
        scheme = "qg_with_lambda" if alpha == 1.0 else "alpha_lt1"
    if scheme == "qg_with_lambda" and alpha != 1.0:
        raise ConfigError("scheme", f"qg_with_lambda requires alpha = 1, got alpha = {alpha}")
    quadrature = _choice(doc.get("quadrature", "spectral"), "quadrature", ("spectral", "trapezoid"))

    output_dir = doc.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a path")

    raw_patches = doc["patches"]
    if not isinstance(raw_patches, list) or not raw_patches:
        raise ConfigError("patches", "expected a non-empty list")
    patches = tuple(_patch(p, f"patches[{i}]", base_dir) for i, p in enumerate(raw_patches))

    reg_doc = _check_keys(doc.get("reg"), "reg", ("epsilon", "delta", "mollifier_kind"))
    eps = _number(reg_doc.get("epsilon", 0.0), "reg.epsilon")
    delta = _number(reg_doc.get("delta", 0.0), "reg.delta")
    for name, v in (("epsilon", eps), ("delta", delta)):
        if v < 0:
            raise ConfigError(f"reg.{name}", "must be non-negative")
    kind = _choice(
        reg_doc.get("mollifier_kind", "fourier_cutoff"), "reg.mollifier_kind", ("fourier_cutoff", "periodic_gaussian")
    )
    reg = RegularizationSpec(epsilon=eps, delta=delta, mollifier_kind=kind)

    ctrl = _ctrl(doc["ctrl"], "ctrl")
    tan_doc = _check_keys(doc.get("tangential"), "tangential", ("switch_threshold",))
    switch = _number(tan_doc.get("switch_threshold", UNIFORM_SWITCH), "tangential.switch_threshold")
    _positive(switch, "tangential.switch_threshold")

    return RunConfig(
        alpha=alpha,
        N=N,
        patches=patches,
        ctrl=ctrl,
        scheme=scheme,
        quadrature=quadrature,
        reg=reg,
        lambda_switch=switch,
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


# ---------------------------------------------------------------- initial data


def build_curve(patch: PatchSpec, N: int, path: str = "patch") -> ClosedCurve:
    """Nodes of one patch: shape, then rotation, translation and orientation."""
    g = parameter_grid(N)
    prm = patch.params
    if patch.shape == "circle":
        pts = prm["radius"] * np.stack([np.cos(g), np.sin(g)], axis=1)
    elif patch.shape == "ellipse":
        pts = np.stack([prm["a"] * np.cos(g), prm["b"] * np.sin(g)], axis=1)
    elif patch.shape == "fourier_perturbed_circle":
        r = np.full(N, prm["radius"])
        for k, a in prm["modes"]:
            r = r + a * np.cos(k * g)
        pts = np.stack([r * np.cos(g), r * np.sin(g)], axis=1)
    else:
        try:
            curve = read_curve_csv(prm["path"])
        except (OSError, CurveError, ValueError) as exc:
            raise ConfigError(f"{path}.params.path", str(exc)) from None
        if curve.N != N:
            raise ConfigError(f"{path}.params.path", f"file has {curve.N} nodes but N = {N}")
        pts = curve.nodes.copy()
    c, s = math.cos(patch.rotation), math.sin(patch.rotation)
    pts = pts @ np.array([[c, s], [-s, c]]) + np.asarray(patch.center)
    if patch.orientation == "cw":
        # x(-gamma): node j takes the value at index -j mod N
        pts = pts[(-np.arange(N)) % N]
    return ClosedCurve(pts)


def build_state(cfg: RunConfig) -> SimState:
    patches = []
    for i, patch in enumerate(cfg.patches):
        curve = build_curve(patch, cfg.N, f"patches[{i}]")
        pc = PatchConfig(cfg.alpha, patch.theta_in, patch.theta_out, patch.prefactor)
        patches.append((curve, pc))
    return SimState(
        0.0,
        patches,
        scheme=cfg.scheme,
        reg=cfg.reg,
        quadrature=cfg.quadrature,
        lambda_switch=cfg.lambda_switch,
    )


def set_path(doc: dict, dotted: str, value: Any) -> dict:
    """Copy of ``doc`` with the value at ``a.b[2].c`` (or ``a.b.2.c``) replaced."""
    import copy

    out = copy.deepcopy(doc)
    parts = [p for p in re.split(r"\.|\[(\d+)\]", dotted) if p]
    if not parts:
        raise ConfigError(dotted, "empty parameter path")
    node = out
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        where = ".".join(parts[: i + 1])
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                raise ConfigError(where, "index out of range")
            key: Any = int(part)
        elif isinstance(node, dict):
            key = part
            if not last and key not in node:
                raise ConfigError(where, "no such section")
        else:
            raise ConfigError(where, "cannot descend into a scalar")
        if last:
            node[key] = value
        else:
            node = node[key]
    return out
