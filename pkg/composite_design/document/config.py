"""Run configuration: line-based key = value files for the command-line tool."""

from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple
import math

import numpy as np

from ..core.geometry.base import DomainSpec
from ..core.geometry.types import GeometryError, ShapeType
from ..material.base import MaterialModel
from ..material.types import MaterialError
from ..solver.types import SolveConfig


class ConfigError(Exception):
    """Error raised for an invalid run configuration.

    Attributes:
        key: The offending configuration key, when there is one.
    """

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


REQUIRED_KEYS = ("alpha", "beta", "p", "kappa", "domain", "h", "f")
OPTIONAL_KEYS = ("newton_tol", "stall_tol", "max_iter", "armijo_c", "hessian_floor",
                 "eps_schedule", "vol_tol", "restarts", "levels", "deltas", "epsilons", "seed",
                 "threads", "band", "r_exp", "vtk", "iteration_log")

# Names visible to load expressions.
_EXPRESSION_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "arctan2", "sinh",
                 "cosh", "tanh", "minimum", "maximum", "where", "pi", "hypot")
}


@dataclass(frozen=True)
class LoadSpec:
    """Load given as a constant or as a numpy expression in x and y."""
    kind: str
    value: float = 0.0
    expression: str = ""

    @property
    def is_constant(self) -> bool:
        return self.kind == "const"

    def function(self) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        """Vectorized load f(x, y)."""
        if self.is_constant:
            return lambda x, y: np.full_like(np.asarray(x, dtype=float), self.value)
        code = compile(self.expression, "<load>", "eval")

        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            namespace = dict(_EXPRESSION_NAMESPACE, x=x, y=np.asarray(y, dtype=float))
            result = eval(code, {"__builtins__": {}}, namespace)
            return np.broadcast_to(np.asarray(result, dtype=float), x.shape).copy()
        return evaluate

    def describe(self) -> str:
        return f"const {self.value!r}" if self.is_constant else f"expr {self.expression}"


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one command-line run.

    Attributes:
        domain: Domain with the mesh size as target_h.
        model: Material numbers.
        load: Load specification.
        solve: Newton and design-loop settings.
        restarts: Random restarts of the dual check.
        levels: Refinement levels of the diagnose command.
        deltas: Cube sizes of the laminate table.
        epsilons: Laminate periods of the laminate table.
        seed: Seed for random restarts.
        band: Band of the intermediate-design diagnostics.
        r_exp: Exponent of the flux H^1 diagnostic.
        vtk: Whether to export the fields as VTK.
        iteration_log: Whether to write the Newton iteration log.
    """
    domain: DomainSpec
    model: MaterialModel
    load: LoadSpec
    solve: SolveConfig = field(default_factory=SolveConfig)
    restarts: int = 3
    levels: int = 3
    deltas: Tuple[float, ...] = (0.25,)
    epsilons: Tuple[float, ...] = (0.05, 0.025)
    seed: int = 0
    band: float = 0.01
    r_exp: float = 0.0
    vtk: bool = False
    iteration_log: bool = False

    @property
    def h(self) -> float:
        return self.domain.target_h

    def with_overrides(self, threads: Optional[int] = None,
                       seed: Optional[int] = None) -> "RunConfig":
        """Apply command-line overrides."""
        config = self
        if threads is not None:
            if threads < 1:
                raise ConfigError(f"must be at least 1, got {threads}", "threads")
            config = replace(config, solve=replace(config.solve, threads=threads))
        if seed is not None:
            config = replace(config, seed=seed)
        return config

    def check_area(self, area: float) -> None:
        """Check the budget against the area of the meshed domain.

        Raises:
            ConfigError: If kappa is not smaller than the area.
        """
        if not self.model.kappa < area:
            raise ConfigError(
                f"must be smaller than the domain area {area:.12g}, got {self.model.kappa}",
                "kappa")

    def to_dict(self) -> Dict[str, Any]:
        """Resolved configuration with every default filled in."""
        solve = asdict(self.solve)
        solve["eps_schedule"] = list(solve["eps_schedule"])
        return {
            "alpha": self.model.alpha,
            "beta": self.model.beta,
            "p": self.model.p,
            "kappa": self.model.kappa,
            "domain": {"shape": self.domain.shape.name.lower(),
                       "parameters": [float(v) for v in self.domain.parameters]},
            "h": self.h,
            "f": self.load.describe(),
            "solve": solve,
            "restarts": self.restarts,
            "levels": self.levels,
            "deltas": list(self.deltas),
            "epsilons": list(self.epsilons),
            "seed": self.seed,
            "band": self.band,
            "r_exp": self.r_exp,
            "vtk": self.vtk,
            "iteration_log": self.iteration_log,
        }


def _float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", key) from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {text!r}", key)
    return value


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None


def _bool(key: str, text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected true or false, got {text!r}", key)


def _floats(key: str, text: str) -> Tuple[float, ...]:
    items = text.replace(",", " ").split()
    if not items:
        raise ConfigError("expected at least one number", key)
    return tuple(_float(key, item) for item in items)


def _domain(text: str, h: float) -> DomainSpec:
    words = text.split()
    if not words:
        raise ConfigError("expected a shape name", "domain")
    if len(words) == 1:
        raise ConfigError(f"{words[0]} needs its parameters", "domain")
    shape, numbers = words[0].lower(), _floats("domain", " ".join(words[1:]))
    try:
        if shape == ShapeType.RECTANGLE.name.lower():
            if len(numbers) != 4:
                raise ConfigError("rectangle needs x0 x1 y0 y1", "domain")
            return DomainSpec.rectangle(*numbers, target_h=h)
        if shape == ShapeType.DISK.name.lower():
            if len(numbers) != 3:
                raise ConfigError("disk needs cx cy R", "domain")
            return DomainSpec.disk(*numbers, target_h=h)
        if shape == ShapeType.POLYGON.name.lower():
            if len(numbers) % 2:
                raise ConfigError("polygon needs x y pairs", "domain")
            return DomainSpec.polygon(list(zip(numbers[0::2], numbers[1::2])), target_h=h)
    except GeometryError as error:
        raise ConfigError(str(error), "domain") from None
    raise ConfigError(f"unknown shape {words[0]!r}; use rectangle, disk or polygon", "domain")


def _load(text: str) -> LoadSpec:
    kind, _, rest = text.partition(" ")
    rest = rest.strip()
    if kind == "const":
        return LoadSpec("const", value=_float("f", rest))
    if kind == "expr":
        if not rest:
            raise ConfigError("expr needs an expression in x and y", "f")
        load = LoadSpec("expr", expression=rest)
        try:
            sample = load.function()(np.array([0.25, 0.5]), np.array([0.5, 0.25]))
        except Exception as error:
            raise ConfigError(f"cannot evaluate {rest!r}: {error}", "f") from None
        if not np.all(np.isfinite(sample)):
            raise ConfigError(f"{rest!r} is not finite at sample points", "f")
        return load
    raise ConfigError(f"expected 'const <value>' or 'expr <expression>', got {text!r}", "f")


def _read_pairs(text: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ConfigError("unknown key", key)
        if key in pairs:
            raise ConfigError(f"duplicate key on line {number}", key)
        pairs[key] = value
    missing = [key for key in REQUIRED_KEYS if key not in pairs]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return pairs


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    The format is one ``key = value`` per line with ``#`` comments. Unknown
    keys, duplicates, malformed values and violated constraints are errors.

    Args:
        text: Configuration text.

    Returns:
        Validated RunConfig.

    Raises:
        ConfigError: Naming the offending key and the violated constraint.
    """
    pairs = _read_pairs(text)
    alpha, beta = _float("alpha", pairs["alpha"]), _float("beta", pairs["beta"])
    p, kappa = _float("p", pairs["p"]), _float("kappa", pairs["kappa"])
    if not alpha > 0:
        raise ConfigError(f"must be positive, got {alpha}", "alpha")
    if not alpha < beta:
        raise ConfigError(f"alpha < beta is required, got alpha={alpha}, beta={beta}", "alpha")
    if not p > 1:
        raise ConfigError(f"must be greater than 1, got {p}", "p")
    if not kappa > 0:
        raise ConfigError(f"must be positive, got {kappa}", "kappa")
    try:
        model = MaterialModel(alpha, beta, p, kappa)
    except MaterialError as error:
        raise ConfigError(str(error)) from None

    h = _float("h", pairs["h"])
    if not h > 0:
        raise ConfigError(f"must be positive, got {h}", "h")
    domain = _domain(pairs["domain"], h)

    solve_options: Dict[str, Any] = {}
    for key in ("newton_tol", "stall_tol", "armijo_c", "hessian_floor", "vol_tol"):
        if key in pairs:
            solve_options[key] = _float(key, pairs[key])
    for key in ("max_iter", "threads"):
        if key in pairs:
            solve_options[key] = _int(key, pairs[key])
    if "eps_schedule" in pairs:
        solve_options["eps_schedule"] = _floats("eps_schedule", pairs["eps_schedule"])
    try:
        solve = SolveConfig(**solve_options)
    except ValueError as error:
        raise ConfigError(str(error)) from None

    options: Dict[str, Any] = {}
    for key in ("restarts", "levels", "seed"):
        if key in pairs:
            options[key] = _int(key, pairs[key])
    for key in ("band", "r_exp"):
        if key in pairs:
            options[key] = _float(key, pairs[key])
    for key in ("deltas", "epsilons"):
        if key in pairs:
            options[key] = _floats(key, pairs[key])
    for key in ("vtk", "iteration_log"):
        if key in pairs:
            options[key] = _bool(key, pairs[key])

    config = RunConfig(domain, model, _load(pairs["f"]), solve, **options)
    _check_options(config)
    return config


def _check_options(config: RunConfig) -> None:
    if config.restarts < 0:
        raise ConfigError(f"must be non-negative, got {config.restarts}", "restarts")
    if config.levels < 1:
        raise ConfigError(f"must be at least 1, got {config.levels}", "levels")
    if not 0 < config.band < 0.5:
        raise ConfigError(f"must lie in (0, 1/2), got {config.band}", "band")
    if not config.r_exp > -0.5:
        raise ConfigError(f"must be greater than -1/2, got {config.r_exp}", "r_exp")
    if any(not d > 0 for d in config.deltas):
        raise ConfigError("cube sizes must be positive", "deltas")
    if any(not e > 0 for e in config.epsilons):
        raise ConfigError("laminate periods must be positive", "epsilons")
