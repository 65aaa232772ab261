"""Experiment presets, TOML configuration and initial data."""

import copy
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np
import toml  # type: ignore

from sgflow.constants import (
    FORM_TRIPLE,
    BoundaryCondition,
    Form,
    GraphKind,
    Modulation,
    NoiseKind,
    Variant,
)
from sgflow.drift import DriftOperator
from sgflow.evolve import SolverConfig
from sgflow.graphs import ScalarGraph
from sgflow.noise import DiffusionCoefficient, NoiseSpec
from sgflow.spectral import GridDomain, SpectralSpace

logger = logging.getLogger("Presets")

INITIAL_KINDS = ("sine", "random", "step")


class ConfigError(ValueError):
    """
    Invalid configuration.

    Parameters
    ----------
    errors : List[str]
        One message per offending ``section.key``.
    """

    def __init__(self, errors: List[str]) -> None:
        """Initialize the error."""
        self.errors = list(errors)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class SpaceParams:
    """[space] section."""

    dim: int = 1
    n: int = 64
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    n_modes: Optional[int] = None

    def __post_init__(self) -> None:
        """Normalise enum fields."""
        self.bc = BoundaryCondition(self.bc)


@dataclass
class OperatorParams:
    """[operator] section."""

    form: Form = Form.DIVERGENCE
    graph: GraphKind = GraphKind.POWER
    p: float = 2.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        """Normalise enum fields."""
        self.form = Form(self.form)
        self.graph = GraphKind(self.graph)


@dataclass
class NoiseParams:
    """
    [noise] section.

    The noise kind follows from the variant; the Wiener parameters also define
    the multiplicative coefficient.
    """

    sigma: float = 0.0
    rho: float = 2.0
    rate: float = 0.0
    jump_modes: Tuple[int, ...] = (1,)
    jump_scale: float = 0.0
    modulation: Modulation = Modulation.CONSTANT
    a: float = 1.0
    b: float = 0.0
    clip: float = 1.0

    def __post_init__(self) -> None:
        """Normalise field types."""
        self.modulation = Modulation(self.modulation)
        self.jump_modes = tuple(int(m) for m in self.jump_modes)


@dataclass
class DiagnosticParams:
    """[diagnostics] section."""

    initial: str = "sine"
    initial_seed: int = 0
    master_seed: int = 0
    n_paths: int = 8
    alpha: Optional[float] = None
    decay_window: Tuple[float, float] = (1.0, 10.0)
    radii: Tuple[float, ...] = (0.01, 0.1, 1.0)
    pilot_paths: int = 8

    def __post_init__(self) -> None:
        """Normalise sequence fields."""
        self.decay_window = tuple(float(t) for t in self.decay_window)  # type: ignore
        self.radii = tuple(float(r) for r in self.radii)


@dataclass
class ExperimentPreset:
    """
    A named, validated experiment.

    Attributes
    ----------
    name : str
        Preset name.
    space : SpaceParams
        Grid and triple.
    operator : OperatorParams
        Drift.
    noise : NoiseParams
        Noise parameters for every variant.
    solver : SolverConfig
        Time stepping.
    diagnostics : DiagnosticParams
        Initial data, seeds and diagnostic parameters.
    variant : Variant
        Selected noise variant.
    variants : Tuple[Variant, ...]
        Variants this preset supports.
    """

    name: str
    space: SpaceParams
    operator: OperatorParams
    noise: NoiseParams
    solver: SolverConfig
    diagnostics: DiagnosticParams = field(default_factory=DiagnosticParams)
    variant: Variant = Variant.DETERMINISTIC
    variants: Tuple[Variant, ...] = (Variant.DETERMINISTIC,)

    def __post_init__(self) -> None:
        """Validate the preset."""
        self.variant = Variant(self.variant)
        self.variants = tuple(Variant(v) for v in self.variants)
        errors = validate(self)
        if errors:
            raise ConfigError(errors)

    def with_variant(self, variant: Union[Variant, str]) -> "ExperimentPreset":
        """
        Copy with another variant.

        Raises
        ------
        ConfigError
            If the preset does not support the variant.
        """
        return replace(copy.deepcopy(self), variant=Variant(variant))

    def with_overrides(self, **solver: Any) -> "ExperimentPreset":
        """Copy with solver fields replaced; None values are ignored."""
        updates = {k: v for k, v in solver.items() if v is not None}
        if not updates:
            return copy.deepcopy(self)
        try:
            new_solver = replace(self.solver, **updates)
        except ValueError as err:
            raise ConfigError([f"solver.{msg}" for msg in str(err).split("; ")]) from err
        return replace(copy.deepcopy(self), solver=new_solver)

    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary mirroring the TOML layout."""
        return {
            "name": self.name,
            "variant": self.variant.value,
            "variants": [v.value for v in self.variants],
            "space": _plain(asdict(self.space)),
            "operator": _plain(asdict(self.operator)),
            "noise": _plain(asdict(self.noise)),
            "solver": self.solver.to_dict(),
            "diagnostics": _plain(asdict(self.diagnostics)),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentPreset":
        """
        Build a preset from a dictionary, collecting every error.

        Raises
        ------
        ConfigError
            Listing every unknown or invalid ``section.key``.
        """
        errors: List[str] = []
        known = {"name", "variant", "variants", *_SECTIONS}
        for key in data:
            if key not in known:
                errors.append(f"{key}: unknown key")
        if "name" not in data:
            errors.append("name: missing")
        sections = {
            name: _parse_section(name, kind, data.get(name, {}), errors)
            for name, kind in _SECTIONS.items()
        }
        variant = _convert("variant", Variant, data.get("variant", "deterministic"), errors)
        variants = tuple(
            v
            for v in (
                _convert("variants", Variant, x, errors)
                for x in data.get("variants", [variant or "deterministic"])
            )
            if v is not None
        )
        solver = None
        if sections["solver"] is not None and {"dt", "horizon"} <= set(sections["solver"]):
            try:
                solver = SolverConfig(**sections["solver"])
            except (TypeError, ValueError) as err:
                errors.extend(f"solver.{msg}" for msg in str(err).split("; "))
        if errors:
            raise ConfigError(errors)
        return cls(
            name=str(data["name"]),
            space=SpaceParams(**sections["space"]),
            operator=OperatorParams(**sections["operator"]),
            noise=NoiseParams(**sections["noise"]),
            solver=solver,  # type: ignore
            diagnostics=DiagnosticParams(**sections["diagnostics"]),
            variant=variant,  # type: ignore
            variants=variants,
        )


_SECTIONS: Dict[str, Type[Any]] = {
    "space": SpaceParams,
    "operator": OperatorParams,
    "noise": NoiseParams,
    "solver": SolverConfig,
    "diagnostics": DiagnosticParams,
}


def _tuple_of(kind: Callable[[Any], Any]) -> Callable[[Any], Tuple[Any, ...]]:
    def convert(value: Any) -> Tuple[Any, ...]:
        if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
            raise TypeError("expected a list")
        return tuple(kind(v) for v in value)

    return convert


def _optional(kind: Callable[[Any], Any]) -> Callable[[Any], Any]:
    return lambda value: None if value is None else kind(value)


# per-key converters of every section
_CONVERTERS: Dict[str, Dict[str, Callable[[Any], Any]]] = {
    "space": {"dim": int, "n": int, "bc": BoundaryCondition, "n_modes": _optional(int)},
    "operator": {"form": Form, "graph": GraphKind, "p": float, "delta": float},
    "noise": {
        "sigma": float,
        "rho": float,
        "rate": float,
        "jump_modes": _tuple_of(int),
        "jump_scale": float,
        "modulation": Modulation,
        "a": float,
        "b": float,
        "clip": float,
    },
    "solver": {
        "dt": float,
        "horizon": float,
        "eps": float,
        "delta": float,
        "m": _optional(int),
        "picard_window": _optional(float),
        "picard_tol": float,
        "picard_max_sweeps": int,
        "extinction_threshold": float,
    },
    "diagnostics": {
        "initial": str,
        "initial_seed": int,
        "master_seed": int,
        "n_paths": int,
        "alpha": _optional(float),
        "decay_window": _tuple_of(float),
        "radii": _tuple_of(float),
        "pilot_paths": int,
    },
}


def _convert(key: str, kind: Callable[[Any], Any], value: Any, errors: List[str]) -> Any:
    try:
        return kind(value)
    except (TypeError, ValueError):
        errors.append(f"{key}: invalid value {value!r}")
        return None


def _parse_section(
    name: str, kind: Type[Any], values: Any, errors: List[str]
) -> Optional[Dict[str, Any]]:
    if not isinstance(values, dict):
        errors.append(f"{name}: expected a table")
        return None
    converters = _CONVERTERS[name]
    out: Dict[str, Any] = {}
    for key, value in values.items():
        if key not in converters:
            errors.append(f"{name}.{key}: unknown key")
            continue
        converted = _convert(f"{name}.{key}", converters[key], value, errors)
        if converted is not None or value is None:
            out[key] = converted
    if kind is SolverConfig:
        for required in ("dt", "horizon"):
            if required not in values:
                errors.append(f"solver.{required}: missing")
    return out


def _plain(data: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in data.items():
        if value is None:
            continue
        if hasattr(value, "value"):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def validate(preset: ExperimentPreset) -> List[str]:
    """Return one message per offending ``section.key``; empty when valid."""
    errors = []
    sp, op, nz, dg = preset.space, preset.operator, preset.noise, preset.diagnostics
    if sp.dim not in (1, 2):
        errors.append(f"space.dim: must be 1 or 2, got {sp.dim}")
    if sp.n < 2:
        errors.append(f"space.n: must be at least 2, got {sp.n}")
    full = sp.n**sp.dim - (1 if sp.bc == BoundaryCondition.NEUMANN_MEAN_ZERO else 0)
    if sp.n_modes is not None and not 1 <= sp.n_modes <= full:
        errors.append(f"space.n_modes: must lie in [1, {full}], got {sp.n_modes}")
    if op.graph == GraphKind.POWER and not 1.0 <= op.p <= 2.0:
        errors.append(f"operator.p: must lie in [1, 2], got {op.p}")
    if op.delta < 0:
        errors.append(f"operator.delta: must be nonnegative, got {op.delta}")
    for key in ("sigma", "rate", "jump_scale"):
        if getattr(nz, key) < 0:
            errors.append(f"noise.{key}: must be nonnegative, got {getattr(nz, key)}")
    if nz.modulation == Modulation.AFFINE_CLIPPED and nz.clip <= 0:
        errors.append(f"noise.clip: must be positive, got {nz.clip}")
    modes = sp.n_modes or full
    if any(not 1 <= m <= modes for m in nz.jump_modes):
        errors.append(f"noise.jump_modes: must lie in [1, {modes}], got {list(nz.jump_modes)}")
    critical = 1.5 + sp.dim / 4.0
    if preset.variant in (Variant.ADDITIVE, Variant.MULTIPLICATIVE) and nz.rho <= critical:
        errors.append(
            f"noise.rho: {nz.rho} does not give S-regular paths (needs > {critical})"
        )
    if preset.variant not in preset.variants:
        errors.append(
            f"variant: {preset.variant.value} is not supported by {preset.name} "
            f"({', '.join(v.value for v in preset.variants)})"
        )
    if preset.solver.m is not None and preset.solver.m > modes:
        errors.append(f"solver.m: must be at most {modes}, got {preset.solver.m}")
    if dg.initial not in INITIAL_KINDS:
        errors.append(f"diagnostics.initial: must be one of {INITIAL_KINDS}, got {dg.initial}")
    if dg.n_paths < 1:
        errors.append(f"diagnostics.n_paths: must be positive, got {dg.n_paths}")
    if dg.pilot_paths < 1:
        errors.append(f"diagnostics.pilot_paths: must be positive, got {dg.pilot_paths}")
    if dg.alpha is not None and not 1.0 <= dg.alpha < 2.0:
        errors.append(f"diagnostics.alpha: must lie in [1, 2), got {dg.alpha}")
    if len(dg.decay_window) != 2 or not 0 < dg.decay_window[0] < dg.decay_window[1]:
        errors.append(f"diagnostics.decay_window: need 0 < t0 < t1, got {list(dg.decay_window)}")
    if any(r <= 0 for r in dg.radii):
        errors.append("diagnostics.radii: must be positive")
    return errors


def load_config(path: str) -> ExperimentPreset:
    """
    Load a preset from a TOML file.

    Raises
    ------
    ConfigError
        If the file cannot be parsed or holds invalid entries.
    """
    try:
        data = toml.load(path)
    except toml.TomlDecodeError as err:
        raise ConfigError([f"{path}: {err}"]) from err
    preset = ExperimentPreset.from_dict(data)
    logger.info(f"Loaded preset {preset.name} ({preset.variant.value}) from {path}")
    return preset


def save_config(preset: ExperimentPreset, path: str) -> None:
    """Write a preset as TOML."""
    with open(path, "w") as f:
        toml.dump(preset.to_dict(), f)
    logger.info(f"Wrote preset {preset.name} to {path}")


def build_space(preset: ExperimentPreset) -> SpectralSpace:
    """Spectral space of the preset; the triple follows from the form."""
    sp = preset.space
    grid = GridDomain(sp.dim, sp.n, sp.bc)
    return SpectralSpace(grid, FORM_TRIPLE[preset.operator.form], sp.n_modes)


def build_operator(
    preset: ExperimentPreset, space: Optional[SpectralSpace] = None
) -> DriftOperator:
    """Drift of the preset; δ is the larger of the operator and solver values."""
    space = space or build_space(preset)
    op = preset.operator
    graph = ScalarGraph(op.graph, op.p)
    delta = max(op.delta, preset.solver.delta)
    return DriftOperator(space, graph, op.form, delta)


def noise_spec(preset: ExperimentPreset) -> NoiseSpec:
    """Additive noise law of the selected variant."""
    nz = preset.noise
    if preset.variant == Variant.ADDITIVE:
        return NoiseSpec(NoiseKind.WIENER, sigma=nz.sigma, rho=nz.rho)
    if preset.variant == Variant.POISSON:
        return NoiseSpec(
            NoiseKind.POISSON,
            rate=nz.rate,
            jump_modes=nz.jump_modes,
            jump_scale=nz.jump_scale,
        )
    return NoiseSpec()


def build_coefficient(preset: ExperimentPreset, space: SpectralSpace) -> DiffusionCoefficient:
    """Multiplicative coefficient of the preset."""
    nz = preset.noise
    return DiffusionCoefficient(
        space,
        nz.sigma,
        nz.rho,
        modes=preset.solver.m,
        modulation=nz.modulation,
        a=nz.a,
        b=nz.b,
        clip=nz.clip,
    )


def initial_state(
    space: SpectralSpace, kind: str = "sine", seed: int = 0, amplitude: float = 1.0
) -> np.ndarray:
    """
    Initial data on the grid.

    Parameters
    ----------
    space : SpectralSpace
        The space.
    kind : str, optional
        ``sine`` (product of sin(π x_i)), ``random`` (uniform on [-1, 1]) or
        ``step`` (indicator of [1/4, 3/4]^dim), by default ``sine``.
    seed : int, optional
        Seed of ``random``, by default 0.
    amplitude : float, optional
        Scale factor, by default 1.

    Returns
    -------
    np.ndarray
        Grid vector, mean zero under NeumannMeanZero.

    Raises
    ------
    ValueError
        If kind is unknown.
    """
    coords = space.grid.coordinates()
    if kind == "sine":
        x = np.prod(np.sin(np.pi * coords), axis=1)
    elif kind == "random":
        x = np.random.default_rng(seed).uniform(-1.0, 1.0, space.size)
    elif kind == "step":
        inside = np.all((coords >= 0.25) & (coords <= 0.75), axis=1)
        x = inside.astype(float)
    else:
        raise ValueError(f"Unknown initial state {kind!r}; choose from {INITIAL_KINDS}.")
    return space.project_mean_zero(amplitude * x)


def build_initial(preset: ExperimentPreset, space: SpectralSpace) -> np.ndarray:
    """Initial state named by the preset."""
    dg = preset.diagnostics
    return initial_state(space, dg.initial, dg.initial_seed)


_ALL = (Variant.DETERMINISTIC, Variant.ADDITIVE, Variant.POISSON, Variant.MULTIPLICATIVE)
_DET_ADD = (Variant.DETERMINISTIC, Variant.ADDITIVE)


def _one_dim(
    name: str,
    form: Form,
    graph: GraphKind,
    p: float = 2.0,
    n: int = 128,
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET,
    dt: float = 1e-3,
    horizon: float = 0.1,
    variants: Tuple[Variant, ...] = _ALL,
    **diagnostics: Any,
) -> ExperimentPreset:
    return ExperimentPreset(
        name=name,
        space=SpaceParams(1, n, bc),
        operator=OperatorParams(form, graph, p),
        noise=NoiseParams(
            sigma=10.0,
            rho=2.0,
            rate=2.0,
            jump_modes=(1, 2),
            jump_scale=0.1,
            modulation=Modulation.SATURATING,
        ),
        solver=SolverConfig(dt=dt, horizon=horizon),
        diagnostics=DiagnosticParams(**diagnostics),
        variants=variants,
    )


def _catalogue() -> Dict[str, ExperimentPreset]:
    presets = [
        _one_dim("tvflow_1d", Form.DIVERGENCE, GraphKind.POWER, p=1.0, n=256, horizon=0.2),
        ExperimentPreset(
            name="tvflow_2d",
            space=SpaceParams(2, 48),
            operator=OperatorParams(Form.DIVERGENCE, GraphKind.POWER, 1.0),
            noise=NoiseParams(sigma=100.0, rho=2.5),
            solver=SolverConfig(dt=1e-3, horizon=0.05),
            variants=_DET_ADD,
        ),
        _one_dim(
            "fastdiff_1d",
            Form.DIFFUSION,
            GraphKind.POWER,
            p=1.5,
            dt=5e-4,
            horizon=0.4,
            variants=(Variant.DETERMINISTIC, Variant.ADDITIVE, Variant.POISSON),
            alpha=1.5,
        ),
        _one_dim(
            "fastdiff_1d_p1",
            Form.DIFFUSION,
            GraphKind.POWER,
            p=1.0,
            dt=5e-4,
            horizon=0.4,
            variants=(Variant.DETERMINISTIC, Variant.ADDITIVE, Variant.POISSON),
            alpha=1.0,
        ),
        ExperimentPreset(
            name="plasma_2d",
            space=SpaceParams(2, 48),
            operator=OperatorParams(Form.DIFFUSION, GraphKind.LOG_PLASMA),
            noise=NoiseParams(sigma=100.0, rho=2.5),
            solver=SolverConfig(dt=0.05, horizon=10.0),
            diagnostics=DiagnosticParams(initial="random", radii=(0.01, 0.1, 1.0)),
            variants=_DET_ADD,
        ),
        _one_dim("curveshort_1d", Form.DIVERGENCE, GraphKind.ARCTAN),
        _one_dim("msf_1d", Form.DIVERGENCE, GraphKind.MINIMAL_SURFACE),
        _one_dim("pshear_1d", Form.DIVERGENCE, GraphKind.PLASTIC_SHEAR),
        _one_dim(
            "neumann_plap_1d",
            Form.DIVERGENCE,
            GraphKind.POWER,
            p=1.5,
            bc=BoundaryCondition.NEUMANN_MEAN_ZERO,
            variants=_DET_ADD,
        ),
    ]
    return {p.name: p for p in presets}


PRESETS = _catalogue()


def list_presets() -> List[str]:
    """Names of the shipped presets."""
    return list(PRESETS)


def get_preset(name: str, variant: Optional[Union[Variant, str]] = None) -> ExperimentPreset:
    """
    A copy of a shipped preset.

    Raises
    ------
    ConfigError
        If the name is unknown or the variant is not supported.
    """
    if name not in PRESETS:
        raise ConfigError([f"name: unknown preset {name!r}; choose from {list_presets()}"])
    preset = copy.deepcopy(PRESETS[name])
    if variant is not None:
        preset = preset.with_variant(variant)
    return preset


def build_all(
    preset: ExperimentPreset,
) -> Tuple[SpectralSpace, DriftOperator, np.ndarray]:
    """Space, drift and initial state of a preset."""
    space = build_space(preset)
    return space, build_operator(preset, space), build_initial(preset, space)


def sample_states(
    space: SpectralSpace, n: int, seed: int, radius: float = 1.0
) -> np.ndarray:
    """
    Random grid vectors with H-norm at most ``radius``.

    Low modes are weighted more heavily so the samples resemble smooth data.
    """
    rng = np.random.default_rng(seed)
    k = space.n_modes
    coef = rng.standard_normal((n, k)) / (1.0 + np.arange(k))
    out = coef @ space.eigenvectors.T
    hw = space.h_weights
    norms = np.sqrt((coef * coef) @ hw)
    scale = radius * rng.uniform(0.0, 1.0, n) / np.where(norms > 0, norms, 1.0)
    return out * scale[:, None]


__all__: Sequence[str] = (
    "ConfigError",
    "ExperimentPreset",
    "PRESETS",
    "build_all",
    "build_coefficient",
    "build_initial",
    "build_operator",
    "build_space",
    "get_preset",
    "initial_state",
    "list_presets",
    "load_config",
    "noise_spec",
    "sample_states",
    "save_config",
)
