"""Run-configuration files.

Line-oriented format: ``[section]`` headers, ``key = value`` pairs, UTF-8,
``#`` comments.  Unknown sections and keys are rejected, not ignored, and
every diagnostic carries the offending line.  The canonical digest is stable
under comments, whitespace and reordering, and changes with any value.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..equations import ADVECTION, BURGERS, EULER, EquationModel
from ..errors import ConfigError, ConslawError, ExprError
from ..grid import BoundaryKind, GridSpec
from ..numerics import FluxKind, Reconstruction, ReconstructionKind
from ..solver import SchemeConfig, check_scheme
from .expr import eval_init, max_random_index, parse_expr

_SECTIONS = ("grid", "scheme", "initial", "parallel", "uq", "output")

_KEYS = {
    "grid": {"dim", "cells", "origin", "extent"},
    "scheme": {
        "equation", "gamma", "advection_speed", "flux", "reconstruction",
        "weno_epsilon", "rk_order", "cfl", "t_end", "boundary",
    },
    "initial": {
        "variables", "rho", "vx", "vy", "vz", "p", "u",
        "mx", "my", "mz", "E",
    },
    "parallel": {"ranks"},
    "uq": {
        "method", "samples", "seed", "stochastic_dim", "workers",
        "levels", "level_samples", "functionals",
        "histogram_component", "histogram_points", "histogram_range",
        "histogram_bins",
        "structure_p", "structure_max_offset", "structure_component",
    },
    "output": {"directory", "snapshot_times", "formats"},
}

_FUNCTIONAL_NAMES = ("moments", "histogram", "structure_function")


@dataclass
class UqSettings:
    method: str = "mc"
    samples: int = 1
    seed: int = 0
    stochastic_dim: int = 1
    workers: int = 1
    levels: int = 1
    level_samples: tuple = ()
    functionals: tuple = ("moments",)
    histogram_component: int = 0
    histogram_points: tuple = ()
    histogram_range: tuple = (0.0, 1.0)
    histogram_bins: int = 64
    structure_p: float = 2.0
    structure_max_offset: int = 8
    structure_component: int = 0


@dataclass
class OutputSettings:
    directory: str = "out"
    snapshot_times: tuple = ()
    formats: tuple = ("snapshot",)


@dataclass
class RunConfig:
    grid: GridSpec
    scheme: SchemeConfig
    initial_exprs: tuple
    initial_primitive: bool
    ranks_per_axis: tuple
    uq: UqSettings
    has_uq_section: bool
    output: OutputSettings
    digest: str
    text: str


def canonical_digest(text: str) -> str:
    """SHA-256 of the canonicalized config: sections and keys sorted, values
    whitespace-normalized, comments dropped."""
    sections = _parse_sections(text)
    pieces = []
    for name in sorted(sections):
        pieces.append(f"[{name}]")
        entries, _ = sections[name]
        for key in sorted(entries):
            value, _line = entries[key]
            pieces.append(f"{key} = {' '.join(value.split())}")
    canon = "\n".join(pieces) + "\n"
    return hashlib.sha256(canon.encode()).hexdigest()


def _parse_sections(text: str):
    sections: dict[str, tuple[dict, int]] = {}
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", line=lineno)
            name = line[1:-1].strip()
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", line=lineno)
            current = {}
            sections[name] = (current, lineno)
        else:
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"expected 'key = value', found {line!r}", line=lineno)
            if current is None:
                raise ConfigError("key outside any [section]", line=lineno)
            key = key.strip()
            if key in current:
                raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
            current[key] = (value.strip(), lineno)
    return sections


class _Section:
    def __init__(self, name: str, entries: dict):
        self.name = name
        self.entries = entries

    def has(self, key: str) -> bool:
        return key in self.entries

    def raw(self, key: str, default=None):
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}", key=key)
            return default, None
        return self.entries[key]

    def _convert(self, key, conv, default, what):
        value, line = self.raw(key, default)
        if line is None:
            return value
        try:
            return conv(value)
        except (ValueError, TypeError):
            raise ConfigError(
                f"{key!r} must be {what}, got {value!r}", line=line, key=key
            ) from None

    def int(self, key, default=None):
        return self._convert(key, int, default, "an integer")

    def float(self, key, default=None):
        return self._convert(key, float, default, "a number")

    def floats(self, key, default=None):
        return self._convert(
            key, lambda v: tuple(float(x) for x in v.replace(",", " ").split()),
            default, "a list of numbers",
        )

    def ints(self, key, default=None):
        return self._convert(
            key, lambda v: tuple(int(x) for x in v.replace(",", " ").split()),
            default, "a list of integers",
        )

    def choice(self, key, choices, default=None):
        value, line = self.raw(key, default)
        if line is None:
            return value
        if value not in choices:
            raise ConfigError(
                f"{key!r} must be one of {sorted(choices)}, got {value!r}",
                line=line, key=key,
            )
        return value

    def words(self, key, default=None):
        return self._convert(
            key, lambda v: tuple(x for x in v.replace(",", " ").split()),
            default, "a list of words",
        )


def _check_known(sections) -> None:
    for name, (entries, line) in sections.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", line=line)
        for key, (_value, kline) in entries.items():
            if key not in _KEYS[name]:
                raise ConfigError(
                    f"unknown key {key!r} in [{name}]", line=kline, key=key
                )


def _section(sections, name) -> _Section:
    entries, _line = sections.get(name, ({}, None))
    return _Section(name, entries)


def _build_model(scheme: _Section, dim: int) -> EquationModel:
    kind = scheme.choice("equation", (EULER, BURGERS, ADVECTION), EULER)
    gamma = scheme.float("gamma", 1.4)
    speed = scheme.floats("advection_speed", (1.0,) * dim)
    if kind != ADVECTION and scheme.has("advection_speed"):
        _value, line = scheme.raw("advection_speed")
        raise ConfigError(
            "advection_speed only applies to the advection equation", line=line
        )
    return EquationModel(
        kind, dim, gamma=gamma, advection_speed=speed if kind == ADVECTION else ()
    )


def _build_initial(initial: _Section, model: EquationModel):
    variables = initial.choice("variables", ("primitive", "conserved", "scalar"),
                               "primitive" if model.kind == EULER else "scalar")
    if model.kind == EULER:
        if variables == "scalar":
            raise ConfigError("Euler initial data cannot use scalar variables")
        if variables == "primitive":
            keys = ("rho",) + tuple(f"v{'xyz'[k]}" for k in range(model.dim)) + ("p",)
        else:
            keys = model.component_names
    else:
        keys = ("u",)
    exprs = []
    for key in keys:
        value, line = initial.raw(key, default=None) if initial.has(key) else (None, None)
        if value is None:
            raise ConfigError(f"[initial] is missing component {key!r}", key=key)
        try:
            exprs.append(parse_expr(value))
        except ExprError as exc:
            raise ConfigError(f"in expression for {key!r}: {exc}", line=line, key=key)
    return tuple(exprs), variables != "conserved"


def _spot_check_initial(exprs, model, grid, stochastic_dim, primitive) -> None:
    """Evaluate the initial data for a few corner random vectors."""
    for fill in (0.0, 0.5, 0.999):
        vector = (fill,) * stochastic_dim
        try:
            eval_init(exprs, model, grid, vector, primitive=primitive)
        except ConslawError as exc:
            raise ConfigError(f"initial data fails validation: {exc}") from exc


def _build_uq(uq: _Section, grid: GridSpec, model, present: bool) -> UqSettings:
    settings = UqSettings(
        method=uq.choice("method", ("mc", "qmc"), "mc"),
        samples=uq.int("samples", 1),
        seed=uq.int("seed", 0),
        stochastic_dim=uq.int("stochastic_dim", 1),
        workers=uq.int("workers", 1),
        levels=uq.int("levels", 1),
        functionals=tuple(uq.words("functionals", ("moments",))),
        histogram_component=uq.int("histogram_component", 0),
        histogram_bins=uq.int("histogram_bins", 64),
        structure_p=uq.float("structure_p", 2.0),
        structure_max_offset=uq.int("structure_max_offset", 8),
        structure_component=uq.int("structure_component", 0),
    )
    if settings.samples < 1:
        raise ConfigError("sample count must be >= 1")
    if settings.workers < 1:
        raise ConfigError("worker count must be >= 1")
    for f in settings.functionals:
        if f not in _FUNCTIONAL_NAMES:
            raise ConfigError(
                f"unknown functional {f!r} (choose from {_FUNCTIONAL_NAMES})"
            )
    if uq.has("level_samples"):
        settings.level_samples = uq.ints("level_samples")
    else:
        settings.level_samples = (settings.samples,) * settings.levels
    if settings.levels < 1:
        raise ConfigError("levels must be >= 1")
    if len(settings.level_samples) != settings.levels:
        raise ConfigError(
            f"level_samples needs {settings.levels} entries, "
            f"got {len(settings.level_samples)}"
        )
    factor = 2 ** (settings.levels - 1)
    for axis, n in enumerate(grid.cells):
        if n % factor != 0:
            raise ConfigError(
                f"{n} cells on axis {axis} cannot be coarsened "
                f"{settings.levels - 1} times"
            )
    if uq.has("histogram_range"):
        rng = uq.floats("histogram_range")
        if len(rng) != 2 or rng[1] <= rng[0]:
            raise ConfigError(f"histogram_range must be 'lo hi' with lo < hi, got {rng}")
        settings.histogram_range = (rng[0], rng[1])
    if uq.has("histogram_points"):
        value, line = uq.raw("histogram_points")
        points = []
        for part in value.split(";"):
            coords = tuple(float(x) for x in part.replace(",", " ").split())
            if len(coords) != grid.dim:
                raise ConfigError(
                    f"histogram point {part.strip()!r} needs {grid.dim} coordinates",
                    line=line,
                )
            points.append(coords)
        settings.histogram_points = tuple(points)
    return settings


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration; raises ConfigError with the
    offending line on any problem."""
    sections = _parse_sections(text)
    _check_known(sections)

    grid_s = _section(sections, "grid")
    cells = grid_s.ints("cells")
    dim = grid_s.int("dim", len(cells))
    if dim != len(cells):
        _value, line = grid_s.raw("dim")
        raise ConfigError(
            f"dim = {dim} does not match {len(cells)} cell counts", line=line
        )
    origin = grid_s.floats("origin", (0.0,) * dim)
    extent = grid_s.floats("extent", (1.0,) * dim)

    scheme_s = _section(sections, "scheme")
    model = _build_model(scheme_s, dim)
    flux_name = scheme_s.choice("flux", ("rusanov", "hllc"), "rusanov")
    flux = FluxKind(flux_name)
    if flux is FluxKind.HLLC and model.kind != EULER:
        _value, line = scheme_s.raw("flux")
        raise ConfigError("flux incompatible with equation: hllc needs euler", line=line)
    recon_name = scheme_s.choice("reconstruction", ("none", "weno2", "weno3"), "none")
    recon = Reconstruction(
        ReconstructionKind(recon_name), scheme_s.float("weno_epsilon", 1e-6)
    )
    bc_words = scheme_s.words("boundary", ("periodic",))
    if len(bc_words) == 1:
        bc_words = bc_words * dim
    if len(bc_words) != dim:
        _value, line = scheme_s.raw("boundary")
        raise ConfigError(f"boundary needs 1 or {dim} entries", line=line)
    try:
        bc = tuple(BoundaryKind(w) for w in bc_words)
    except ValueError:
        _value, line = scheme_s.raw("boundary")
        raise ConfigError(f"boundary entries must be periodic/outflow, got {bc_words}",
                          line=line) from None

    grid = GridSpec(dim, cells, origin, extent, ghost_width=max(recon.radius, 1))
    scheme = SchemeConfig(
        model=model,
        flux=flux,
        recon=recon,
        rk_order=scheme_s.int("rk_order", 2),
        cfl=scheme_s.float("cfl", 0.475),
        t_end=scheme_s.float("t_end", 1.0),
        bc=bc,
    )
    check_scheme(grid, scheme)

    initial_s = _section(sections, "initial")
    if not initial_s.entries:
        raise ConfigError("missing [initial] section with the initial data")
    exprs, primitive = _build_initial(initial_s, model)

    parallel_s = _section(sections, "parallel")
    ranks = parallel_s.ints("ranks", (1,) * dim)
    if len(ranks) != dim:
        _value, line = parallel_s.raw("ranks")
        raise ConfigError(f"ranks needs {dim} entries", line=line)
    for axis, (n, r) in enumerate(zip(cells, ranks)):
        if r < 1 or n % r != 0:
            raise ConfigError(
                f"{n} cells on axis {axis} not divisible into {r} ranks"
            )

    uq_s = _section(sections, "uq")
    uq = _build_uq(uq_s, grid, model, "uq" in sections)

    needed = 1 + max(max_random_index(e) for e in exprs)
    if needed > uq.stochastic_dim:
        raise ConfigError(
            f"initial data uses random symbol X{needed - 1} but stochastic_dim "
            f"is {uq.stochastic_dim}"
        )
    _spot_check_initial(exprs, model, grid, uq.stochastic_dim, primitive)

    output_s = _section(sections, "output")
    output = OutputSettings(
        directory=output_s.raw("directory", "out")[0],
        snapshot_times=output_s.floats("snapshot_times", ()),
        formats=tuple(output_s.words("formats", ("snapshot",))),
    )

    return RunConfig(
        grid=grid,
        scheme=scheme,
        initial_exprs=exprs,
        initial_primitive=primitive,
        ranks_per_axis=ranks,
        uq=uq,
        has_uq_section="uq" in sections,
        output=output,
        digest=canonical_digest(text),
        text=text,
    )
