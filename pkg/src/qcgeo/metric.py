"""Chart-defined Riemannian metrics: specification, compilation, evaluation.

A :class:`MetricSpec` is pure data (dimension, coordinate labels, a closed
box domain, and the upper triangle of g as expression strings).  Compiling
it parses every component and produces an immutable :class:`CompiledMetric`
whose evaluation returns the metric together with its coordinate derivatives
up to third order, batched over points.  Positive definiteness is checked at
every evaluated point against a scale-relative threshold.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import CompileError, DegenerateMetric, DomainError, QcgeoError
from .expr import (compile_program, eval_program_jet, eval_program_value,
                   max_var_index, parse_expr, to_source)

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = ["MetricSpec", "CompiledMetric", "compile_metric"]

# positive-definiteness threshold, relative to the largest diagonal entry
PD_RELATIVE_EPS = 1e-12


@dataclass(frozen=True)
class MetricSpec:
    """Symmetric metric on an n-dimensional chart, upper triangle only.

    ``components`` maps (i, j) with i <= j to expression source text; absent
    entries are structurally zero.  ``domain`` is one closed [lo, hi] pair
    per coordinate.
    """

    dimension: int
    components: dict = field(default_factory=dict)
    domain: tuple = ()
    names: tuple | None = None

    def __post_init__(self):
        if not 2 <= self.dimension <= 6:
            raise QcgeoError(f"dimension {self.dimension} outside 2..6")
        if len(self.domain) != self.dimension:
            raise QcgeoError("domain must give one [lo, hi] pair per coordinate")
        for lo, hi in self.domain:
            if not lo < hi:
                raise QcgeoError(f"empty domain interval [{lo}, {hi}]")
        for key in self.components:
            i, j = key
            if not (0 <= i <= j < self.dimension):
                raise QcgeoError(f"component key {key} not upper-triangular")
        if self.names is not None and len(self.names) != self.dimension:
            raise QcgeoError("coordinate name list has wrong length")

    # -- serialization ---------------------------------------------------------

    @staticmethod
    def from_toml(text: str) -> "MetricSpec":
        try:
            doc = _toml.loads(text)
        except _toml.TOMLDecodeError as err:
            raise CompileError([("toml", err)])
        try:
            dimension = int(doc["dimension"])
            domain = tuple((float(lo), float(hi)) for lo, hi in doc["domain"])
        except (KeyError, TypeError, ValueError) as err:
            raise CompileError([("header", err)])
        names = tuple(doc["coords"]) if "coords" in doc else None
        components = {}
        for key, src in doc.get("g", {}).items():
            if len(key) != 2 or not key.isdigit():
                raise CompileError(
                    [(key, QcgeoError("component keys look like '01'"))])
            i, j = int(key[0]), int(key[1])
            if i > j:
                raise CompileError(
                    [(key, QcgeoError("only upper-triangle entries accepted"))])
            components[(i, j)] = str(src)
        return MetricSpec(dimension, components, domain, names)

    def to_toml(self) -> str:
        lines = [f"dimension = {self.dimension}"]
        if self.names is not None:
            quoted = ", ".join(f'"{name}"' for name in self.names)
            lines.append(f"coords = [{quoted}]")
        pairs = ", ".join(f"[{lo!r}, {hi!r}]" for lo, hi in self.domain)
        lines.append(f"domain = [{pairs}]")
        lines.append("")
        lines.append("[g]")
        for (i, j) in sorted(self.components):
            lines.append(f'"{i}{j}" = "{self.components[(i, j)]}"')
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()


class CompiledMetric:
    """Immutable, evaluatable metric; safe to share across workers."""

    def __init__(self, spec: MetricSpec, programs: dict):
        self.spec = spec
        self.n = spec.dimension
        self._programs = programs  # {(i, j): instruction tuple}
        self._lo = np.array([lo for lo, _ in spec.domain])
        self._hi = np.array([hi for _, hi in spec.domain])

    # -- domain ----------------------------------------------------------------

    def check_domain(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.n:
            raise DomainError(
                f"points have {points.shape[-1]} coordinates, chart has {self.n}")
        bad = (points < self._lo) | (points > self._hi)
        if np.any(bad):
            flat = points.reshape(-1, self.n)
            idx = int(np.argmax(np.any(bad.reshape(-1, self.n), axis=-1)))
            raise DomainError(f"point {tuple(flat[idx])} outside the chart box")
        return points

    def sample_domain(self, count: int, rng, margin: float = 0.05):
        """Uniform interior samples; margin is a fraction of each side length."""
        span = self._hi - self._lo
        lo = self._lo + margin * span
        hi = self._hi - margin * span
        return lo + rng.random((count, self.n)) * (hi - lo)

    # -- evaluation --------------------------------------------------------------

    def g_values(self, points: np.ndarray) -> np.ndarray:
        points = self.check_domain(points)
        batch = points.shape[:-1]
        g = np.zeros(batch + (self.n, self.n))
        for (i, j), prog in self._programs.items():
            values = eval_program_value(prog, points)
            g[..., i, j] = values
            if i != j:
                g[..., j, i] = values
        self._check_positive_definite(g, points)
        return g

    def component_jets(self, points: np.ndarray):
        """Evaluate all metric components in jet mode.

        Returns (g, dg, ddg, dddg) with index layout
        ``dg[..., i, j, k] = d_k g_ij`` etc. (metric indices first, derivative
        indices last, each block symmetric in both groups).
        """
        points = self.check_domain(points)
        batch = points.shape[:-1]
        n = self.n
        g = np.zeros(batch + (n, n))
        dg = np.zeros(batch + (n, n, n))
        ddg = np.zeros(batch + (n, n, n, n))
        dddg = np.zeros(batch + (n, n, n, n, n))
        for (i, j), prog in self._programs.items():
            jet = eval_program_jet(prog, points)
            for (a, b) in {(i, j), (j, i)}:
                g[..., a, b] = jet.value
                dg[..., a, b, :] = jet.first
                ddg[..., a, b, :, :] = jet.second
                dddg[..., a, b, :, :, :] = jet.third
        self._check_positive_definite(g, points)
        return g, dg, ddg, dddg

    def _check_positive_definite(self, g, points):
        eigs = np.linalg.eigvalsh(g)
        diag_max = np.abs(np.diagonal(g, axis1=-2, axis2=-1)).max(axis=-1)
        bad = eigs[..., 0] <= PD_RELATIVE_EPS * diag_max
        if np.any(bad):
            flat_bad = np.argmax(bad.reshape(-1))
            flat_pts = points.reshape(-1, self.n)
            raise DegenerateMetric(flat_pts[flat_bad],
                                   float(eigs.reshape(-1, self.n)[flat_bad, 0]))

    def __getstate__(self):
        return {"spec": self.spec, "programs": self._programs}

    def __setstate__(self, state):
        self.__init__(state["spec"], state["programs"])


def compile_metric(spec: MetricSpec) -> CompiledMetric:
    """Parse and flatten every component; parse failures are aggregated."""
    programs = {}
    failures = []
    for key in sorted(spec.components):
        src = spec.components[key]
        try:
            ast = parse_expr(src, spec.dimension, spec.names)
            if max_var_index(ast) >= spec.dimension:
                raise DomainError("coordinate index out of range")
            programs[key] = compile_program(ast)
        except QcgeoError as err:
            failures.append((f"{key[0]}{key[1]}", err))
    if failures:
        raise CompileError(failures)
    return CompiledMetric(spec, programs)
