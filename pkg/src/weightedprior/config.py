"""Line-oriented ``key = value`` configuration files.

``#`` starts a comment, blank lines are ignored, keys are unique and there is
no nesting. Every recognised key is listed in :data:`DEFAULTS`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .algebraic import AlgebraicOptions
from .cs import CsOptions
from .grid import ValidationError
from .keyvalue import ConfigError, parse_key_values, read_key_values, write_key_values
from .pipeline import RECON_METHODS, ReconConfig
from .weights import PilotMethod


def _auto_int(value: str):
    return None if value.lower() == "auto" else int(value)


def _names(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


# key -> (parser, default)
DEFAULTS = {
    # objective and weights
    "lambda1": (float, 0.5),
    "lambda2": (float, 200.0),
    "k": (float, 20.0),
    "smoothing_sigma": (float, 1.0),
    "eigen_rank_high": (_auto_int, None),
    "eigen_rank_low": (_auto_int, None),
    "outer_iterations": (int, 5),
    "cs_max_iterations": (int, 200),
    "cs_tolerance": (float, 1e-5),
    "cs_power_iterations": (int, 30),
    "pilot_methods": (_names, ("FBP", "SIRT", "SART", "CS")),
    "fbp_filter": (str, "ram-lak"),
    "art_iterations": (int, 10),
    "sart_iterations": (int, 20),
    "sirt_iterations": (int, 100),
    "relaxation": (float, 1.0),
    "seed": (int, 0),
    # experiment
    "dataset": (str, "potato"),
    "size": (int, 128),
    "n_templates": (int, 4),
    "noise_sigma": (float, 0.005),
    "views": (int, 45),
    "total_views": (int, 360),
    "method": (str, "weighted-prior"),
    "bench_methods": (_names, ("fdk", "cs", "prior", "weighted-prior")),
}


@dataclass(frozen=True)
class Experiment:
    """Validated config: solver settings plus dataset and acquisition choices."""

    recon: ReconConfig
    dataset: str = "potato"
    size: int = 128
    n_templates: int = 4
    noise_sigma: float = 0.005
    views: int = 45
    total_views: int = 360
    method: str = "weighted-prior"
    bench_methods: tuple[str, ...] = ("fdk", "cs", "prior", "weighted-prior")
    art_iterations: int = 10
    sart_iterations: int = 20
    sirt_iterations: int = 100
    relaxation: float = 1.0

    @property
    def seed(self) -> int:
        return self.recon.seed

    def algebraic_options(self, method: str) -> AlgebraicOptions:
        iters = {"ART": self.art_iterations, "SART": self.sart_iterations, "SIRT": self.sirt_iterations}
        return AlgebraicOptions(method.upper(), iters[method.upper()], self.relaxation)

    def with_overrides(self, **overrides) -> "Experiment":
        """Apply CLI-style overrides (``seed`` and ``views`` included)."""
        values = {k: v for k, v in overrides.items() if v is not None}
        if not values:
            return self
        return build_experiment({**self.as_values(), **values})

    def as_values(self) -> dict:
        r = self.recon
        return {
            "lambda1": r.lambda1, "lambda2": r.lambda2, "k": r.k,
            "smoothing_sigma": r.smoothing_sigma, "eigen_rank_high": r.eigen_rank_high,
            "eigen_rank_low": r.eigen_rank_low, "outer_iterations": r.outer_iterations,
            "cs_max_iterations": r.cs_options.max_iterations, "cs_tolerance": r.cs_options.tolerance,
            "cs_power_iterations": r.cs_options.lipschitz_power_iters,
            "pilot_methods": tuple(m.identifier for m in r.pilot_methods),
            "fbp_filter": r.fbp_filter, "seed": r.seed,
            "dataset": self.dataset, "size": self.size, "n_templates": self.n_templates,
            "noise_sigma": self.noise_sigma, "views": self.views, "total_views": self.total_views,
            "method": self.method, "bench_methods": self.bench_methods,
            "art_iterations": self.art_iterations, "sart_iterations": self.sart_iterations,
            "sirt_iterations": self.sirt_iterations, "relaxation": self.relaxation,
        }


def build_experiment(values: dict) -> Experiment:
    """Build an :class:`Experiment` from already-typed values, applying defaults."""
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    v = {k: values.get(k, default) for k, (_, default) in DEFAULTS.items()}
    from .phantom import PRESETS

    if v["dataset"] not in PRESETS:
        raise ConfigError(f"unknown dataset {v['dataset']!r}; expected one of {sorted(PRESETS)}")
    for name in (v["method"], *v["bench_methods"]):
        if name not in RECON_METHODS:
            raise ConfigError(f"unknown method {name!r}; expected one of {RECON_METHODS}")
    if v["views"] < 1 or v["views"] > v["total_views"]:
        raise ConfigError(f"views must be in [1, total_views={v['total_views']}], got {v['views']}")

    cs = CsOptions(v["lambda1"], v["cs_max_iterations"], v["cs_tolerance"], v["cs_power_iterations"])
    pilot_methods = []
    for ident in v["pilot_methods"]:
        ident = ident.upper()
        if ident == "CS":
            pilot_methods.append(PilotMethod("CS", cs))
        elif ident == "FBP":
            pilot_methods.append(PilotMethod("FBP", v["fbp_filter"]))
        elif ident in ("ART", "SART", "SIRT"):
            iters = v[f"{ident.lower()}_iterations"]
            pilot_methods.append(PilotMethod(ident, AlgebraicOptions(ident, iters, v["relaxation"])))
        else:
            raise ConfigError(f"unknown pilot method {ident!r}")
    recon = ReconConfig(
        lambda1=v["lambda1"], lambda2=v["lambda2"], k=v["k"], smoothing_sigma=v["smoothing_sigma"],
        eigen_rank_high=v["eigen_rank_high"], eigen_rank_low=v["eigen_rank_low"],
        outer_iterations=v["outer_iterations"], cs_options=cs, pilot_methods=tuple(pilot_methods),
        fbp_filter=v["fbp_filter"], seed=v["seed"],
    )
    if len(recon.pilot_methods) < 2:
        raise ConfigError("pilot_methods needs at least two methods")
    return Experiment(
        recon=recon, dataset=v["dataset"], size=v["size"], n_templates=v["n_templates"],
        noise_sigma=v["noise_sigma"], views=v["views"], total_views=v["total_views"],
        method=v["method"], bench_methods=tuple(v["bench_methods"]),
        art_iterations=v["art_iterations"], sart_iterations=v["sart_iterations"],
        sirt_iterations=v["sirt_iterations"], relaxation=v["relaxation"],
    )


def parse_config_text(text: str, source: str = "<config>") -> Experiment:
    values = {}
    for lineno, key, raw in parse_key_values(text, source):
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        parser = DEFAULTS[key][0]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return build_experiment(values)
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path) -> Experiment:
    """Parse and validate a config file; missing keys take their defaults."""
    return parse_config_text(Path(path).read_text(), os.fspath(path))


def default_experiment() -> Experiment:
    return build_experiment({})


__all__ = [
    "ConfigError", "DEFAULTS", "Experiment", "build_experiment", "default_experiment",
    "parse_config", "parse_config_text", "parse_key_values", "read_key_values",
    "write_key_values",
]
