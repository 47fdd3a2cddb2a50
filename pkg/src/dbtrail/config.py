"""Engine configuration: flat ``key = value`` file (engine.toml).

Keys mirror the parameter dataclasses:

    m, i_explore, i_converge, df, k, max_tree, seed     best-trail
    c, pos_discount, rep_discount                       trail scoring
    pg_gamma, pg_m                                      potential gain
    page_size                                           result page length
    title_column.<table> = <column>                     summary titles

Lines starting with # are comments. Unknown keys are rejected so typos fail
loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .linkgraph import PotentialGainParams
from .trailengine import BestTrailParams, TrailScoreParams

DEFAULT_TITLE_COLUMNS = {"publication": "title", "author": "name"}

_INT_KEYS = {"m", "i_explore", "i_converge", "k", "max_tree", "seed", "pg_m", "page_size"}
_FLOAT_KEYS = {"df", "c", "pos_discount", "rep_discount", "pg_gamma"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    best_trail: BestTrailParams = BestTrailParams()
    trail_score: TrailScoreParams = TrailScoreParams()
    potential_gain: PotentialGainParams = PotentialGainParams()
    page_size: int = 10
    title_columns: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TITLE_COLUMNS))


def parse_config_text(text: str, base: EngineConfig | None = None) -> EngineConfig:
    config = base or EngineConfig()
    bt = {"m": config.best_trail.m, "i_explore": config.best_trail.i_explore,
          "i_converge": config.best_trail.i_converge, "df": config.best_trail.df,
          "k": config.best_trail.k, "max_tree": config.best_trail.max_tree,
          "seed": config.best_trail.seed}
    ts = {"c": config.trail_score.c, "pos_discount": config.trail_score.pos_discount,
          "rep_discount": config.trail_score.rep_discount}
    pg = {"gamma": config.potential_gain.gamma, "m": config.potential_gain.m}
    page_size = config.page_size
    titles = dict(config.title_columns)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip().strip('"')
        if key.startswith("title_column."):
            titles[key[len("title_column."):]] = value
            continue
        if key in _INT_KEYS:
            parsed: float | int = int(value)
        elif key in _FLOAT_KEYS:
            parsed = float(value)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key == "page_size":
            page_size = int(parsed)
        elif key in bt:
            bt[key] = parsed
        elif key == "pg_gamma":
            pg["gamma"] = parsed
        elif key == "pg_m":
            pg["m"] = int(parsed)
        else:
            ts[key] = parsed

    return EngineConfig(
        best_trail=BestTrailParams(**bt),
        trail_score=TrailScoreParams(**ts),
        potential_gain=PotentialGainParams(gamma=pg["gamma"], m=pg["m"]),
        page_size=page_size,
        title_columns=titles,
    )


def load_config(path: str | Path | None, base: EngineConfig | None = None) -> EngineConfig:
    if path is None:
        return base or EngineConfig()
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base=base)


def with_overrides(config: EngineConfig, *, seed: int | None = None,
                   k: int | None = None) -> EngineConfig:
    bt = config.best_trail
    if seed is not None:
        bt = replace(bt, seed=seed)
    if k is not None:
        bt = replace(bt, k=k)
    return replace(config, best_trail=bt)
