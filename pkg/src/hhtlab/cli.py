"""Command-line driver.

Settings come from built-in defaults, then an optional flat TOML file with
dotted keys (``lowess.span = 0.1``), then command-line flags.  Every file
written carries the SHA-256 digest of the resolved settings in a leading
``#`` comment (a ``config_digest`` key in JSON).

Exit codes: 0 success, 1 invalid settings, 2 failure while running.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .ceemd import EnsembleConfig, ceemd, characterize_end_effect, eemd
from .emd import SiftConfig, emd
from .features import FeatureSetSelector, build_dataset
from .filters import high_pass, low_pass
from .forecast import (DEFAULT_GRID, RidgeRegressor, compare_with_plain_lags,
                       evaluate_split, write_report_json)
from .hsa import LowessConfig, hilbert_spectrum, mode_spectrum_means, write_means_csv
from .series import load_csv, log_transform

logger = logging.getLogger("hhtlab")

COMMANDS = ("decompose", "spectrum", "reconstruct", "features", "forecast",
            "endeffect")

DEFAULTS: dict[str, Any] = {
    "input": None,
    "output": ".",
    "value_column": "value",
    "timestamp_column": None,
    "log_price": False,
    "seed": None,
    "method": "ceemd",
    "workers": 1,
    "timing": False,
    "ensemble.trials": 100,
    "ensemble.noise_sigma": 0.2,
    "ensemble.target_modes": None,
    "sift.sd_threshold": 0.2,
    "sift.max_sift_iterations": 100,
    "sift.max_modes": None,
    "lowess.span": 0.05,
    "lowess.robust_iterations": 5,
    "features.kinds": "c,ch",
    "features.modes": "all",
    "features.lambda": False,
    "forecast.protocol": "walk_forward",
    "forecast.T1": None,
    "forecast.T2": 50,
    "forecast.T_window": 200,
    "forecast.tau": 5,
    "forecast.regularization": None,
    "forecast.reg_grid": list(DEFAULT_GRID),
    "reconstruct.cutoff": 1,
    "reconstruct.pass": "low",
    "endeffect.replications": 20,
    "endeffect.columns": None,
}

# flag -> (dotted key, type)
FLAGS = {
    "--input": ("input", str),
    "--output": ("output", str),
    "--value-column": ("value_column", str),
    "--timestamp-column": ("timestamp_column", str),
    "--seed": ("seed", int),
    "--method": ("method", str),
    "--workers": ("workers", int),
    "--trials": ("ensemble.trials", int),
    "--noise-sigma": ("ensemble.noise_sigma", float),
    "--target-modes": ("ensemble.target_modes", int),
    "--sd-threshold": ("sift.sd_threshold", float),
    "--max-sift": ("sift.max_sift_iterations", int),
    "--max-modes": ("sift.max_modes", int),
    "--span": ("lowess.span", float),
    "--robust-iterations": ("lowess.robust_iterations", int),
    "--features": ("features.kinds", str),
    "--modes": ("features.modes", str),
    "--protocol": ("forecast.protocol", str),
    "--T1": ("forecast.T1", int),
    "--T2": ("forecast.T2", int),
    "--window": ("forecast.T_window", int),
    "--tau": ("forecast.tau", int),
    "--regularization": ("forecast.regularization", float),
    "--cutoff": ("reconstruct.cutoff", int),
    "--pass": ("reconstruct.pass", str),
    "--replications": ("endeffect.replications", int),
    "--columns": ("endeffect.columns", str),
}
SWITCHES = {"--log-price": "log_price", "--lambda": "features.lambda",
            "--timing": "timing"}


class ConfigError(ValueError):
    """Invalid setting; the message starts with the dotted field name."""


class StageError(RuntimeError):
    pass


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _coerce(key: str, raw: str) -> Any:
    default = DEFAULTS.get(key)
    if raw.lower() in ("none", "null", ""):
        return None
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    for kind in (int, float):
        try:
            return kind(raw)
        except ValueError:
            pass
    return raw


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def digest(self) -> str:
        payload = {k: v for k, v in self.values.items() if k != "output"}
        payload["command"] = self.command
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return "sha256:" + hashlib.sha256(blob).hexdigest()

    @property
    def header(self) -> list[str]:
        return [f"hhtlab {__version__} {self.command}",
                f"config-digest: {self.digest}"]

    def validate(self) -> None:
        """Check every nested setting up front, used or not."""
        self.sift()
        self.lowess()
        self.selector()
        seed = self["seed"] if self["seed"] is not None else 0
        _build("ensemble", EnsembleConfig, seed, self["ensemble.trials"],
               self["ensemble.noise_sigma"], self.sift(),
               self["ensemble.target_modes"])
        for key in ("forecast.T2", "forecast.T_window", "forecast.tau",
                    "endeffect.replications"):
            if self[key] < 1:
                raise ConfigError(f"{key}: must be >= 1")
        reg = self["forecast.regularization"]
        if reg is not None and reg < 0:
            raise ConfigError("forecast.regularization: must be >= 0")

    def sift(self) -> SiftConfig:
        return _build("sift", SiftConfig, self["sift.sd_threshold"],
                      self["sift.max_sift_iterations"], self["sift.max_modes"])

    def lowess(self) -> LowessConfig:
        return _build("lowess", LowessConfig, self["lowess.span"],
                      self["lowess.robust_iterations"])

    def ensemble(self) -> Optional[EnsembleConfig]:
        if self["method"] == "emd":
            return None
        if self["seed"] is None:
            raise ConfigError("seed: required for ensemble methods")
        return _build("ensemble", EnsembleConfig, self["seed"],
                      self["ensemble.trials"], self["ensemble.noise_sigma"],
                      self.sift(), self["ensemble.target_modes"])

    def selector(self) -> FeatureSetSelector:
        try:
            return FeatureSetSelector.parse(self["features.kinds"],
                                            self["features.modes"],
                                            bool(self["features.lambda"]))
        except (ValueError, TypeError) as exc:
            msg = str(exc)
            raise ConfigError(msg if msg.startswith("features.")
                              else f"features: {msg}") from None


def _build(section, cls, *args):
    try:
        return cls(*args)
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(section + ".")
                          else f"{section}: {msg}") from None


def _check_types(values: dict) -> None:
    for key, default in DEFAULTS.items():
        v = values[key]
        if v is None or default is None:
            continue
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{key}: expected true/false, got {v!r}")
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{key}: expected a number, got {v!r}")
            if isinstance(default, int) and not float(v).is_integer():
                raise ConfigError(f"{key}: expected an integer, got {v!r}")
            values[key] = type(default)(v)
    for key in ("seed", "forecast.T1", "ensemble.target_modes", "sift.max_modes"):
        if values[key] is not None:
            if isinstance(values[key], bool) or not float(values[key]).is_integer():
                raise ConfigError(f"{key}: expected an integer")
            values[key] = int(values[key])
    if values["method"] not in ("emd", "eemd", "ceemd"):
        raise ConfigError(f"method: unknown {values['method']!r}")
    if values["forecast.protocol"] not in ("walk_forward", "split"):
        raise ConfigError(
            f"forecast.protocol: unknown {values['forecast.protocol']!r}")
    if values["reconstruct.pass"] not in ("low", "high"):
        raise ConfigError(f"reconstruct.pass: must be low or high")
    if values["workers"] < 1:
        raise ConfigError("workers: must be >= 1")


def parse_args(argv=None) -> RunConfig:
    p = argparse.ArgumentParser(prog="hhtlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat TOML settings file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any dotted setting")
        for flag, (key, _) in FLAGS.items():
            sp.add_argument(flag, dest=key.replace(".", "__"), default=None)
        for flag, key in SWITCHES.items():
            sp.add_argument(flag, dest=key.replace(".", "__"),
                            action="store_const", const=True, default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    ns = p.parse_args(argv)
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")

    values = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config, "rb") as fh:
                doc = _flatten(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"config: cannot read {ns.config}: {exc}") from None
        _merge(values, doc)
    overrides = {}
    for item in ns.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"{item}: expected KEY=VALUE")
        overrides[key.strip()] = _coerce(key.strip(), raw.strip())
    for flag, (key, kind) in FLAGS.items():
        raw = getattr(ns, key.replace(".", "__"))
        if raw is not None:
            try:
                overrides[key] = kind(raw)
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    for key in SWITCHES.values():
        if getattr(ns, key.replace(".", "__")):
            overrides[key] = True
    _merge(values, overrides)
    _check_types(values)
    cfg = RunConfig(ns.command, values)
    cfg.validate()
    return cfg


def _merge(values: dict, new: dict) -> None:
    for key, v in new.items():
        if key not in DEFAULTS:
            raise ConfigError(f"{key}: unknown setting")
        values[key] = v


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except Exception as exc:
        raise StageError(f"{name}: {exc}") from exc


def _load(cfg: RunConfig):
    if not cfg["input"]:
        raise ConfigError("input: required")
    series = _stage("load", load_csv, cfg["input"], cfg["value_column"],
                    cfg["timestamp_column"])
    if cfg["log_price"]:
        series = _stage("log_transform", log_transform, series)
    return series


def _decompose(cfg: RunConfig, series):
    method = cfg["method"]
    ens = cfg.ensemble()
    if method == "emd":
        return _stage("decompose", emd, series, cfg.sift())
    fn = ceemd if method == "ceemd" else eemd
    return _stage("decompose", fn, series, ens, workers=cfg["workers"])


def _out(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def cmd_decompose(cfg):
    d = _decompose(cfg, _load(cfg))
    path = _out(cfg, "decomposition.csv")
    d.to_csv(path, cfg.header)
    return [path]


def cmd_spectrum(cfg):
    lowess = cfg.lowess()
    d = _decompose(cfg, _load(cfg))
    spectrum = _stage("spectrum", hilbert_spectrum, d, lowess)
    points = _out(cfg, "spectrum.csv")
    means = _out(cfg, "spectrum_means.csv")
    spectrum.to_csv(points, cfg.header)
    write_means_csv(_stage("spectrum", mode_spectrum_means, spectrum)
                    if len(spectrum) else [], means, cfg.header)
    return [points, means]


def cmd_reconstruct(cfg):
    series = _load(cfg)
    d = _decompose(cfg, series)
    m = cfg["reconstruct.cutoff"]
    if not 1 <= m <= d.n_modes:
        raise ConfigError(f"reconstruct.cutoff: {m} outside 1..{d.n_modes}")
    if cfg["reconstruct.pass"] == "low":
        y = low_pass(d, m)
        if cfg["log_price"]:
            y = np.exp(y)
    else:
        y = high_pass(d, m)
    path = _out(cfg, "reconstruction.csv")
    with path.open("w", encoding="utf-8") as fh:
        for line in cfg.header:
            fh.write(f"# {line}\n")
        stamps = series.timestamps
        fh.write("t,timestamp,value\n" if stamps else "t,value\n")
        for i, v in enumerate(y):
            label = f"{stamps[i]}," if stamps else ""
            fh.write(f"{i + 1},{label}{float(v)!r}\n")
    return [path]


def cmd_features(cfg):
    series = _load(cfg)
    tau = cfg["forecast.tau"]
    data = _stage("features", build_dataset, series, (tau, len(series) - 1),
                  tau, cfg.selector(), cfg.ensemble(), cfg.lowess())
    path = _out(cfg, "features.csv")
    data.to_csv(path, cfg.header)
    return [path]


def cmd_forecast(cfg):
    series = _load(cfg)
    T2 = cfg["forecast.T2"]
    T1 = cfg["forecast.T1"]
    if T1 is None:
        T1 = len(series) - T2
    selector, ens, lowess = cfg.selector(), cfg.ensemble(), cfg.lowess()
    reg = cfg["forecast.regularization"]
    regressor = RidgeRegressor(reg, tuple(float(g) for g in cfg["forecast.reg_grid"]))
    tau = cfg["forecast.tau"]
    if cfg["forecast.protocol"] == "walk_forward":
        res = _stage("forecast", compare_with_plain_lags, series, T1, T2,
                     cfg["forecast.T_window"], tau, selector, ens, lowess,
                     regressor, cfg["workers"])
    else:
        hht = _stage("forecast", evaluate_split, series, T1, T2, tau,
                     selector, ens, lowess, regressor)
        plain = _stage("forecast", evaluate_split, series, T1, T2, tau,
                       FeatureSetSelector.plain_lags(), None, lowess, regressor)
        res = {"hht": hht, "plain": plain, "mse_hht": hht.mse,
               "mse_plain": plain.mse,
               "mse_ratio": hht.mse / plain.mse if plain.mse > 0 else float("nan"),
               "naive_mse": hht.naive_mse}
    timing = bool(cfg["timing"])
    payload = {
        "config_digest": cfg.digest,
        "protocol": cfg["forecast.protocol"],
        "mse": res["mse_hht"],
        "naive_mse": res["naive_mse"],
        "mse_plain_lags": res["mse_plain"],
        "mse_ratio_hht_to_plain": res["mse_ratio"],
        "hht": res["hht"].summary(timing),
        "plain_lags": res["plain"].summary(timing),
    }
    jpath = _out(cfg, "forecast.json")
    write_report_json(jpath, payload)
    steps = _out(cfg, "forecast_steps.csv")
    res["hht"].to_csv(steps, cfg.header, timing)
    plain_steps = _out(cfg, "forecast_plain_steps.csv")
    res["plain"].to_csv(plain_steps, cfg.header, timing)
    return [jpath, steps, plain_steps]


def cmd_endeffect(cfg):
    if not cfg["input"]:
        raise ConfigError("input: required (CSV of true components)")
    with open(cfg["input"], newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(l for l in fh if not l.startswith("#"))
        rows = list(reader)
        header = reader.fieldnames or []
    cols = cfg["endeffect.columns"]
    names = [c.strip() for c in cols.split(",")] if cols else [
        c for c in header if c not in ("t", "timestamp")]
    missing = [c for c in names if c not in header]
    if missing or not names:
        raise ConfigError(f"endeffect.columns: not in input: {missing or names}")
    truth = _stage("load", lambda: np.array(
        [[float(r[c]) for r in rows] for c in names]))
    ens = cfg.ensemble()
    if ens is None:
        raise ConfigError("method: endeffect needs an ensemble method")
    report = _stage("endeffect", characterize_end_effect, truth, ens,
                    cfg["endeffect.replications"])
    path = _out(cfg, "endeffect.csv")
    report.to_csv(path, cfg.header)
    return [path]


def run(cfg: RunConfig) -> list[Path]:
    return globals()[f"cmd_{cfg.command}"](cfg)


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
        paths = run(cfg)
    except ConfigError as exc:
        print(f"hhtlab: invalid setting {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"hhtlab: failed in {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
