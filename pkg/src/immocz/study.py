"""Sweep configuration files, figure presets and CSV / plot-script output."""

from __future__ import annotations

import os
import tempfile
from dataclasses import fields
from pathlib import Path

import numpy as np

from .codebook import DEFAULT_RADIUS, SystemParams
from .errors import ParameterError
from .simulator import BerCurve, SimConfig, scheduled_trials

CSV_COLUMNS = (
    "scheme", "detector", "N", "K", "L_ch", "R", "ebn0_db", "trials", "bits", "bit_errors", "ber",
    "implicit_ber", "explicit_ber", "codebook_error_rate", "ci95", "ties", "empty_sectors", "root_failures",
)

DEFAULT_GRID = tuple(float(e) for e in range(-5, 44, 3))

PRESETS = {
    "fig3-K8": dict(N=10, K=8, L_ch=3),
    "fig3-K6": dict(N=10, K=6, L_ch=3),
    "fig3-K4": dict(N=10, K=4, L_ch=3),
    "fig4-K18": dict(N=20, K=18, L_ch=6),
    "fig4-K16": dict(N=20, K=16, L_ch=6),
    "fig4-K14": dict(N=20, K=14, L_ch=6),
}

_LIST_KEYS = {"scheme", "detector"}
_SIM_KEYS = {f.name for f in fields(SimConfig)} - {"params"}
_PARAM_KEYS = {"N", "K", "L_ch", "R"}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SIM_KEYS | _PARAM_KEYS | {"preset"}:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_grid(text: str) -> tuple[float, ...]:
    """``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ParameterError(f"grid step must be positive, got {step}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(v) for v in text.split(",") if v.strip())


def preset_values(name: str) -> dict[str, str]:
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    p = PRESETS[name]
    return {
        "N": str(p["N"]), "K": str(p["K"]), "L_ch": str(p["L_ch"]), "R": repr(DEFAULT_RADIUS),
        "scheme": "im-mocz,mocz", "detector": "rfmd,dizet",
        "ebn0_points": ",".join(f"{e:g}" for e in DEFAULT_GRID), "trials_per_point": "schedule",
    }


def build_configs(values: dict[str, str]) -> list[SimConfig]:
    """Expand a flat key/value mapping into one SimConfig per scheme x detector."""
    values = dict(values)
    if "preset" in values:
        merged = preset_values(values.pop("preset"))
        merged.update(values)
        values = merged
    try:
        N = int(values["N"])
        K = int(values.get("K", N))
        L_ch = int(values["L_ch"])
        R = float(values.get("R", DEFAULT_RADIUS))
        grid = parse_grid(values.get("ebn0_points", "10"))
        trials_text = values.get("trials_per_point", "1000")
        if trials_text == "schedule":
            trials = tuple(scheduled_trials(e) for e in grid)
        else:
            counts = tuple(int(float(t)) for t in trials_text.split(","))
            trials = counts[0] if len(counts) == 1 else counts
        common = dict(
            ebn0_points=grid,
            trials_per_point=trials,
            master_seed=int(values.get("master_seed", 0)),
            workers=int(values.get("workers", 1)),
            channel_normalization=values.get("channel_normalization", "expectation"),
            ebn0_convention=values.get("ebn0_convention", "paper"),
        )
    except KeyError as exc:
        raise ParameterError(f"missing config key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParameterError(f"bad config value: {exc}") from None
    configs = []
    for scheme in (s.strip() for s in values.get("scheme", "im-mocz").split(",")):
        for detector in (d.strip() for d in values.get("detector", "dizet").split(",")):
            params = SystemParams(N, N if scheme == "mocz" else K, L_ch, R)
            configs.append(SimConfig(params, scheme, detector, **common))
    return configs


def load_config(path, overrides: dict[str, str] | None = None) -> list[SimConfig]:
    values = parse_config_text(Path(path).read_text())
    values.update(overrides or {})
    return build_configs(values)


def _g(value: float) -> str:
    return f"{value:.6g}"


def csv_rows(curves: list[BerCurve]) -> list[str]:
    rows = [",".join(CSV_COLUMNS)]
    for curve in curves:
        cfg = curve.config
        p = cfg.params
        for pt in curve.points:
            rows.append(",".join([
                cfg.scheme, cfg.detector, str(p.N), str(p.K), str(p.L_ch), _g(p.R), _g(pt.ebn0_db),
                str(pt.trials), str(pt.bits), str(pt.bit_errors), _g(pt.ber), _g(pt.implicit_ber),
                _g(pt.explicit_ber), _g(pt.codebook_error_rate), _g(pt.ci95), str(pt.ties),
                str(pt.empty_sectors), str(pt.root_failures),
            ]))
    return rows


def atomic_write(path, text: str) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(curves: list[BerCurve], path) -> None:
    atomic_write(path, "\n".join(csv_rows(curves)) + "\n")


PLOT_TEMPLATE = '''\
"""Plot BER against Eb/N0 from {csv_name}."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
curves = defaultdict(list)
with open(src, newline="") as fh:
    for row in csv.DictReader(fh):
        label = f"{{row['scheme']}} {{row['detector']}} N={{row['N']}} K={{row['K']}}"
        ber = float(row["ber"])
        if ber > 0:
            curves[label].append((float(row["ebn0_db"]), ber))

fig, ax = plt.subplots()
for label, pts in sorted(curves.items()):
    pts.sort()
    ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
ax.set_xlabel("Eb/N0 [dB]")
ax.set_ylabel("BER")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.savefig(src.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def write_plot_script(csv_path) -> Path:
    csv_path = Path(csv_path)
    script = csv_path.with_name(csv_path.stem + "_plot.py")
    atomic_write(script, PLOT_TEMPLATE.format(csv_name=csv_path.name))
    return script
