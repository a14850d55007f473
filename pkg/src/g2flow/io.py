"""Snapshots, run configuration and metrics CSV."""
import configparser
import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, SnapshotError
from .flow import CSV_COLUMNS, FlowConfig
from .lattice import LatticeField, LatticeSpec, fiber_shape
from .state import Mode

MAGIC = b"G2F1"
VERSION = 1
_HEAD = struct.Struct("<4sI7I7dH")


# -- G2F1 snapshots -------------------------------------------------------------

def write_snapshot(path, fld):
    """Write a lattice field: header, then little-endian float64 values in row-major order."""
    tag = fld.kind.encode("ascii")
    head = _HEAD.pack(MAGIC, VERSION, *fld.spec.dims, *fld.spec.spacing, len(tag))
    data = np.ascontiguousarray(fld.values, dtype="<f8")
    try:
        with open(path, "wb") as fh:
            fh.write(head + tag)
            fh.write(data.tobytes())
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path, order=2):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if len(raw) < _HEAD.size or raw[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a G2F1 snapshot")
    magic, version, *rest = _HEAD.unpack_from(raw)
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    dims, spacing, ntag = tuple(rest[:7]), tuple(rest[7:14]), rest[14]
    off = _HEAD.size
    kind = raw[off:off + ntag].decode("ascii")
    off += ntag
    try:
        spec = LatticeSpec(dims, spacing, order)
        shape = dims + fiber_shape(kind)
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad header: {exc}") from exc
    count = int(np.prod(shape))
    if len(raw) - off != 8 * count:
        raise SnapshotError(f"{path}: expected {8 * count} data bytes, found {len(raw) - off}")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=off).astype(float).reshape(shape)
    return LatticeField(spec, kind, values)


# -- metrics CSV ----------------------------------------------------------------

def format_value(x):
    return format(float(x), ".17g")


class MetricsWriter:
    """Streams diagnostics records to CSV as they arrive."""

    def __init__(self, path):
        try:
            self._fh = open(path, "w", newline="")
        except OSError as exc:
            raise SnapshotError(f"cannot open metrics file {path}: {exc}") from exc
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)

    def __call__(self, record):
        self._w.writerow([format_value(v) for v in record.row()])
        self._fh.flush()

    def close(self):
        self._fh.close()


def write_metrics_csv(path, records):
    w = MetricsWriter(path)
    try:
        for r in records:
            w(r)
    finally:
        w.close()


def read_metrics_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header")
    return np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(CSV_COLUMNS))


# -- run configuration ----------------------------------------------------------

_SCHEMA = {
    "grid": {"dims", "spacing", "period", "order"},
    "flow": {"dt_init", "c_dt", "c_grid", "t_max", "integrator", "monitor_every",
             "lambda_abort", "max_steps", "adaptive"},
    "initial": {"snapshot"},
    "output": {"csv", "snapshot_dir", "snapshot_every", "figure"},
}
_MODE_KEYS = {"amplitude", "wavevector", "form", "function"}


@dataclass
class RunConfig:
    spec: LatticeSpec
    flow: FlowConfig
    modes: list = field(default_factory=list)
    initial_snapshot: Path = None
    csv_path: Path = Path("metrics.csv")
    snapshot_dir: Path = None
    snapshot_every: int = 0
    figure_path: Path = None


def _ints(text, n, key):
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigInvalid(f"{key}: expected integers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigInvalid(f"{key}: expected {n} values, got {len(vals)}")
    return vals


def _floats(text, key):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigInvalid(f"{key}: expected numbers, got {text!r}") from exc


def _get(section, key, conv, default):
    if key not in section:
        return default
    try:
        return conv(section[key])
    except ValueError as exc:
        raise ConfigInvalid(f"[{section.name}] {key}: {exc}") from exc


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_run_config(text, base_dir="."):
    """Parse INI-style run configuration; unknown sections and keys are rejected."""
    base = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(f"malformed config: {exc}") from exc

    for name in cp.sections():
        allowed = _MODE_KEYS if name.startswith("mode ") else _SCHEMA.get(name)
        if allowed is None:
            raise ConfigInvalid(f"unknown section [{name}]")
        unknown = set(cp[name]) - allowed
        if unknown:
            raise ConfigInvalid(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    if "grid" not in cp:
        raise ConfigInvalid("missing [grid] section")

    grid = cp["grid"]
    if "dims" not in grid:
        raise ConfigInvalid("[grid] dims is required")
    dims = _ints(grid["dims"], 7, "dims")
    if "spacing" in grid and "period" in grid:
        raise ConfigInvalid("[grid] give spacing or period, not both")
    if "spacing" in grid:
        spacing = _floats(grid["spacing"], "spacing")
    else:
        period = _floats(grid.get("period", str(2 * np.pi)), "period")
        if len(period) == 1:
            period = period * 7
        if len(period) != 7:
            raise ConfigInvalid("period: expected 1 or 7 values")
        spacing = [p / n for p, n in zip(period, dims)]
    if len(spacing) != 7:
        raise ConfigInvalid("spacing: expected 7 values")
    order = _get(grid, "order", int, 2)
    try:
        spec = LatticeSpec(tuple(dims), tuple(spacing), order)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc

    fl = cp["flow"] if "flow" in cp else {}
    if hasattr(fl, "name"):
        fl_kwargs = dict(
            dt_init=_get(fl, "dt_init", float, 1e-3),
            c_dt=_get(fl, "c_dt", float, 0.1),
            c_grid=_get(fl, "c_grid", float, 0.1),
            t_max=_get(fl, "t_max", float, 1.0),
            integrator=fl.get("integrator", "rk4").strip(),
            monitor_every=_get(fl, "monitor_every", int, 1),
            lambda_abort=_get(fl, "lambda_abort", float, 1e6),
            max_steps=_get(fl, "max_steps", int, 0),
            adaptive=_get(fl, "adaptive", _bool, True),
        )
    else:
        fl_kwargs = {}
    flow_cfg = FlowConfig(**fl_kwargs)

    modes = []
    for name in cp.sections():
        if not name.startswith("mode "):
            continue
        sec = cp[name]
        for key in ("amplitude", "wavevector", "form"):
            if key not in sec:
                raise ConfigInvalid(f"[{name}] {key} is required")
        form = _ints(sec["form"], 2, f"[{name}] form")
        if not (1 <= form[0] <= 7 and 1 <= form[1] <= 7 and form[0] != form[1]):
            raise ConfigInvalid(f"[{name}] form indices must be two distinct values in 1..7")
        func = sec.get("function", "sin").strip()
        if func not in ("sin", "cos"):
            raise ConfigInvalid(f"[{name}] function must be sin or cos")
        modes.append(Mode(_get(sec, "amplitude", float, 0.0),
                          tuple(_ints(sec["wavevector"], 7, f"[{name}] wavevector")),
                          tuple(form), func))

    init = cp["initial"] if "initial" in cp else {}
    snap = init.get("snapshot") if init else None
    if snap and modes:
        raise ConfigInvalid("give either [initial] snapshot or [mode ...] sections, not both")

    out = cp["output"] if "output" in cp else {}
    def path_of(key, default=None):
        v = out.get(key) if out else None
        return base / v if v else default
    every = _get(out, "snapshot_every", int, 0) if out else 0
    if every < 0:
        raise ConfigInvalid("snapshot_every must be non-negative")
    return RunConfig(spec, flow_cfg, modes,
                     initial_snapshot=base / snap if snap else None,
                     csv_path=path_of("csv", base / "metrics.csv"),
                     snapshot_dir=path_of("snapshot_dir"),
                     snapshot_every=every,
                     figure_path=path_of("figure"))


def load_run_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SnapshotError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text, Path(path).parent)
