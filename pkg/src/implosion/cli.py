"""Command-line front end: ``implosion <command> [options]``.

Configuration comes from a flat ``key = value`` file (--config) overridden by
flags.  Complex numbers are written "re,im".  Every command writes its
outputs through a temporary file and a rename, the manifest last, so an
interrupted run leaves nothing half-written at the output paths.

Exit codes: 0 success, 1 failed verification check, 2 configuration error,
3 numerical abort.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import gate as G
from . import scan as S
from . import verify as V
from .errors import ImplosionError
from .poly import PolyMap

COMMANDS = ("dyn", "param", "central", "limsup", "misiurewicz", "gate", "verify")
RASTER_COMMANDS = ("dyn", "param", "central", "limsup")
MIN_SIDE = 16


class ConfigError(ValueError):
    pass


# configuration -----------------------------------------------------------------------

def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot read complex number {text!r}; expected 're,im'")


def parse_grid(text) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"cannot read grid {text!r}; expected WxH") from None
    return w, h


def parse_viewport(text) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise ConfigError(f"cannot read viewport {text!r}; expected X0,Y0,X1,Y1") from None
    if len(vals) != 4:
        raise ConfigError(f"viewport needs four numbers, got {len(vals)}")
    return vals


def _int(key, text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None


def _bool(key, text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be true or false, got {text!r}")


def _threads(text) -> int:
    if str(text).strip() == "auto":
        return os.cpu_count() or 1
    return _int("threads", text)


def read_config_file(path: str) -> dict:
    """Flat key = value pairs; '#' starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    for k, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{k}: expected key = value")
        key, val = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


@dataclass
class RunConfig:
    command: str
    tau: complex = 0j
    s: complex = 1.2 + 0j  # the marked critical point; the parameter a for `gate`
    width: int = 400
    height: int = 400
    viewport: tuple | None = None
    n_max: int = S.N_MAX
    max_iter: int = S.BUDGET
    budget: int = S.BUDGET
    out: str = ""
    threads: int = 1
    palette: str = "default"
    n: int = 1  # perturbation index (limsup) or orbit length (misiurewicz)
    seed: complex = 1.5 + 0j
    plane: str = "s"
    quadratic: bool = False
    suite: str = "all"

    def echo(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, complex):
                d[k] = [v.real, v.imag]
            elif isinstance(v, tuple):
                d[k] = list(v)
        return d


DEFAULT_VIEWPORTS = {
    "param": S.H_VIEWPORT,
    "central": S.H_VIEWPORT,
    "limsup": (-1.6, -1.6, 1.6, 1.6),
    "dyn": (-1.5, -1.5, 1.5, 1.5),
}

_CONVERT = {
    "tau": parse_complex, "s": parse_complex, "a": parse_complex, "seed": parse_complex,
    "grid": parse_grid, "viewport": parse_viewport,
    "n_max": lambda v: _int("nmax", v), "nmax": lambda v: _int("nmax", v),
    "max_iter": lambda v: _int("maxiter", v), "maxiter": lambda v: _int("maxiter", v),
    "budget": lambda v: _int("budget", v), "n": lambda v: _int("n", v),
    "threads": lambda v: _threads(v),
    "quadratic": lambda v: _bool("quadratic", v),
    "out": str, "palette": str, "plane": str, "suite": str,
}
_ALIASES = {"a": "s", "nmax": "n_max", "maxiter": "max_iter"}


def build_config(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Defaults, then the config file, then flags."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = RunConfig(command)
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in _CONVERT:
                raise ConfigError(f"unknown configuration key {key!r}")
            val = _CONVERT[key](raw)
            key = _ALIASES.get(key, key)
            if key == "grid":
                cfg.width, cfg.height = val
            else:
                setattr(cfg, key, val)
    if cfg.viewport is None and command in DEFAULT_VIEWPORTS:
        cfg.viewport = S.QUAD_VIEWPORT if (command == "dyn" and cfg.quadratic) else DEFAULT_VIEWPORTS[command]
    if not cfg.out:
        cfg.out = f"{command}.csv" if command in ("misiurewicz", "gate", "verify") else f"{command}.ppm"
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.command in RASTER_COMMANDS:
        if cfg.width < MIN_SIDE or cfg.height < MIN_SIDE:
            raise ConfigError(f"grid must be at least {MIN_SIDE}x{MIN_SIDE}")
        x0, y0, x1, y1 = cfg.viewport
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("degenerate viewport: need X1 > X0 and Y1 > Y0")
    if cfg.command in ("dyn", "param", "limsup") and cfg.tau.imag < 0:
        raise ConfigError("the phase needs Im tau >= 0")
    for key in ("n_max", "max_iter", "budget", "threads", "n"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be positive")
    if cfg.plane not in ("s", "a"):
        raise ConfigError("plane must be 's' or 'a'")
    if cfg.suite not in V.SUITES:
        raise ConfigError(f"suite must be one of {', '.join(V.SUITES)}")
    if cfg.palette != "default":
        raise ConfigError("only the default palette is available")
    if cfg.command == "dyn" and not cfg.quadratic and cfg.s == 0:
        raise ConfigError("s must be nonzero")


# rendering ---------------------------------------------------------------------------

NONESC_RGB = (0x20, 0x20, 0x20)
UNDET_RGB = (0xFF, 0x00, 0xFF)
OUTSIDE_RGB = (0xFF, 0xFF, 0xFF)
DOUBLE_RGB = (0x00, 0xFF, 0x00)  # forbidden class; never expected in a correct scan
WARM = ((255, 214, 102), (178, 34, 34))
COOL = ((135, 206, 250), (25, 25, 160))


def _ramp(ends, n) -> list[tuple[int, int, int]]:
    a, b = np.array(ends[0], float), np.array(ends[1], float)
    if n == 1:
        return [tuple(int(v) for v in a)]
    return [tuple(int(round(v)) for v in a + (b - a) * k / (n - 1)) for k in range(n)]


def palette(kind: str, n_max: int) -> dict[int, tuple[int, int, int]]:
    """Code -> RGB.  Esc+ levels run along a warm ramp, Esc- levels along a cool one."""
    pal = {S.OUTSIDE: OUTSIDE_RGB, S.NONESC: NONESC_RGB, S.UNDET: UNDET_RGB, S.DOUBLE: DOUBLE_RGB}
    if kind in ("central", "limsup"):
        pal[S.INSIDE] = NONESC_RGB
        return pal
    for k, rgb in enumerate(_ramp(WARM, n_max), start=1):
        pal[k] = rgb
    for k, rgb in enumerate(_ramp(COOL, n_max), start=1):
        pal[S.MINUS + k] = rgb
    return pal


def render(raster: S.Raster, n_max: int) -> np.ndarray:
    pal = palette(raster.kind, n_max)
    lut = np.zeros((256, 3), np.uint8)
    lut[:] = UNDET_RGB
    for code, rgb in pal.items():
        lut[code] = rgb
    return lut[raster.cells]


def ppm_bytes(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode() + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    head = data.split(b"\n", 3)
    if head[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in head[1].split())
    return np.frombuffer(head[3], np.uint8).reshape(h, w, 3)


def counts_from_image(rgb: np.ndarray, kind: str, n_max: int) -> dict[str, int]:
    """Per-class pixel counts recovered from the colours of a rendered raster."""
    pal = palette(kind, n_max)
    names = {}
    for code, col in pal.items():
        names.setdefault(col, S.code_name(code))
    if kind in ("central", "limsup"):
        # INSIDE shares the non-escaping colour
        names[pal[S.INSIDE]] = "inside"
    cols, cnt = np.unique(rgb.reshape(-1, 3), axis=0, return_counts=True)
    out = {}
    for col, c in zip(map(tuple, cols.tolist()), cnt.tolist()):
        out[names.get(col, "unknown")] = out.get(names.get(col, "unknown"), 0) + int(c)
    return out


# output files ---------------------------------------------------------------------------

def write_atomic(path: str, data: bytes) -> None:
    """Write to a temporary file next to path, then rename over it."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_bytes(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _stem(path: str) -> str:
    root, ext = os.path.splitext(path)
    return root if ext else path


@dataclass
class Outputs:
    files: dict = field(default_factory=dict)  # path -> bytes, written in order

    def add(self, path, data):
        self.files[path] = data

    def commit(self):
        for path, data in self.files.items():
            write_atomic(path, data)


def _complex_pair(z) -> list | None:
    return None if z is None else [z.real, z.imag]


def _component_summary(raster: S.Raster, code_filter, limit: int = 20) -> list[dict]:
    comps = sorted(S.components(raster, code_filter), key=lambda c: -c.pixel_count)
    return [{"label": c.label, "pixels": c.pixel_count, "holes": c.hole_count, "type": c.type_guess.value,
             "attachment": _complex_pair(c.attachment_estimate), "attachment_diameter": c.attachment_diameter}
            for c in comps[:limit]]


def _manifest(cfg: RunConfig, t0: float, counts=None, components=None, checks=None) -> bytes:
    doc = {"command": cfg.command, "config": cfg.echo(), "version": __version__,
           "wall_ms": round((time.perf_counter() - t0) * 1000, 3), "pixel_counts": counts or {},
           "components": components or [], "checks": checks or {}}
    return (json.dumps(doc, indent=2) + "\n").encode()


# commands -----------------------------------------------------------------------------------

def _raster_for(cfg: RunConfig) -> tuple[S.Raster, object]:
    grid = S.GridSpec(cfg.width, cfg.height, cfg.viewport)
    esc = lambda c: ((c >= 1) & (c <= cfg.n_max)) | ((c > S.MINUS) & (c <= S.MINUS + cfg.n_max))
    if cfg.command == "dyn":
        r = S.scan_dyn_escape(None if cfg.quadratic else cfg.s, cfg.tau, grid, cfg.n_max, cfg.budget,
                              cfg.threads, quadratic=cfg.quadratic)
        return r, esc
    if cfg.command == "param":
        return S.scan_esc(grid, cfg.tau, cfg.n_max, cfg.budget, cfg.threads), esc
    if cfg.command == "central":
        return S.scan_central(grid, cfg.max_iter, cfg.plane, cfg.threads), {S.INSIDE}
    return S.scan_limsup_K(grid, cfg.tau, cfg.n, cfg.max_iter, cfg.plane, cfg.threads), {S.INSIDE}


def run_raster(cfg: RunConfig, t0: float) -> int:
    r, comp_filter = _raster_for(cfg)
    kind = r.kind
    counts = r.counts() if kind not in ("central", "limsup") else {
        ("inside" if k == "esc+1" else k): v for k, v in r.counts().items()}
    checks = {}
    out = Outputs()
    out.add(cfg.out, ppm_bytes(render(r, cfg.n_max)))
    stem = _stem(cfg.out)
    if kind in ("dyn", "esc"):
        rows_, cols_ = np.nonzero(r.omega > 0)
        pts = r.grid.coords()[rows_, cols_]
        rows = [(i, j, z.real, z.imag, int(r.cells[i, j]), r.omega[i, j])
                for i, j, z in zip(rows_.tolist(), cols_.tolist(), pts.tolist())]
        out.add(stem + ".csv", csv_bytes(["row", "col", "re", "im", "code", "omega"], rows))
    if kind == "esc":
        agree, total = S.inversion_agreement(r)
        checks["double_pixels"] = int(np.count_nonzero(r.cells == S.DOUBLE))
        checks["no_double"] = checks["double_pixels"] == 0
        checks["inversion_agreement"] = agree / total if total else None
    if kind == "limsup":
        checks["lambda"] = [r.meta["lam"].real, r.meta["lam"].imag]
    checks["pixel_total_matches"] = sum(counts.values()) == cfg.width * cfg.height
    comps = _component_summary(r, comp_filter)
    out.add(stem + ".json", _manifest(cfg, t0, counts, comps, checks))
    out.commit()
    print(f"{cfg.command}: {cfg.width}x{cfg.height} -> {cfg.out}  {counts}")
    return 0


def run_misiurewicz(cfg: RunConfig, t0: float) -> int:
    s = S.find_misiurewicz(cfg.n, cfg.seed)
    res = abs(S.misiurewicz_residual(s, cfg.n))
    out = Outputs()
    stem = _stem(cfg.out)
    out.add(stem + ".csv", csv_bytes(["n", "seed_re", "seed_im", "s_re", "s_im", "residual"],
                                     [(cfg.n, cfg.seed.real, cfg.seed.imag, s.real, s.imag, res)]))
    out.add(stem + ".json", _manifest(cfg, t0, checks={"root": [s.real, s.imag], "residual": res,
                                                        "residual_ok": res < 1e-10}))
    out.commit()
    print(f"misiurewicz n={cfg.n}: s = {s.real:.15g}{s.imag:+.15g}i  |g_s^n(s)| = {res:.2e}")
    return 0


def run_gate(cfg: RunConfig, t0: float) -> int:
    a = cfg.s
    gs = G.classify_gate(a)
    m = PolyMap.cubic_a(a)
    rows = []
    for (k, side), z0 in G.seeds().items():
        fwd = G.flow(m, z0, direction=G.Direction.FORWARD)
        bwd = G.flow(m, z0, direction=G.Direction.BACKWARD)
        rows.append((f"{k}{side}", z0.real, z0.imag, bwd.end.real, bwd.end.imag, fwd.end.real, fwd.end.imag))
    checks = {"gate": str(gs), "well_behaved": G.well_behaved(m)}
    if a != 0 and not ((1 + a * a).imag == 0 and (1 + a * a).real <= 0):
        t = G.tau_of_a(a)
        checks["tau_of_a"] = [t.real, t.imag]
    out = Outputs()
    stem = _stem(cfg.out)
    out.add(stem + ".csv", csv_bytes(["seed", "z0_re", "z0_im", "start_re", "start_im", "end_re", "end_im"], rows))
    out.add(stem + ".json", _manifest(cfg, t0, checks=checks))
    out.commit()
    print(f"gate structure of a = {a}: {gs}")
    return 0


def run_verify(cfg: RunConfig, t0: float) -> int:
    results = V.run_suite(cfg.suite, lambda r: print(r.line(), flush=True))
    rows = [(r.criterion, r.suite, r.name, "pass" if r.passed else "fail", r.value, r.detail, round(r.seconds, 3))
            for r in results]
    out = Outputs()
    stem = _stem(cfg.out)
    out.add(stem + ".csv", csv_bytes(["criterion", "suite", "check", "result", "value", "detail", "seconds"], rows))
    checks = {str(r.criterion): r.passed for r in results}
    out.add(stem + ".json", _manifest(cfg, t0, checks=checks))
    out.commit()
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else 1


RUNNERS = {"misiurewicz": run_misiurewicz, "gate": run_gate, "verify": run_verify}


# entry point ---------------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="implosion", description="Lavaurs maps, escaping regions and gate structures.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--tau", help="phase, RE,IM")
    p.add_argument("--s", help="marked critical point s (parameter a for gate), RE,IM")
    p.add_argument("--a", help="alias of --s")
    p.add_argument("--grid", help="WxH")
    p.add_argument("--viewport", help="X0,Y0,X1,Y1")
    p.add_argument("--nmax", help="Lavaurs levels")
    p.add_argument("--maxiter", help="iteration budget for central/limsup")
    p.add_argument("--budget", help="basin-entry budget for Lavaurs scans")
    p.add_argument("--out", help="output path")
    p.add_argument("--threads", help="worker threads or 'auto'")
    p.add_argument("--n", help="perturbation index (limsup) or orbit length (misiurewicz)")
    p.add_argument("--seed", help="Newton seed for misiurewicz, RE,IM")
    p.add_argument("--plane", help="'s' or 'a' for central/limsup")
    p.add_argument("--quadratic", action="store_const", const="true", help="dyn: use z + z^2")
    p.add_argument("--suite", help="verify suite")
    return p


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, flags)
    except ConfigError as err:
        print(f"implosion: configuration error: {err}", file=sys.stderr)
        return 2
    try:
        if cfg.command in RASTER_COMMANDS:
            return run_raster(cfg, t0)
        return RUNNERS[cfg.command](cfg, t0)
    except (ImplosionError, FloatingPointError, OverflowError) as err:
        print(f"implosion: numerical abort: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
