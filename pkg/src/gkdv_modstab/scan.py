"""Parameter sweeps over (a, E, c).

Every grid point runs the same pipeline as a single ``stability`` call
(:func:`analyze_point`).  Points are farmed out to a process pool and the
records are yielded in grid order, so the output does not depend on the
number of workers.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .conserved import brackets, gradients
from .errors import DegenerateIndex, DegenerateOrbit, ModStabError, NoPeriodicOrbit
from .evans import fit_expansion, spectrum_near_origin
from .modulation import classify_modulational, coperiodic_index, dispersion_cubic, whitham_linearization
from .nonlinearity import from_tag
from .wave import make_wave, sample_profile

__all__ = [
    "ScanConfig",
    "ScanRecord",
    "STAGES",
    "OUTCOMES",
    "CSV_COLUMNS",
    "analyze_point",
    "grid_points",
    "run_scan",
    "write_csv",
    "write_jsonl",
    "format_float",
]

STAGES = ("conserved", "cubic", "whitham", "evans")
OUTCOMES = ("Stable", "Unstable", "Indeterminate", "NoPeriodicOrbit", "Degenerate", "Error")
PARAMS = ("a", "E", "c")


@dataclass(frozen=True)
class ScanConfig:
    nl_tag: str
    ranges: dict = field(default_factory=dict)  # name -> (min, max, count)
    fixed: dict = field(default_factory=dict)  # name -> value for unswept parameters
    pipeline: tuple = ("conserved", "cubic", "whitham")
    tol_quad: float = 1e-12
    tol_fd: float = 1e-7
    tol_classify: float = 1e-8
    evans_radius: float = 1e-2
    evans_kappa: float = 1e-2
    workers: int = 1
    record_timing: bool = True

    def __post_init__(self):
        from_tag(self.nl_tag)
        for name, rng in self.ranges.items():
            if name not in PARAMS:
                raise ValueError(f"unknown scan parameter {name!r}")
            lo, hi, n = rng
            if int(n) != n or n < 1:
                raise ValueError(f"{name}: count must be a positive integer, got {n!r}")
            if lo > hi:
                raise ValueError(f"{name}: min {lo} exceeds max {hi}")
        for name in PARAMS:
            if name not in self.ranges and name not in self.fixed:
                raise ValueError(f"parameter {name!r} is neither swept nor fixed")
        for name in self.fixed:
            if name not in PARAMS:
                raise ValueError(f"unknown fixed parameter {name!r}")
        unknown = set(self.pipeline) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown pipeline stages {sorted(unknown)}")
        if not self.pipeline:
            raise ValueError("at least one pipeline stage must be enabled")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def stages(self) -> frozenset:
        # later stages need the earlier ones
        on = set(self.pipeline)
        if on & {"cubic", "whitham", "evans"}:
            on |= {"conserved", "cubic"}
        return frozenset(on)


@dataclass
class ScanRecord:
    a: float
    E: float
    c: float
    outcome: str = "Error"
    T: float | None = None
    M: float | None = None
    P: float | None = None
    H: float | None = None
    bTMP: float | None = None
    bTP: float | None = None
    bMP: float | None = None
    disc: float | None = None
    eigA_re1: float | None = None
    eigA_im1: float | None = None
    eigA_re2: float | None = None
    eigA_im2: float | None = None
    eigA_re3: float | None = None
    eigA_im3: float | None = None
    c30_re: float | None = None
    c30_im: float | None = None
    c21_re: float | None = None
    c21_im: float | None = None
    c12_re: float | None = None
    c12_im: float | None = None
    c03_re: float | None = None
    c03_im: float | None = None
    mu_re1: float | None = None
    mu_im1: float | None = None
    mu_re2: float | None = None
    mu_im2: float | None = None
    mu_re3: float | None = None
    mu_im3: float | None = None
    coperiodic: int | None = None
    flags: str = ""
    timing_ms: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


CSV_COLUMNS = tuple(f.name for f in fields(ScanRecord))


def _sorted_complex(z):
    return sorted((complex(x) for x in z), key=lambda w: (round(w.real, 12), w.imag))


def analyze_point(nl_tag: str, a: float, E: float, c: float, cfg: ScanConfig | None = None) -> ScanRecord:
    """Run the enabled pipeline stages at one parameter point.  Library errors
    are captured in the record, never raised."""
    if cfg is None:
        cfg = ScanConfig(nl_tag, fixed={"a": a, "E": E, "c": c})
    stages = cfg.stages()
    rec = ScanRecord(float(a), float(E), float(c))
    flags = []
    t0 = time.perf_counter()
    try:
        nl = from_tag(nl_tag)
        wave = make_wave(nl, a, E, c, tol=cfg.tol_quad)
        rec.T = wave.T
        rec.outcome = "Indeterminate"
        if "conserved" in stages:
            cs = gradients(nl, wave, rtol=cfg.tol_fd, tol=cfg.tol_quad)
            rec.M, rec.P, rec.H = cs.M, cs.P, cs.H
            br = brackets(cs)
            rec.bTMP, rec.bTP, rec.bMP = br.TMP_aEc, br.TP_Ec, br.MP_aE
        if "cubic" in stages:
            dc = dispersion_cubic(br)
            rec.disc = dc.disc
            rec.outcome = str(classify_modulational(dc, cfg.tol_classify))
            try:
                rec.coperiodic = coperiodic_index(br, cs.d("T", "E")).sign
            except DegenerateIndex:
                rec.coperiodic = 0
                flags.append("coperiodic_degenerate")
        if "whitham" in stages:
            try:
                wl = whitham_linearization(nl, wave, cs)
                for j, z in enumerate(_sorted_complex(wl.eigs), 1):
                    setattr(rec, f"eigA_re{j}", z.real)
                    setattr(rec, f"eigA_im{j}", z.imag)
                if wl.hyperbolic != (rec.outcome != "Unstable"):
                    flags.append("whitham_disagrees")
            except ModStabError as exc:
                flags.append(f"whitham_failed:{type(exc).__name__}")
        if "evans" in stages:
            try:
                prof = sample_profile(nl, wave)
                ex = fit_expansion(nl, prof, radius=cfg.evans_radius)
                for name in ("c30", "c21", "c12", "c03"):
                    z = getattr(ex, name)
                    setattr(rec, f"{name}_re", z.real)
                    setattr(rec, f"{name}_im", z.imag)
                mus = spectrum_near_origin(nl, prof, cfg.evans_kappa, dc)
                for j, z in enumerate(_sorted_complex(mus), 1):
                    setattr(rec, f"mu_re{j}", z.real)
                    setattr(rec, f"mu_im{j}", z.imag)
            except ModStabError as exc:
                flags.append(f"evans_failed:{type(exc).__name__}")
    except NoPeriodicOrbit:
        rec.outcome = "NoPeriodicOrbit"
    except DegenerateOrbit:
        rec.outcome = "Degenerate"
    except (ModStabError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        rec.outcome = "Error"
        flags.append(f"error:{type(exc).__name__}")
    rec.flags = ";".join(flags)
    if cfg.record_timing:
        rec.timing_ms = 1e3 * (time.perf_counter() - t0)
    return rec


def _axis(cfg: ScanConfig, name: str):
    if name in cfg.ranges:
        lo, hi, n = cfg.ranges[name]
        return np.linspace(lo, hi, int(n)).tolist()
    return [float(cfg.fixed[name])]


def grid_points(cfg: ScanConfig):
    """(a, E, c) triples in output order: a slowest, c fastest."""
    return list(itertools.product(*(_axis(cfg, p) for p in PARAMS)))


def _work(args):
    cfg, (a, E, c) = args
    return analyze_point(cfg.nl_tag, a, E, c, cfg)


def run_scan(cfg: ScanConfig):
    """Yield one :class:`ScanRecord` per grid point, in grid order."""
    jobs = [(cfg, p) for p in grid_points(cfg)]
    if cfg.workers == 1:
        for job in jobs:
            yield _work(job)
        return
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        yield from pool.map(_work, jobs, chunksize=1)


def format_float(x, digits: int = 17) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return f"{x:.{digits}g}"


def _cell(v, digits):
    if isinstance(v, str):
        return v
    return format_float(v, digits)


def write_csv(records, stream=None, digits: int = 17) -> str | None:
    """Header plus one row per record.  Returns the text when ``stream`` is None."""
    own = stream is None
    if own:
        stream = io.StringIO()
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict()
        w.writerow([_cell(d[k], digits) for k in CSV_COLUMNS])
    return stream.getvalue() if own else None


def record_json(r: ScanRecord, digits: int = 17) -> str:
    """One JSON object; floats are rounded to ``digits`` significant digits."""
    d = {}
    for k, v in r.to_dict().items():
        if isinstance(v, float):
            d[k] = float(format_float(v, digits)) if math.isfinite(v) else None
        else:
            d[k] = v
    return json.dumps(d)


def write_jsonl(records, stream=None, digits: int = 17) -> str | None:
    own = stream is None
    if own:
        stream = io.StringIO()
    for r in records:
        stream.write(record_json(r, digits) + "\n")
    return stream.getvalue() if own else None
