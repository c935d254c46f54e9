"""Experiment harness: config-driven campaigns with deterministic CSV output.

Configs are YAML trees with a mandatory ``kind`` key selecting the campaign:
``bounds``, ``calibrate``, ``sweep_afr``, ``sweep_blocklength``,
``skr_vs_distance``, or ``session``. Every campaign is fully specified by
its config plus the seed, and reruns produce byte-identical CSVs. A
``manifest.json`` (build id, seed, wall time) is written next to the CSVs
but is not part of the deterministic artifact set.

CSV schemas (units in parentheses):

- bounds.csv:           i_ab (bits/use), fer, beta_max
- calibration.csv:      afr, q_c, ber_af, accepted_frames, capacity_bsc
- sweep_afr.csv:        beta_l, afr, ber_af, capacity_bsc, beta_t
- sweep_blocklength.csv: n_l, beta_l, afr, ber_af, capacity_bsc, beta_t
- skr_vs_distance.csv:  d_km (km), skr_dw, skr_plob, then one column per
                        configured protocol curve (bits/quadrature-use)
- session.csv:          one row of the session report fields

Code references are small trees: ``{alist: <path>}`` loads a matrix file,
``{protograph: {base: ..., lifting_factor: Z, seed: S}}`` builds a
quasi-cyclic code. ``base`` is an explicit row-list matrix or a named
family: ``accumulator-ring`` (one repetition column of degree ``rows``
plus a ring of degree-2 parity columns; a strong low-rate structure) or
``all-ones`` (every variable in every check; high-rate when rows << cols).
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from . import ldpc, protocol, skr, wire
from .channel import LinkParams
from .protocol import SelectionPolicy, SessionConfig, VirtualChannel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_KINDS = ("bounds", "calibrate", "sweep_afr", "sweep_blocklength",
          "skr_vs_distance", "session")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# ---------------------------------------------------------------------------
# config loading / validation
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        cfg = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    return cfg


def _require(cfg: dict, key: str, types, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key '{key}'")
    v = cfg[key]
    if not isinstance(v, types):
        raise ConfigError(
            f"{where}: key '{key}' has type {type(v).__name__}, "
            f"expected {types if not isinstance(types, tuple) else '/'.join(t.__name__ for t in types)}")
    return v


def _optional(cfg: dict, key: str, types, default, where: str = "config"):
    if key not in cfg:
        return default
    return _require(cfg, key, types, where)


_NUM = (int, float)


def base_matrix(spec, where: str) -> np.ndarray:
    """Resolve a base-matrix spec: explicit rows or a named family."""
    if isinstance(spec, list):
        try:
            base = np.asarray(spec, dtype=np.int64)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.base: not a rectangular integer matrix")
        if base.ndim != 2:
            raise ConfigError(f"{where}.base: not a 2-D matrix")
        return base
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}.base: expected matrix or named family mapping")
    family = _require(spec, "family", str, f"{where}.base")
    rows = _require(spec, "rows", int, f"{where}.base")
    cols = _require(spec, "cols", int, f"{where}.base")
    if rows < 1 or cols < 1:
        raise ConfigError(f"{where}.base: rows/cols must be >= 1")
    if family == "all-ones":
        return np.ones((rows, cols), dtype=np.int64)
    if family == "accumulator-ring":
        if cols != rows + 1:
            raise ConfigError(
                f"{where}.base: accumulator-ring needs cols == rows + 1")
        base = np.zeros((rows, cols), dtype=np.int64)
        base[:, 0] = 1
        for k in range(rows):
            base[k, 1 + k] = 1
            base[(k + 1) % rows, 1 + k] = 1
        return base
    raise ConfigError(f"{where}.base.family: unknown family '{family}'")


def code_from_spec(spec, where: str = "code") -> ldpc.LdpcCode:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a mapping with 'alist' or 'protograph'")
    if "alist" in spec:
        path = _require(spec, "alist", str, where)
        try:
            return ldpc.load_alist(path)
        except (OSError, ldpc.AlistParseError) as exc:
            raise ConfigError(f"{where}.alist: {exc}")
    if "protograph" in spec:
        proto = _require(spec, "protograph", dict, where)
        base = base_matrix(_require(proto, "base", (list, dict), f"{where}.protograph"),
                           f"{where}.protograph")
        z = _require(proto, "lifting_factor", int, f"{where}.protograph")
        seed = _require(proto, "seed", int, f"{where}.protograph")
        try:
            return ldpc.build_protograph(base, z, seed=seed)
        except ValueError as exc:
            raise ConfigError(f"{where}.protograph: {exc}")
    raise ConfigError(f"{where}: needs either 'alist' or 'protograph'")


def channel_from_spec(spec, code_rate: float | None, where: str = "channel"):
    """Build a channel: {virtual: {snr | beta_l}} or {link: {...}}."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a mapping with 'virtual' or 'link'")
    if "virtual" in spec:
        v = _require(spec, "virtual", dict, where)
        if "snr" in v:
            return VirtualChannel(snr=float(_require(v, "snr", _NUM, f"{where}.virtual")))
        if "beta_l" in v:
            if code_rate is None:
                raise ConfigError(f"{where}.virtual.beta_l: requires a low-rate code")
            beta = float(_require(v, "beta_l", _NUM, f"{where}.virtual"))
            if beta <= 0:
                raise ConfigError(f"{where}.virtual.beta_l: must be > 0")
            return VirtualChannel(snr=protocol.beta_to_snr(code_rate, beta))
        raise ConfigError(f"{where}.virtual: needs 'snr' or 'beta_l'")
    if "link" in spec:
        lk = _require(spec, "link", dict, where)
        kwargs = {}
        for key in ("distance_km", "attenuation_db_per_km", "quantum_efficiency",
                    "electronic_noise", "excess_noise_bob", "modulation_variance"):
            kwargs[key] = float(_require(lk, key, _NUM, f"{where}.link"))
        try:
            return LinkParams(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{where}.link: {exc}")
    raise ConfigError(f"{where}: needs either 'virtual' or 'link'")


def _afr_grid(cfg: dict, where: str = "config") -> np.ndarray:
    grid = _optional(cfg, "afr_grid", (list, dict), None, where)
    if grid is None:
        return np.linspace(0.01, 1.0, 100)
    if isinstance(grid, dict):
        lo = float(_require(grid, "start", _NUM, f"{where}.afr_grid"))
        hi = float(_require(grid, "stop", _NUM, f"{where}.afr_grid"))
        n = _require(grid, "points", int, f"{where}.afr_grid")
        if n < 1:
            raise ConfigError(f"{where}.afr_grid.points: must be >= 1")
        vals = np.geomspace(lo, hi, n) if _optional(
            grid, "log", bool, False, f"{where}.afr_grid") else np.linspace(lo, hi, n)
    else:
        try:
            vals = np.asarray([float(v) for v in grid])
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.afr_grid: entries must be numbers")
    if np.any((vals <= 0) | (vals > 1)):
        raise ConfigError(f"{where}.afr_grid: AFR values must lie in (0, 1]")
    return vals


def validate_config(path) -> dict:
    """Schema check without execution; returns {kind, warnings: [...]}."""
    cfg = load_config(path)
    kind = _require(cfg, "kind", str)
    if kind not in _KINDS:
        raise ConfigError(f"key 'kind': unknown campaign kind '{kind}'")
    warnings: list[str] = []

    if kind == "bounds":
        i_ab = _require(cfg, "i_ab", list)
        if not i_ab or not all(isinstance(v, _NUM) and 0 < v for v in i_ab):
            raise ConfigError("key 'i_ab': needs a list of positive numbers")
        pts = _optional(cfg, "fer_points", int, 1000)
        if pts < 2:
            raise ConfigError("key 'fer_points': must be >= 2")
        fer_max = _optional(cfg, "fer_max", _NUM, 0.999)
        if not 0 <= fer_max < 1:
            raise ConfigError("key 'fer_max': must lie in [0, 1)")
        return {"kind": kind, "warnings": warnings}

    seed = _require(cfg, "seed", int)
    if seed < 0:
        raise ConfigError("key 'seed': must be non-negative")

    if kind in ("calibrate", "sweep_afr", "sweep_blocklength", "session"):
        frames = _require(cfg, "frames", int)
        if frames < 1:
            raise ConfigError("key 'frames': must be >= 1")
        _require(cfg, "code_low", dict)
        dim = _optional(cfg, "dimension", int, 8)
        if dim not in (1, 2, 4, 8):
            raise ConfigError("key 'dimension': must be one of 1, 2, 4, 8")
        iters = _optional(cfg, "max_iterations", int, 100)
        if iters < 1:
            raise ConfigError("key 'max_iterations': must be >= 1")

    if kind == "calibrate":
        afr = _require(cfg, "target_afr", _NUM)
        if not 0 < afr <= 1:
            raise ConfigError("key 'target_afr': must lie in (0, 1]")
        _require(cfg, "channel", dict)
        _afr_grid(cfg)
        if math.ceil(cfg["frames"] * afr) < 100:
            warnings.append(
                f"only {math.ceil(cfg['frames'] * afr)} accepted frames at "
                f"AFR={afr}; calibration is statistically weak (want >= 100)")

    elif kind == "sweep_afr":
        betas = _require(cfg, "beta_l", list)
        if not betas or not all(isinstance(b, _NUM) and b > 0 for b in betas):
            raise ConfigError("key 'beta_l': needs a list of positive numbers")
        grid = _afr_grid(cfg)
        worst = math.ceil(cfg["frames"] * min(grid))
        if worst < 100:
            warnings.append(
                f"smallest AFR grid point accepts only {worst} frames; "
                "estimates there are statistically weak (want >= 100)")

    elif kind == "sweep_blocklength":
        beta = _require(cfg, "beta_l", _NUM)
        if beta <= 0:
            raise ConfigError("key 'beta_l': must be > 0")
        zs = _require(cfg, "lifting_factors", list)
        if not zs or not all(isinstance(z, int) and z >= 1 for z in zs):
            raise ConfigError("key 'lifting_factors': needs a list of ints >= 1")
        if "protograph" not in cfg["code_low"]:
            raise ConfigError("key 'code_low': sweep_blocklength needs a protograph spec")
        _afr_grid(cfg)

    elif kind == "skr_vs_distance":
        _require(cfg, "link", dict)
        for key in ("quantum_efficiency", "electronic_noise",
                    "excess_noise_bob", "attenuation_db_per_km"):
            _require(cfg["link"], key, _NUM, "key 'link'")
        d = _require(cfg, "distances", dict)
        for key in ("start", "stop"):
            _require(d, key, _NUM, "key 'distances'")
        pts = _require(d, "points", int, "key 'distances'")
        if pts < 2:
            raise ConfigError("key 'distances.points': must be >= 2")
        va = _require(cfg, "v_a_range", list)
        if len(va) != 2 or not all(isinstance(v, _NUM) for v in va) or not 0 < va[0] < va[1]:
            raise ConfigError("key 'v_a_range': needs [lo, hi] with 0 < lo < hi")
        curves = _require(cfg, "curves", list)
        for i, c in enumerate(curves):
            if not isinstance(c, dict):
                raise ConfigError(f"key 'curves[{i}]': must be a mapping")
            _require(c, "label", str, f"key 'curves[{i}]'")
            if "beta_t" in c:
                _require(c, "beta_t", _NUM, f"key 'curves[{i}]'")
            else:
                for key in ("beta_l", "beta_h", "ber_af"):
                    _require(c, key, _NUM, f"key 'curves[{i}]'")
            afr = _require(c, "afr", _NUM, f"key 'curves[{i}]'")
            if not 0 < afr <= 1:
                raise ConfigError(f"key 'curves[{i}].afr': must lie in (0, 1]")
        if "n_privacy" in cfg:
            warnings.append(
                "n_privacy only annotates the manifest; the computed rates are asymptotic")

    elif kind == "session":
        _require(cfg, "code_high", dict)
        _require(cfg, "channel", dict)
        afr = _require(cfg, "target_afr", _NUM)
        if not 0 < afr <= 1:
            raise ConfigError("key 'target_afr': must lie in (0, 1]")
        p = _optional(cfg, "crossover_p", _NUM, 0.01)
        if not 0 < p < 0.5:
            raise ConfigError("key 'crossover_p': must lie in (0, 0.5)")
        _optional(cfg, "require_syndrome_ok", bool, False)

    return {"kind": kind, "warnings": warnings}


# ---------------------------------------------------------------------------
# CSV / manifest / checkpoints
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _build_id() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10,
                             cwd=Path(__file__).resolve().parent)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unversioned"


def write_manifest(outdir: Path, kind: str, seed, wall_time: float,
                   extra: dict | None = None) -> None:
    manifest = {
        "build_id": _build_id(),
        "kind": kind,
        "seed": seed,
        "wall_time_s": round(wall_time, 3),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        manifest.update(extra)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _config_digest(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


class Checkpoints:
    """Per-grid-point CSV fragments keyed by config digest; a rerun of an
    interrupted campaign reuses finished points and removes the fragments
    once the final CSV is written."""

    def __init__(self, outdir: Path, kind: str, cfg: dict):
        self.dir = outdir / f".checkpoint-{kind}-{_config_digest(cfg)}"

    def load(self, point: str):
        f = self.dir / f"{point}.npz"
        if not f.exists():
            return None
        with np.load(f) as data:
            return {k: data[k] for k in data.files}

    def save(self, point: str, **arrays) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        tmp = self.dir / f"{point}.npz.tmp"
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        tmp.rename(self.dir / f"{point}.npz")

    def clear(self) -> None:
        if self.dir.exists():
            for f in self.dir.iterdir():
                f.unlink()
            self.dir.rmdir()


# ---------------------------------------------------------------------------
# campaign implementations
# ---------------------------------------------------------------------------

def run_bounds(cfg: dict, outdir: Path) -> Path:
    i_ab_list = cfg["i_ab"]
    pts = cfg.get("fer_points", 1000)
    fer_max = cfg.get("fer_max", 0.999)
    grid = np.linspace(0.0, fer_max, pts)
    rows = []
    for i_ab in i_ab_list:
        curve = skr.fer_beta_curve(float(i_ab), grid)
        rows.extend((float(i_ab), fer, beta) for fer, beta in curve)
    out = outdir / "bounds.csv"
    write_csv(out, ["i_ab", "fer", "beta_max"], rows)
    return out


def _stage1_summary(code_l, channel, frames, seed, dimension, max_iterations):
    batch = protocol.simulate_stage1(
        code_l, channel, frames, seed,
        dimension=dimension, max_iterations=max_iterations)
    return batch


def run_calibrate(cfg: dict, outdir: Path, seed: int) -> Path:
    code_l = code_from_spec(cfg["code_low"], "code_low")
    channel = channel_from_spec(cfg["channel"], code_l.R)
    grid = _afr_grid(cfg)
    result = protocol.calibrate(
        code_l, channel, float(cfg["target_afr"]), cfg["frames"], seed,
        afr_grid=grid, dimension=cfg.get("dimension", 8),
        max_iterations=cfg.get("max_iterations", 100))
    out = outdir / "calibration.csv"
    write_csv(out, list(protocol.CalibrationResult.TABLE_COLUMNS), result.table)
    click.echo(f"q_c={result.q_c:.6g} ber_af={result.ber_af_estimate:.6g}")
    if result.warning:
        click.echo(f"warning: {result.warning}", err=True)
    return out


def _sweep_point_rows(batch, grid, beta_l, beta_h, prefix=()):
    """Rows (prefix..., beta_l, afr, ber_af, capacity_bsc, beta_t) for one
    simulated operating point, via the ranked cumulative BER table."""
    order, cum_ber = protocol._ranked_cumulative_ber(batch)
    K = batch.num_frames
    rows = []
    for afr in grid:
        n = min(max(1, math.ceil(K * afr)), K)
        ber = float(cum_ber[n - 1])
        h = skr.binary_entropy(ber)
        rows.append(tuple(prefix) + (beta_l, float(afr), ber, 1.0 - h,
                                     beta_l * beta_h * (1.0 - h)))
    return rows


def run_sweep_afr(cfg: dict, outdir: Path, seed: int) -> Path:
    code_l = code_from_spec(cfg["code_low"], "code_low")
    grid = _afr_grid(cfg)
    beta_h = float(cfg.get("beta_h", 1.0))
    ckpt = Checkpoints(outdir, "sweep_afr", {**cfg, "seed": seed})
    rows = []
    for beta_l in cfg["beta_l"]:
        beta_l = float(beta_l)
        point = f"beta_l={beta_l:.6g}"
        cached = ckpt.load(point)
        if cached is None:
            channel = VirtualChannel(snr=protocol.beta_to_snr(code_l.R, beta_l))
            batch = _stage1_summary(code_l, channel, cfg["frames"], seed,
                                    cfg.get("dimension", 8),
                                    cfg.get("max_iterations", 100))
            ckpt.save(point, q=batch.q, info_errors=batch.info_errors,
                      n_info=np.array(batch.s.shape[1]))
            q, errs, n_info = batch.q, batch.info_errors, batch.s.shape[1]
        else:
            q, errs, n_info = cached["q"], cached["info_errors"], int(cached["n_info"])
        batch = _SummaryBatch(q, errs, n_info)
        rows.extend(_sweep_point_rows(batch, grid, beta_l, beta_h))
    out = outdir / "sweep_afr.csv"
    write_csv(out, ["beta_l", "afr", "ber_af", "capacity_bsc", "beta_t"], rows)
    ckpt.clear()
    return out


class _SummaryBatch:
    """Duck-typed stand-in for Stage1Batch carrying only what the ranked
    cumulative-BER table needs (q, info_errors, frame/bit counts)."""

    def __init__(self, q, info_errors, n_info):
        self.q = np.asarray(q)
        self.info_errors = np.asarray(info_errors)
        self.s = np.empty((0, n_info), dtype=np.uint8)

    @property
    def num_frames(self):
        return len(self.q)


def run_sweep_blocklength(cfg: dict, outdir: Path, seed: int) -> Path:
    beta_l = float(cfg["beta_l"])
    beta_h = float(cfg.get("beta_h", 1.0))
    grid = _afr_grid(cfg)
    proto = cfg["code_low"]["protograph"]
    ckpt = Checkpoints(outdir, "sweep_blocklength", {**cfg, "seed": seed})
    rows = []
    for z in cfg["lifting_factors"]:
        spec = {"protograph": {**proto, "lifting_factor": int(z)}}
        code_l = code_from_spec(spec, "code_low")
        point = f"Z={z}"
        cached = ckpt.load(point)
        if cached is None:
            channel = VirtualChannel(snr=protocol.beta_to_snr(code_l.R, beta_l))
            batch = _stage1_summary(code_l, channel, cfg["frames"], seed,
                                    cfg.get("dimension", 8),
                                    cfg.get("max_iterations", 100))
            ckpt.save(point, q=batch.q, info_errors=batch.info_errors,
                      n_info=np.array(batch.s.shape[1]))
            q, errs, n_info = batch.q, batch.info_errors, batch.s.shape[1]
        else:
            q, errs, n_info = cached["q"], cached["info_errors"], int(cached["n_info"])
        summary = _SummaryBatch(q, errs, n_info)
        rows.extend(_sweep_point_rows(summary, grid, beta_l, beta_h,
                                      prefix=(code_l.N,)))
    out = outdir / "sweep_blocklength.csv"
    write_csv(out, ["n_l", "beta_l", "afr", "ber_af", "capacity_bsc", "beta_t"], rows)
    ckpt.clear()
    return out


def golden_max(f, lo: float, hi: float, tol: float = 1e-6,
               max_iter: int = 200) -> tuple[float, float]:
    """Golden-section maximisation on [lo, hi]; returns (x, f(x)).

    Works for unimodal objectives and converges to the better boundary for
    monotone ones. Deterministic (no randomness, fixed shrink factor).
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def run_skr_vs_distance(cfg: dict, outdir: Path) -> Path:
    link = cfg["link"]
    d = cfg["distances"]
    dists = np.linspace(float(d["start"]), float(d["stop"]), d["points"])
    va_lo, va_hi = (float(v) for v in cfg["v_a_range"])
    curves = cfg["curves"]
    alpha = float(link["attenuation_db_per_km"])

    def params(dist, va):
        return LinkParams(
            distance_km=float(dist), attenuation_db_per_km=alpha,
            quantum_efficiency=float(link["quantum_efficiency"]),
            electronic_noise=float(link["electronic_noise"]),
            excess_noise_bob=float(link["excess_noise_bob"]),
            modulation_variance=va)

    def curve_terms(c):
        if "beta_t" in c:
            return float(c["beta_t"]), 1.0, 0.0
        return float(c["beta_l"]), float(c["beta_h"]), float(c["ber_af"])

    header = ["d_km", "skr_dw", "skr_plob"] + [c["label"] for c in curves]
    rows = []
    for dist in dists:
        def dw(va):
            p = params(dist, va)
            return skr.mutual_info_awgn(
                _link_snr(p)) - skr.holevo_gaussian(p)
        _, skr_dw = golden_max(dw, va_lo, va_hi)
        row = [float(dist), skr_dw, skr.plob(float(dist), alpha)]
        for c in curves:
            beta_l, beta_h, ber_af = curve_terms(c)
            afr = float(c["afr"])
            fer_h = float(c.get("fer_h", 0.0))
            lo, hi = va_lo, float(c.get("v_a_max", va_hi))

            def objective(va):
                p = params(dist, va)
                rep = skr.skr_two_step(afr, fer_h, beta_l, beta_h, ber_af,
                                       skr.mutual_info_awgn(_link_snr(p)),
                                       skr.holevo_gaussian(p))
                return rep.skr_t
            _, best = golden_max(objective, lo, hi)
            row.append(best)
        rows.append(row)
    out = outdir / "skr_vs_distance.csv"
    write_csv(out, header, rows)
    return out


def _link_snr(p: LinkParams) -> float:
    from .channel import effective_snr
    return effective_snr(p)


def _session_config(cfg: dict, seed: int) -> SessionConfig:
    code_l = code_from_spec(cfg["code_low"], "code_low")
    code_h = code_from_spec(cfg["code_high"], "code_high")
    channel = channel_from_spec(cfg["channel"], code_l.R)
    return SessionConfig(
        code_low=code_l,
        code_high=code_h,
        channel=channel,
        num_frames=cfg["frames"],
        seed=seed,
        policy=SelectionPolicy(
            mode="by_afr", target_afr=float(cfg["target_afr"]),
            require_syndrome_ok=bool(cfg.get("require_syndrome_ok", False))),
        crossover_p=float(cfg.get("crossover_p", 0.01)),
        dimension=cfg.get("dimension", 8),
        max_iterations_low=cfg.get("max_iterations", 100),
        max_iterations_high=cfg.get("max_iterations_high", 200),
        hash_tag_bits=cfg.get("hash_tag_bits", 32),
        session_id=cfg.get("session_id", 1),
    )


def run_session_campaign(cfg: dict, outdir: Path, seed: int,
                         listen: str | None, connect: str | None) -> Path:
    sc = _session_config(cfg, seed)
    if listen:
        host, port = _host_port(listen)
        report = wire.run_listener(sc, host, port).as_dict()
    elif connect:
        host, port = _host_port(connect)
        report = wire.run_connector(sc, host, port).as_dict()
    else:
        full = protocol.run_session(sc)
        report = full.as_dict()
        report["transcript_bytes"] = sum(full.transcript_bytes.values())
    out = outdir / "session.csv"
    keys = list(report.keys())
    write_csv(out, keys, [[report[k] if report[k] is not None else "" for k in keys]])
    click.echo(json.dumps(report, default=str, indent=2))
    return out


def _host_port(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"address '{addr}' is not host:port")
    return host or "127.0.0.1", int(port)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="YAML campaign config")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the config seed")(fn)
    fn = click.option("--workers", type=int, default=1,
                      help="worker count (results are schedule-independent)")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=None,
                      help="override the config output directory")(fn)
    return fn


def _prepare(config_path, seed, out_dir, expected_kinds):
    cfg = load_config(config_path)
    report = validate_config(config_path)
    if report["kind"] not in expected_kinds:
        raise ConfigError(
            f"key 'kind': '{report['kind']}' not valid here (expected "
            f"{' or '.join(expected_kinds)})")
    for w in report["warnings"]:
        click.echo(f"warning: {w}", err=True)
    if seed is not None:
        cfg["seed"] = seed
    outdir = Path(out_dir or cfg.get("output", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    return cfg, outdir


def _finish(outdir: Path, kind: str, seed, t0: float, extra=None):
    write_manifest(outdir, kind, seed, time.monotonic() - t0, extra)


@click.group()
def main():
    """Simulation harness for two-step CV-QKD information reconciliation."""


def _run(body):
    try:
        body()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 3
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


@main.command()
@_common_options
def bounds(config_path, seed, workers, out_dir):
    """Achievable-efficiency bound tables (beta ceiling vs FER)."""
    def body():
        t0 = time.monotonic()
        cfg, outdir = _prepare(config_path, seed, out_dir, ("bounds",))
        out = run_bounds(cfg, outdir)
        _finish(outdir, "bounds", cfg.get("seed"), t0)
        click.echo(f"wrote {out}")
    _run(body)


@main.command()
@_common_options
def calibrate(config_path, seed, workers, out_dir):
    """Empirical q cutoff and accepted-fraction BER calibration."""
    def body():
        t0 = time.monotonic()
        cfg, outdir = _prepare(config_path, seed, out_dir, ("calibrate",))
        out = run_calibrate(cfg, outdir, cfg["seed"])
        _finish(outdir, "calibrate", cfg["seed"], t0)
        click.echo(f"wrote {out}")
    _run(body)


@main.command()
@_common_options
def sweep(config_path, seed, workers, out_dir):
    """Monte-Carlo sweeps over AFR grids (per beta_l or per blocklength)."""
    def body():
        t0 = time.monotonic()
        cfg, outdir = _prepare(config_path, seed, out_dir,
                               ("sweep_afr", "sweep_blocklength"))
        if cfg["kind"] == "sweep_afr":
            out = run_sweep_afr(cfg, outdir, cfg["seed"])
        else:
            out = run_sweep_blocklength(cfg, outdir, cfg["seed"])
        _finish(outdir, cfg["kind"], cfg["seed"], t0)
        click.echo(f"wrote {out}")
    _run(body)


@main.command(name="skr")
@_common_options
def skr_cmd(config_path, seed, workers, out_dir):
    """Secret-key-rate vs distance tables (Devetak-Winter, PLOB, protocol)."""
    def body():
        t0 = time.monotonic()
        cfg, outdir = _prepare(config_path, seed, out_dir, ("skr_vs_distance",))
        out = run_skr_vs_distance(cfg, outdir)
        extra = {"n_privacy": cfg["n_privacy"]} if "n_privacy" in cfg else None
        _finish(outdir, "skr_vs_distance", cfg.get("seed"), t0, extra)
        click.echo(f"wrote {out}")
    _run(body)


@main.command()
@_common_options
@click.option("--listen", default=None, metavar="HOST:PORT",
              help="serve one session as the mapping side")
@click.option("--connect", default=None, metavar="HOST:PORT",
              help="run one session as the decoding side")
def session(config_path, seed, workers, out_dir, listen, connect):
    """End-to-end reconciliation session (in-process or over the wire)."""
    def body():
        if listen and connect:
            raise ConfigError("--listen and --connect are mutually exclusive")
        t0 = time.monotonic()
        cfg, outdir = _prepare(config_path, seed, out_dir, ("session",))
        out = run_session_campaign(cfg, outdir, cfg["seed"], listen, connect)
        _finish(outdir, "session", cfg["seed"], t0)
        click.echo(f"wrote {out}")
    _run(body)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def validate(config_path):
    """Check a config file without running anything."""
    def body():
        report = validate_config(config_path)
        for w in report["warnings"]:
            click.echo(f"warning: {w}", err=True)
        click.echo(f"ok: valid {report['kind']} config")
    _run(body)


if __name__ == "__main__":
    main()
