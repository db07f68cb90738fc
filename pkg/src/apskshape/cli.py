"""Command-line front end: reproducible capacity sweeps, joint optimization,
PAPR tables, shaping-code reports, EXIT analysis and code design, and BER
campaigns.  Every run writes CSV artifacts plus a flat key=value manifest
carrying the config hash and seeds, sufficient to re-run the experiment.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:   # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from . import exitlab, infotheory, ldpc, shaping, txrx
from .channel import db_to_linear
from .constellation import (
    DVBS2_GAMMA_16,
    DVBS2_GAMMA_32,
    build_apsk,
    papr_db,
    shaped_pmf,
    shaping_strategy,
    with_pmf,
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _config_hash(params: dict) -> str:
    blob = ";".join(f"{k}={_fmt(params[k])}" for k in sorted(params))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def write_manifest(path: Path, params: dict) -> None:
    lines = [f"{k}={_fmt(params[k])}" for k in sorted(params)]
    path.write_text("\n".join(lines) + "\n")


def _load_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(args, defaults: dict) -> dict:
    """Layer config-file values then CLI overrides onto the defaults."""
    params = dict(defaults)
    if getattr(args, "config", None):
        file_vals = _load_config(args.config)
        unknown = set(file_vals) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        params.update(file_vals)
    for key in defaults:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            params[key] = val
    return params


def _gamma_for(M: int, index: int):
    table = DVBS2_GAMMA_16 if M == 16 else DVBS2_GAMMA_32
    if not 0 <= index < len(table):
        raise ValueError(f"gamma index {index} out of range for M={M} (0..{len(table)-1})")
    return table[index]


def _parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


# ----------------------------------------------------------------- systems --

SYSTEM_PRESETS = {
    # name: (shaped?, feedback?, distribution, shaping (ns, ks), rate (num, den))
    "uniform-bicm-35std": (False, False, "rate35-standard", None, (3, 5)),
    "uniform-bicmid-35std": (False, True, "rate35-standard", None, (3, 5)),
    "uniform-bicmid-35opt": (False, True, "rate35-optimized", None, (3, 5)),
    "shaped-bicmid-23std": (True, True, "rate23-standard", (4, 2), (2, 3)),
    "shaped-bicmid-23opt": (True, True, "rate23-optimized", (4, 2), (2, 3)),
    "shaped-bicmid-914opt": (True, True, "rate914-optimized", (3, 2), (9, 14)),
}


def build_preset_system(preset: str, n_c: int, seed: int = 0,
                        max_col_mismatch: bool = False) -> txrx.SystemConfig:
    """Instantiate a named 32-APSK R=3 system at LDPC length `n_c`."""
    if preset not in SYSTEM_PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(SYSTEM_PRESETS)}")
    shaped, feedback, dist_name, code_dims, (num, den) = SYSTEM_PRESETS[preset]
    if (n_c * num) % den:
        raise ValueError(f"n_c={n_c} incompatible with rate {num}/{den}")
    k_c = n_c * num // den
    dist = ldpc.paper_distribution(dist_name)
    code = ldpc.build_eira(n_c, k_c, dist, seed=seed)
    const = build_apsk(32, (2.64, 4.64))
    if not shaped:
        return txrx.build_system(const, code, interleaver_seed=seed, feedback=feedback)
    scode = shaping.build_shaping_code(*code_dims, seed=seed)
    strat = shaping_strategy(32, 1, scode.p0)
    return txrx.build_system(const, code, strat, scode,
                             interleaver_seed=seed, feedback=feedback)


# ------------------------------------------------------------- subcommands --

def cmd_capacity(args) -> int:
    defaults = {"m": 32, "g": 1, "p0": 0.8125, "gamma-index": 2,
                "esn0-start": 0.0, "esn0-stop": 16.0, "esn0-step": 0.5,
                "method": "quadrature", "seed": 0, "out": "capacity.csv"}
    p = _resolve(args, defaults)
    if p["esn0-stop"] < p["esn0-start"] or p["esn0-step"] <= 0:
        raise ValueError("empty Es/N0 grid: need esn0-start <= esn0-stop and step > 0")
    if not 0.5 <= p["p0"] < 1.0:
        raise ValueError(f"p0 = {p['p0']} outside [0.5, 1)")
    gamma = _gamma_for(p["m"], p["gamma-index"])
    const = build_apsk(p["m"], gamma)
    if p["p0"] > 0.5:
        const = with_pmf(const, shaping_strategy(p["m"], p["g"], p["p0"]))
    rows = []
    grid = np.arange(p["esn0-start"], p["esn0-stop"] + 1e-9, p["esn0-step"])
    for db in grid:
        bpcu = infotheory.information_rate(const, const.pmf, db_to_linear(db),
                                           method=p["method"], seed=p["seed"])
        rows.append({"method": p["method"], "M": p["m"], "g": p["g"], "p0": p["p0"],
                     "gamma": str(gamma), "esn0_db": float(db),
                     "ebn0_db": float(db) - 10 * np.log10(max(bpcu, 1e-12)),
                     "bpcu": bpcu})
    _emit(args, p, "capacity",
          ("method", "M", "g", "p0", "gamma", "esn0_db", "ebn0_db", "bpcu"), rows)
    return 0


def cmd_gain(args) -> int:
    defaults = {"m": 16, "g": 2, "rate-start": 2.5, "rate-stop": 3.3, "rate-step": 0.05,
                "esn0-start": 4.0, "esn0-stop": 15.0, "esn0-step": 0.5,
                "out": "gain.csv"}
    p = _resolve(args, defaults)
    rates = np.arange(p["rate-start"], p["rate-stop"] + 1e-9, p["rate-step"])
    if rates.size == 0:
        raise ValueError("empty rate grid")
    grid = np.arange(p["esn0-start"], p["esn0-stop"] + 1e-9, p["esn0-step"])
    records = infotheory.joint_optimize(p["m"], p["g"], rates, esn0_grid_db=grid)
    rows = [{"M": r.M, "g": r.g, "rate": r.rate, "ebn0_uniform_db": r.ebn0_uniform_db,
             "ebn0_shaped_db": r.ebn0_db, "gain_db": r.gain_db, "p0": r.p0,
             "ns": r.source_code[0], "ks": r.source_code[1], "gamma": str(r.gamma)}
            for r in records]
    _emit(args, p, "gain",
          ("M", "g", "rate", "ebn0_uniform_db", "ebn0_shaped_db", "gain_db",
           "p0", "ns", "ks", "gamma"), rows)
    return 0


def cmd_optimal_p0(args) -> int:
    defaults = {"m": 16, "g": 2, "esn0-start": 4.0, "esn0-stop": 14.0,
                "esn0-step": 1.0, "out": "optimal_p0.csv"}
    p = _resolve(args, defaults)
    grid = np.arange(p["esn0-start"], p["esn0-stop"] + 1e-9, p["esn0-step"])
    if grid.size == 0:
        raise ValueError("empty Es/N0 grid")
    sweep = infotheory.optimal_p0_sweep(p["m"], p["g"], grid)
    rows = [{"M": p["m"], "g": p["g"], "esn0_db": db, "p0_opt": p0,
             "gamma": str(gamma)} for db, p0, gamma in sweep]
    _emit(args, p, "optimal-p0", ("M", "g", "esn0_db", "p0_opt", "gamma"), rows)
    return 0


def cmd_papr(args) -> int:
    defaults = {"m": 16, "g": 2, "gamma-index": 0, "out": "papr.csv"}
    p = _resolve(args, defaults)
    gamma = _gamma_for(p["m"], p["gamma-index"])
    const = build_apsk(p["m"], gamma)
    rows = []
    for p0, ns, ks in infotheory.p0_grid():
        pmf = shaped_pmf(const, shaping_strategy(p["m"], p["g"], p0))
        rows.append({"M": p["m"], "g": p["g"], "gamma": str(gamma), "p0": p0,
                     "ns": ns, "ks": ks, "papr_db": papr_db(const, pmf)})
    rows.sort(key=lambda r: r["p0"])
    _emit(args, p, "papr", ("M", "g", "gamma", "p0", "ns", "ks", "papr_db"), rows)
    return 0


def cmd_shaping_code(args) -> int:
    defaults = {"ns": 4, "ks": 2, "seed": 0, "out": "codebook.txt"}
    p = _resolve(args, defaults)
    code = shaping.build_shaping_code(p["ns"], p["ks"], seed=p["seed"])
    out = Path(p["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    shaping.export_codebook(code, out)
    params = dict(p)
    params.update({"p0": code.p0,
                   "column_weights": "/".join(map(str, code.column_weights.tolist()))})
    write_manifest(out.with_suffix(out.suffix + ".manifest.txt"),
                   _manifest_params(params, "shaping-code"))
    print(f"(n={code.n}, k={code.k}) shaping code: p0 = {code.p0!r}")
    return 0


def cmd_exit(args) -> int:
    defaults = {"preset": "shaped-bicmid-23opt", "ebn0-db": 4.73, "ia-points": 21,
                "samples": 200000, "seed": 0, "out": "exit.csv"}
    p = _resolve(args, defaults)
    shaped, _, dist_name, code_dims, (num, den) = SYSTEM_PRESETS[p["preset"]]
    dist = ldpc.paper_distribution(dist_name)
    const = build_apsk(32, (2.64, 4.64))
    if shaped:
        scode = shaping.build_shaping_code(*code_dims, seed=p["seed"])
        spec = exitlab.DetectorSpec(const, shaping_strategy(32, 1, scode.p0), scode)
    else:
        spec = exitlab.DetectorSpec(const)
    esn0_db = p["ebn0-db"] + 10 * np.log10(3.0)
    ia = np.linspace(0.0, 1.0, int(p["ia-points"]))
    det = exitlab.detector_characteristic(spec, esn0_db, ia, int(p["samples"]), p["seed"])
    vnd = exitlab.vnd_curve(det, dist)
    cnd = exitlab.cnd_curve(dist.dc, ia)
    rows = []
    for curve in (det, vnd, cnd):
        for a, e in zip(curve.ia, curve.ie):
            rows.append({"context": curve.context, "esn0_db": esn0_db,
                         "ia": float(a), "ie": float(e)})
    _emit(args, p, "exit", ("context", "esn0_db", "ia", "ie"), rows)
    return 0


def cmd_design_ldpc(args) -> int:
    defaults = {"preset": "shaped-bicmid-23opt", "dv3-max": 25, "samples": 100000,
                "seed": 0, "lo-db": 7.0, "hi-db": 13.0, "resolution-db": 0.02,
                "out": "design.csv"}
    p = _resolve(args, defaults)
    shaped, _, dist_name, code_dims, (num, den) = SYSTEM_PRESETS[p["preset"]]
    dc = ldpc.paper_distribution(dist_name).dc
    const = build_apsk(32, (2.64, 4.64))
    if shaped:
        scode = shaping.build_shaping_code(*code_dims, seed=p["seed"])
        spec = exitlab.DetectorSpec(const, shaping_strategy(32, 1, scode.p0), scode)
    else:
        spec = exitlab.DetectorSpec(const)
    provider = exitlab.CachingDetector(spec, n_samples=int(p["samples"]), seed=p["seed"])
    space = exitlab.DegreeSearchSpace(dv3_max=int(p["dv3-max"]))
    best, thr, rows = exitlab.optimize_degrees(
        provider, num, den, dc, space, lo_db=p["lo-db"], hi_db=p["hi-db"],
        resolution_db=p["resolution-db"])
    _emit(args, p, "design-ldpc", ("dv2", "dv3", "a2", "a3", "threshold_db"), rows)
    print(f"best distribution dv={best.dv} a={tuple(round(x, 6) for x in best.a)} "
          f"threshold {thr:.2f} dB Es/N0")
    return 0


def _campaign(args, kind: str) -> int:
    defaults = {"preset": "shaped-bicmid-23opt", "nc": 16200, "ebn0-list": "4.8,5.0",
                "max-frames": 200, "target-errors": 100, "max-iterations": 100,
                "seed": 0, "workers": 1, "out": f"{kind}.csv"}
    p = _resolve(args, defaults)
    ebn0 = _parse_floats(p["ebn0-list"])
    if not ebn0:
        raise ValueError("empty Eb/N0 grid")
    if int(p["max-frames"]) <= 0:
        raise ValueError("max-frames must be positive")
    cfg = build_preset_system(p["preset"], int(p["nc"]), seed=p["seed"])
    stop = txrx.StopRule(max_frames=int(p["max-frames"]),
                         target_bit_errors=int(p["target-errors"]))
    rows = txrx.ber_campaign(cfg, ebn0, stop=stop, seed=p["seed"],
                             max_iterations=int(p["max-iterations"]),
                             config_hash=_config_hash(_manifest_params(p, kind)),
                             workers=int(p["workers"]))
    _emit(args, p, kind, txrx.CAMPAIGN_COLUMNS, rows)
    return 0


def cmd_ber(args) -> int:
    return _campaign(args, "ber")


def cmd_iters(args) -> int:
    return _campaign(args, "iters")


# ------------------------------------------------------------------ driver --

def _manifest_params(params: dict, command: str) -> dict:
    out = {f"param.{k}": v for k, v in params.items()}
    out["command"] = command
    out["version"] = __version__
    return out


def _emit(args, params: dict, command: str, columns, rows) -> None:
    out = Path(params["out"])
    if getattr(args, "out_dir", None):
        out = Path(args.out_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = _manifest_params(params, command)
    manifest["config_hash"] = _config_hash(manifest)
    write_csv(out, columns, rows)
    write_manifest(out.with_suffix(out.suffix + ".manifest.txt"), manifest)
    print(f"wrote {out} ({len(rows)} rows), config hash {manifest['config_hash']}")


def _add_common(sub):
    sub.add_argument("--config", help="TOML config file; CLI flags override it")
    sub.add_argument("--out-dir", help="directory prefix for all artifacts")


def _add_params(sub, defaults: dict):
    for key, val in defaults.items():
        flag = f"--{key}"
        if isinstance(val, bool):
            sub.add_argument(flag, type=lambda s: s.lower() in ("1", "true", "yes"))
        elif isinstance(val, int):
            sub.add_argument(flag, type=int)
        elif isinstance(val, float):
            sub.add_argument(flag, type=float)
        else:
            sub.add_argument(flag, type=str)


_COMMANDS = {
    "capacity": (cmd_capacity, {"m": 32, "g": 1, "p0": 0.8125, "gamma-index": 2,
                                "esn0-start": 0.0, "esn0-stop": 16.0, "esn0-step": 0.5,
                                "method": "quadrature", "seed": 0, "out": "capacity.csv"}),
    "gain": (cmd_gain, {"m": 16, "g": 2, "rate-start": 2.5, "rate-stop": 3.3,
                        "rate-step": 0.05, "esn0-start": 4.0, "esn0-stop": 15.0,
                        "esn0-step": 0.5, "out": "gain.csv"}),
    "optimal-p0": (cmd_optimal_p0, {"m": 16, "g": 2, "esn0-start": 4.0,
                                    "esn0-stop": 14.0, "esn0-step": 1.0,
                                    "out": "optimal_p0.csv"}),
    "papr": (cmd_papr, {"m": 16, "g": 2, "gamma-index": 0, "out": "papr.csv"}),
    "shaping-code": (cmd_shaping_code, {"ns": 4, "ks": 2, "seed": 0,
                                        "out": "codebook.txt"}),
    "exit": (cmd_exit, {"preset": "shaped-bicmid-23opt", "ebn0-db": 4.73,
                        "ia-points": 21, "samples": 200000, "seed": 0,
                        "out": "exit.csv"}),
    "design-ldpc": (cmd_design_ldpc, {"preset": "shaped-bicmid-23opt", "dv3-max": 25,
                                      "samples": 100000, "seed": 0, "lo-db": 7.0,
                                      "hi-db": 13.0, "resolution-db": 0.02,
                                      "out": "design.csv"}),
    "ber": (cmd_ber, {"preset": "shaped-bicmid-23opt", "nc": 16200,
                      "ebn0-list": "4.8,5.0", "max-frames": 200,
                      "target-errors": 100, "max-iterations": 100, "seed": 0,
                      "workers": 1, "out": "ber.csv"}),
    "iters": (cmd_iters, {"preset": "shaped-bicmid-23opt", "nc": 16200,
                          "ebn0-list": "5.4", "max-frames": 200,
                          "target-errors": 100, "max-iterations": 100, "seed": 0,
                          "workers": 1, "out": "iters.csv"}),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apskshape",
        description="Shaped LDPC-coded APSK experiments: capacity, PAPR, EXIT design, BER.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, (func, defaults) in _COMMANDS.items():
        sub = subs.add_parser(name)
        _add_common(sub)
        _add_params(sub, defaults)
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except Exception as err:   # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
