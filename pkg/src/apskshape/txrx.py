"""Full transmit chain and iterative BICM-ID receiver.

Transmit: LDPC encode -> interleave -> split off the shaping-path bits ->
shaping encode -> second interleave -> per-symbol assembly of shaped and
unshaped label bits -> APSK map.

Receive: the demapper, shaping decoder and LDPC decoder exchange extrinsic
LLRs.  One global iteration is one demap pass, one shaping decode pass in
each direction, and one LDPC sum-product sweep; the loop halts early when
the LDPC syndrome clears.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import ldpc as ldpc_mod
from . import shaping as shaping_mod
from .channel import complex_awgn, db_to_linear, frame_rng
from .constellation import Constellation, ShapingStrategy, with_pmf
from .demod import demap_block, initial_priors


def overall_rate(r_c: float, r_s: float, m: int, g: int) -> float:
    """Information bits per symbol: R = Rc [m + g (Rs - 1)]."""
    if not 0 < r_c <= 1 or not 0 < r_s <= 1:
        raise ValueError("code rates must lie in (0, 1]")
    if not 0 <= g < m:
        raise ValueError("need 0 <= g < m")
    return r_c * (m + g * (r_s - 1.0))


def random_permutation(n: int, seed: int):
    return np.random.default_rng(seed).permutation(n)


@dataclass
class SystemConfig:
    """A fully-resolved transmit/receive configuration.

    Build through `build_system`, which derives the block lengths from the
    LDPC length, the shaping code and the per-symbol bit budget, and checks
    the integer consistency of the whole chain.
    """

    constellation: Constellation          # normalized under the shaped pmf
    strategy: ShapingStrategy | None
    shaping_code: shaping_mod.ShapingCode | None
    ldpc: ldpc_mod.LdpcCode
    n_blocks: int                         # shaping blocks per frame
    k_shaped: int                         # bits entering the shaping path
    n_shaped: int                         # bits leaving the shaping path
    n_symbols: int
    pi1: np.ndarray
    pi2: np.ndarray | None
    feedback: bool = True                 # False: plain BICM (demap once)
    ldpc_iters_per_pass: int = 1
    add_static_prior: bool = False
    interleaver_seed: int = 0

    @property
    def g(self) -> int:
        return 0 if self.strategy is None else self.strategy.g

    @property
    def m(self) -> int:
        return self.constellation.m

    @property
    def rate(self) -> float:
        return self.ldpc.k / self.n_symbols

    def shaped_positions(self):
        return list(self.strategy.bit_positions) if self.strategy else []

    def unshaped_positions(self):
        shaped = set(self.shaped_positions())
        return [p for p in range(self.m) if p not in shaped]


@dataclass
class FrameResult:
    bits: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def build_system(constellation: Constellation, ldpc_code: ldpc_mod.LdpcCode,
                 strategy: ShapingStrategy | None = None,
                 shaping_code: shaping_mod.ShapingCode | None = None,
                 interleaver_seed: int = 0, feedback: bool = True,
                 ldpc_iters_per_pass: int = 1,
                 add_static_prior: bool = False) -> SystemConfig:
    m = constellation.m
    n_c = ldpc_code.n
    if (strategy is None) != (shaping_code is None):
        raise ValueError("strategy and shaping_code must be given together")
    if strategy is None:
        if n_c % m:
            raise ValueError(f"LDPC length {n_c} not divisible by m={m}")
        return SystemConfig(
            constellation=constellation, strategy=None, shaping_code=None,
            ldpc=ldpc_code, n_blocks=0, k_shaped=0, n_shaped=0,
            n_symbols=n_c // m,
            pi1=random_permutation(n_c, interleaver_seed),
            pi2=None, feedback=feedback,
            ldpc_iters_per_pass=ldpc_iters_per_pass,
            add_static_prior=add_static_prior,
            interleaver_seed=interleaver_seed,
        )

    g = strategy.g
    if abs(strategy.p0 - shaping_code.p0) > 1e-12:
        raise ValueError("strategy p0 does not match the shaping code's bias")
    # N_s / (N_c - K_s) = g / (m - g)  with  K_s = L k_s, N_s = L n_s
    denom = shaping_code.n * (m - g) + g * shaping_code.k
    if (g * n_c) % denom:
        raise ValueError(
            f"no integer number of shaping blocks: g*Nc = {g * n_c} not divisible by {denom}"
        )
    n_blocks = g * n_c // denom
    k_shaped = n_blocks * shaping_code.k
    n_shaped = n_blocks * shaping_code.n
    if n_shaped * (m - g) != g * (n_c - k_shaped):
        raise AssertionError("length bookkeeping violated")
    n_symbols = (n_c - k_shaped + n_shaped) // m
    if n_symbols * m != n_c - k_shaped + n_shaped or n_shaped != n_symbols * g:
        raise ValueError("frame does not fill an integer number of symbols")
    shaped_const = with_pmf(constellation, strategy)
    return SystemConfig(
        constellation=shaped_const, strategy=strategy, shaping_code=shaping_code,
        ldpc=ldpc_code, n_blocks=n_blocks, k_shaped=k_shaped, n_shaped=n_shaped,
        n_symbols=n_symbols,
        pi1=random_permutation(n_c, interleaver_seed),
        pi2=random_permutation(n_shaped, interleaver_seed + 1),
        feedback=feedback, ldpc_iters_per_pass=ldpc_iters_per_pass,
        add_static_prior=add_static_prior, interleaver_seed=interleaver_seed,
    )


def interleave(x, perm):
    return x[perm]


def deinterleave(x, perm):
    out = np.empty_like(x)
    out[perm] = x
    return out


def _assemble(cfg: SystemConfig, s1, s2):
    """Merge shaped and unshaped streams into per-symbol label bits."""
    z = np.empty((cfg.n_symbols, cfg.m), dtype=s2.dtype)
    if cfg.g:
        z[:, cfg.shaped_positions()] = s1.reshape(cfg.n_symbols, cfg.g)
    z[:, cfg.unshaped_positions()] = s2.reshape(cfg.n_symbols, cfg.m - cfg.g)
    return z


def _split(cfg: SystemConfig, z):
    """Inverse of `_assemble`: (s1, s2) streams from per-symbol values."""
    s1 = z[:, cfg.shaped_positions()].reshape(-1) if cfg.g else z[:, :0].reshape(-1)
    s2 = z[:, cfg.unshaped_positions()].reshape(-1)
    return s1, s2


def transmit(cfg: SystemConfig, bits):
    """Map information bits to a frame of modulated symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    u = ldpc_mod.encode(cfg.ldpc, bits)
    v = interleave(u, cfg.pi1)
    if cfg.g == 0:
        z = v.reshape(cfg.n_symbols, cfg.m)
        return cfg.constellation.map_bits(z)
    d = v[: cfg.k_shaped]
    s2 = v[cfg.k_shaped:]
    blocks = shaping_mod.encode(cfg.shaping_code, d.reshape(cfg.n_blocks, -1))
    s1 = interleave(blocks.reshape(-1), cfg.pi2)
    z = _assemble(cfg, s1, s2)
    return cfg.constellation.map_bits(z)


def receive(cfg: SystemConfig, y, n0: float, max_iterations: int = 100,
            ref_codeword=None) -> FrameResult:
    """Iterative demapping/decoding of one frame.

    `ref_codeword` (the transmitted LDPC word) enables a per-iteration
    bit-error trace for diagnostics; it never influences decoding.
    """
    y = np.asarray(y, dtype=complex)
    if y.size != cfg.n_symbols:
        raise ValueError(f"expected {cfg.n_symbols} symbols, got {y.size}")
    const = cfg.constellation
    scode = cfg.shaping_code
    static = initial_priors(const, cfg.strategy)
    La_z = np.tile(static, (cfg.n_symbols, 1))
    La_d = np.zeros((cfg.n_blocks, scode.k)) if cfg.g else None
    La_c = None
    La_u = None
    state = None
    trace = []
    converged = False
    iterations = 0
    for it in range(1, max_iterations + 1):
        iterations = it
        if it == 1 or cfg.feedback:
            Le_z = demap_block(const, y, n0, La_z)
            le_s1, le_s2 = _split(cfg, Le_z)
            if cfg.g:
                La_c = deinterleave(le_s1, cfg.pi2).reshape(cfg.n_blocks, scode.n)
                Le_d = shaping_mod.decode_message(scode, La_c, La_d)
                le_v = np.concatenate([Le_d.reshape(-1), le_s2])
            else:
                le_v = le_s2
            La_u = deinterleave(le_v, cfg.pi1)
        Le_u, state, syndrome_ok = ldpc_mod.decode_iteration(
            cfg.ldpc, La_u, state, n_iters=cfg.ldpc_iters_per_pass)
        posterior = La_u + Le_u
        hard = (posterior < 0).astype(np.uint8)
        if ref_codeword is not None:
            trace.append(int(np.count_nonzero(hard != ref_codeword)))
        if syndrome_ok:
            converged = True
            break
        if it == max_iterations or not cfg.feedback:
            continue
        # feedback for the next pass
        La_v = interleave(Le_u, cfg.pi1)
        if cfg.g:
            La_d = La_v[: cfg.k_shaped].reshape(cfg.n_blocks, scode.k)
            la_s2 = La_v[cfg.k_shaped:]
            Le_c = shaping_mod.decode_codeword(scode, La_c, La_d)
            la_s1 = interleave(Le_c.reshape(-1), cfg.pi2)
            La_z = np.empty_like(La_z)
            La_z[:, cfg.shaped_positions()] = la_s1.reshape(cfg.n_symbols, cfg.g)
            La_z[:, cfg.unshaped_positions()] = la_s2.reshape(cfg.n_symbols, cfg.m - cfg.g)
            if cfg.add_static_prior:
                La_z += static[None, :]
        else:
            La_z = La_v.reshape(cfg.n_symbols, cfg.m)
    return FrameResult(bits=hard[: cfg.ldpc.k], iterations=iterations,
                       converged=converged, trace=trace)


CAMPAIGN_COLUMNS = ("snr_db_eb", "snr_db_es", "frames", "bit_errors", "ber",
                    "fer", "mean_iters", "config_hash", "seed")


@dataclass(frozen=True)
class StopRule:
    max_frames: int = 10_000
    target_bit_errors: int = 100
    min_frames: int = 8


# frames per stop-rule evaluation; fixed so results do not depend on the
# worker count
_BATCH_FRAMES = 8


def _run_frame(cfg: SystemConfig, n0: float, seed: int, max_iterations: int,
               stream: int):
    rng = frame_rng(seed, stream)
    bits = rng.integers(0, 2, size=cfg.ldpc.k, dtype=np.uint8)
    x = transmit(cfg, bits)
    y = x + complex_awgn(x.shape, n0, rng)
    res = receive(cfg, y, n0, max_iterations=max_iterations)
    errs = int(np.count_nonzero(res.bits != bits))
    return errs, res.converged, res.iterations


def ber_campaign(cfg: SystemConfig, ebn0_db_list, stop: StopRule | None = None,
                 seed: int = 0, max_iterations: int = 100, config_hash: str = "",
                 csv_path=None, progress=None, workers: int = 1):
    """Monte Carlo BER/FER sweep; one row per SNR point.

    Frames are generated from per-(point, frame) substreams of `seed` and
    processed in fixed-size batches with the stop rule evaluated at batch
    boundaries, so results are bit-identical for any `workers` count.
    """
    import functools
    from concurrent.futures import ProcessPoolExecutor

    stop = stop or StopRule()
    rate = cfg.rate
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    rows = []
    for pt, ebn0_db in enumerate(np.atleast_1d(ebn0_db_list)):
        esn0_db = float(ebn0_db) + 10 * np.log10(rate)
        n0 = 1.0 / db_to_linear(esn0_db)
        bit_errors = 0
        frame_errors = 0
        iters = []
        frames = 0
        run = functools.partial(_run_frame, cfg, n0, seed, max_iterations)
        while frames < stop.max_frames and (
            bit_errors < stop.target_bit_errors or frames < stop.min_frames
        ):
            batch = min(_BATCH_FRAMES, stop.max_frames - frames)
            streams = [pt * stop.max_frames + frames + i for i in range(batch)]
            if pool is not None:
                results = list(pool.map(run, streams))
            else:
                results = [run(s) for s in streams]
            for errs, converged, n_iters in results:
                bit_errors += errs
                frame_errors += errs > 0
                if converged:
                    iters.append(n_iters)
            frames += batch
            if progress:
                progress(pt, frames, bit_errors)
        rows.append({
            "snr_db_eb": float(ebn0_db),
            "snr_db_es": esn0_db,
            "frames": frames,
            "bit_errors": bit_errors,
            "ber": bit_errors / (frames * cfg.ldpc.k),
            "fer": frame_errors / frames,
            "mean_iters": float(np.mean(iters)) if iters else float("nan"),
            "config_hash": config_hash,
            "seed": seed,
        })
    if pool is not None:
        pool.shutdown()
    if csv_path is not None:
        write_campaign_csv(rows, csv_path)
    return rows


def write_campaign_csv(rows, path) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CAMPAIGN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        for key in ("snr_db_eb", "snr_db_es", "ber", "fer", "mean_iters"):
            out[key] = format(out[key], ".12g")
        writer.writerow(out)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
