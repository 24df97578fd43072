"""Monte Carlo BER sweeps over Eb/N0 with deterministic, order-free RNG.

Frame ``f`` at grid point ``i`` always uses ``RngStream(master_seed, i, f)``,
so every decoder at a point sees the same frames and results do not depend
on chunking or on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numpy as np

from .channel import draw_frames, ebn0_to_sigma
from .codebook import CodeMatrix, VARIANTS, build_core, hadamard, read_code
from .decoders import AMLDecoder, DecoupledDecoder, IterativeDecoder, MLDecoder
from .enlarge import Enlargement, enlarge_hadamard

DECODERS = ("ml", "decoupled", "aml", "iterative")
CSV_HEADER = "decoder,ebn0_db,bits_sent,bit_errors,ber"
_CHUNK_FRAMES = 1024


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    """One sweep: a code, a list of decoders and an Eb/N0 grid.

    The code is either read from ``code_file`` or built with
    :func:`build_core` from ``L``, ``K``, ``variant``, ``code_seed`` and then
    enlarged ``d``-fold by ``q`` (``"hadamard"`` or ``"identity"``).
    ``max_bit_errors=None`` disables early stopping.
    """

    L: int = 0
    K: int = 0
    variant: str = "auto"
    code_seed: int = 0
    deleted_row: int = 0
    d: int = 1
    q: str = "hadamard"
    code_file: Optional[str] = None
    decoders: list = field(default_factory=lambda: ["ml"])
    ebn0_db: list = field(default_factory=list)
    frames_per_point: int = 1000
    max_bit_errors: Optional[int] = 500
    master_seed: int = 0
    iterative_mu: Optional[float] = None
    iterative_steps: int = 20

    def validate(self) -> "SimConfig":
        if self.frames_per_point < 1:
            raise ConfigError("frames_per_point must be >= 1")
        if not self.ebn0_db:
            raise ConfigError("ebn0_db grid must not be empty")
        if any(math.isnan(v) for v in self.ebn0_db):
            raise ConfigError("ebn0_db grid contains NaN")
        if any(b <= a for a, b in zip(self.ebn0_db, self.ebn0_db[1:])):
            raise ConfigError("ebn0_db grid must be strictly increasing")
        if not self.decoders:
            raise ConfigError("at least one decoder is required")
        for dec in self.decoders:
            if dec not in DECODERS:
                raise ConfigError(f"unknown decoder {dec!r}; expected one of {DECODERS}")
        if len(set(self.decoders)) != len(self.decoders):
            raise ConfigError("decoder list has duplicates")
        if self.code_file is None:
            if self.L < 1 or self.K < 1:
                raise ConfigError("L and K must be positive (or give code_file)")
            if self.variant not in VARIANTS:
                raise ConfigError(f"unknown variant {self.variant!r}")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.q not in ("hadamard", "identity"):
            raise ConfigError("q must be 'hadamard' or 'identity'")
        if self.max_bit_errors is not None and self.max_bit_errors < 1:
            raise ConfigError("max_bit_errors must be >= 1 (or inf)")
        if self.iterative_steps < 1:
            raise ConfigError("iterative_steps must be >= 1")
        if self.iterative_mu is not None and self.iterative_mu <= 0:
            raise ConfigError("iterative_mu must be positive")
        return self


@dataclass(frozen=True)
class BerPoint:
    decoder: str
    ebn0_db: float
    bits_sent: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0


# --- config file ------------------------------------------------------------

_INT_KEYS = {"L", "K", "code_seed", "deleted_row", "d", "frames_per_point", "master_seed", "iterative_steps"}
_STR_KEYS = {"variant", "q", "code_file"}


def _parse_float(tok: str) -> float:
    tok = tok.strip()
    if tok.lower() in ("inf", "+inf"):
        return math.inf
    return float(tok)


def parse_config(text: str) -> SimConfig:
    """Parse the flat ``key = value`` format (``#`` comments, comma lists)."""
    cfg = SimConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            if key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _STR_KEYS:
                setattr(cfg, key, value)
            elif key == "decoders":
                cfg.decoders = [t.strip() for t in value.split(",") if t.strip()]
            elif key == "ebn0_db":
                cfg.ebn0_db = [_parse_float(t) for t in value.split(",") if t.strip()]
            elif key == "max_bit_errors":
                cfg.max_bit_errors = None if value.lower() in ("inf", "none") else int(value)
            elif key == "iterative_mu":
                cfg.iterative_mu = None if value.lower() == "auto" else float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return cfg.validate()


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# --- code + decoder setup ---------------------------------------------------


def build_code(config: SimConfig) -> tuple[CodeMatrix, Optional[Enlargement]]:
    """Return the transmitted code and, for Kronecker codes, its factors."""
    if config.code_file is not None:
        core, kron = read_code(config.code_file)
        if kron is not None:
            if config.d != 1:
                raise ConfigError("d must be 1 when the code file already carries a Kronecker sidecar")
            return core, Enlargement.from_code(core, kron)
    else:
        core = build_core(config.L, config.K, config.code_seed, config.variant, config.deleted_row)
    if config.d == 1:
        return core, None
    if config.q == "hadamard":
        e = Enlargement(hadamard(config.d) / math.sqrt(config.d), core)
        code = enlarge_hadamard(config.d, core) if core.binary_antipodal else e.materialize()
    else:
        e = Enlargement(np.eye(config.d), core)
        code = e.materialize()
    return code, e


def make_decoder(name: str, code: CodeMatrix, e: Optional[Enlargement], config: SimConfig):
    if name == "ml":
        return MLDecoder().fit(code)
    if name == "decoupled":
        if e is None:
            raise ConfigError("decoupled decoder needs a Kronecker (enlarged) code")
        return DecoupledDecoder(inner="ml").fit(e)
    if name == "aml":
        if e is not None:
            return DecoupledDecoder(inner="aml").fit(e)
        return AMLDecoder().fit(code)
    if name == "iterative":
        return IterativeDecoder(mu=config.iterative_mu, iterations=config.iterative_steps).fit(code)
    raise ConfigError(f"unknown decoder {name!r}")


class _Prepared:
    def __init__(self, config: SimConfig):
        self.config = config.validate()
        self.code, self.enlargement = build_code(config)
        self._decoders = {}

    def decoder(self, name: str):
        if name not in self._decoders:
            try:
                self._decoders[name] = make_decoder(name, self.code, self.enlargement, self.config)
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"decoder {name!r} cannot run on this code: {exc}") from exc
        return self._decoders[name]


def _run(prep: _Prepared, point_index: int, decoder: str) -> BerPoint:
    cfg = prep.config
    ebn0 = cfg.ebn0_db[point_index]
    sigma = ebn0_to_sigma(ebn0)
    dec = prep.decoder(decoder)
    K = prep.code.K
    frames = errors = 0
    for lo in range(0, cfg.frames_per_point, _CHUNK_FRAMES):
        span = range(lo, min(lo + _CHUNK_FRAMES, cfg.frames_per_point))
        X, Y = draw_frames(prep.code.mat, sigma, cfg.master_seed, point_index, span)
        per_frame = np.count_nonzero(dec.predict(Y) != X, axis=1)
        if cfg.max_bit_errors is not None:
            cum = errors + np.cumsum(per_frame)
            hit = np.flatnonzero(cum >= cfg.max_bit_errors)
            if hit.size:
                stop = int(hit[0]) + 1
                return BerPoint(decoder, ebn0, (frames + stop) * K, int(cum[stop - 1]))
        frames += len(span)
        errors += int(per_frame.sum())
    return BerPoint(decoder, ebn0, frames * K, errors)


def run_point(config: SimConfig, ebn0_db: float, decoder: str) -> BerPoint:
    """BER of one decoder at one grid point (``ebn0_db`` must be on the grid)."""
    try:
        idx = config.ebn0_db.index(ebn0_db)
    except ValueError:
        raise ConfigError(f"{ebn0_db} dB is not on the configured grid") from None
    return _run(_Prepared(config), idx, decoder)


def thread_count() -> int:
    raw = os.environ.get("WBE_THREADS", "").strip()
    n = int(raw) if raw else 0
    if n < 0:
        raise ConfigError("WBE_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def run_sweep(config: SimConfig, threads: Optional[int] = None) -> list[BerPoint]:
    """All ``decoders x grid`` points, ordered by decoder then grid."""
    prep = _Prepared(config)
    for name in config.decoders:
        prep.decoder(name)
    tasks = [(i, name) for name in config.decoders for i in range(len(config.ebn0_db))]
    workers = threads if threads is not None else thread_count()
    if workers <= 1:
        return [_run(prep, i, name) for i, name in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: _run(prep, *t), tasks))


# --- CSV --------------------------------------------------------------------


def format_csv(points: Iterable[BerPoint]) -> str:
    rows = [CSV_HEADER]
    for p in points:
        rows.append(f"{p.decoder},{p.ebn0_db!r},{p.bits_sent},{p.bit_errors},{p.ber:.10g}")
    return "\n".join(rows) + "\n"


def write_csv(points: Iterable[BerPoint], dest: Union[str, os.PathLike, IO[str]]) -> None:
    text = format_csv(points)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", newline="\n") as fh:
            fh.write(text)


def read_csv(src: Union[str, os.PathLike, IO[str]]) -> list[BerPoint]:
    if hasattr(src, "read"):
        text = src.read()
    else:
        with open(src, newline="") as fh:
            text = fh.read()
    lines = text.split("\n")
    if lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    points = []
    for ln in lines[1:]:
        if not ln:
            continue
        dec, ebn0, bits, errs, _ = ln.split(",")
        points.append(BerPoint(dec, float(ebn0), int(bits), int(errs)))
    return points
