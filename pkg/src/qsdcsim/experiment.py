"""Batch experiment runner: seeded sessions, parameter sweeps, analytic
capacity tables, machine-readable outputs.

Outputs of a run:

* ``transcripts/point{P}_seed{S}.json`` - one JSON transcript per session
* ``results.csv`` (or ``results.json``) - one aggregate row per sweep point
  and seed, with the session's capacity report columns
* ``summary.txt`` - abort rates, fidelities, mean error rates per point

Rows are ordered by (sweep value, seed) and floats are printed with 9
significant digits, so identical configs and seeds produce byte-identical
files regardless of how many workers ran the sessions.
"""

from __future__ import annotations

import concurrent.futures
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bits import random_bits
from .channel import ChannelParams, EveGainModel, eve_rate_for, reception_rate
from .dl04 import Dl04Config, SessionTranscript, run_dl04
from .eavesdrop import InterceptResend
from .fec import FecCode
from .mdi import MdiConfig, run_mdi_dl04
from .qmf import Dl04Transport, QmfSessionConfig, QmfSessionError, run_qmf_session
from .security import CapacityReport, apply_incum, secrecy_capacity

PROTOCOLS = ("dl04", "dl04_incum", "mdi_dl04", "qmf")
SWEEP_VARIABLES = ("length_km", "flip_prob", "eve_fraction")

CSV_COLUMNS = [
    "sweep_variable",
    "sweep_value",
    "seed",
    "protocol",
    "aborted",
    "fidelity",
    "q_bob",
    "q_eve",
    "g",
    "e",
    "eps_x",
    "eps_z",
    "c_m",
    "c_w",
    "c_s",
    "c_s_clamped",
    "mode",
]

TABLE_COLUMNS = [
    "length_km",
    "q_bob",
    "q_eve",
    "e",
    "eps_x",
    "eps_z",
    "c_m",
    "c_w",
    "c_s",
    "mode",
]


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


class SessionFailure(RuntimeError):
    """At least one session raised instead of completing or aborting."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.steps < 1:
            raise ConfigError("sweep steps must be >= 1")

    def values(self) -> list[float]:
        if self.steps == 1:
            return [float(self.start)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    channel: ChannelParams
    seeds: tuple[int, ...]
    eve: InterceptResend | None = None
    sweep: SweepSpec | None = None
    session: dict = field(default_factory=dict)
    include_rounds: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if len(self.seeds) < 1:
            raise ConfigError("at least one seed is required")
        if self.sweep is not None and self.sweep.variable == "eve_fraction" and self.eve is None:
            raise ConfigError("an eve_fraction sweep needs an eavesdropper strategy")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            channel = _channel_from_dict(doc.get("channel", {}))
            eve = _eve_from_dict(doc.get("eve"))
            sweep_doc = doc.get("sweep")
            sweep = (
                SweepSpec(
                    variable=sweep_doc["variable"],
                    start=float(sweep_doc["start"]),
                    stop=float(sweep_doc["stop"]),
                    steps=int(sweep_doc["steps"]),
                )
                if sweep_doc
                else None
            )
            return cls(
                protocol=doc["protocol"],
                channel=channel,
                seeds=tuple(int(s) for s in doc.get("seeds", [])),
                eve=eve,
                sweep=sweep,
                session=dict(doc.get("session", {})),
                include_rounds=bool(doc.get("output", {}).get("include_rounds", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad experiment config: {exc}") from exc


def _channel_from_dict(doc: dict) -> ChannelParams:
    gain_doc = doc.get("eve_gain", {})
    gain = EveGainModel(
        mode=gain_doc.get("mode", "collecting"),
        g=None if gain_doc.get("g") is None else float(gain_doc["g"]),
    )
    return ChannelParams(
        length_km=float(doc.get("length_km", 50.0)),
        attenuation_db_per_km=float(doc.get("attenuation_db_per_km", 0.2)),
        flip_prob_z=float(doc.get("flip_prob_z", 0.0)),
        flip_prob_x=float(doc.get("flip_prob_x", 0.0)),
        detector_efficiency=float(doc.get("detector_efficiency", 1.0)),
        eve_gain=gain,
    )


def _eve_from_dict(doc) -> InterceptResend | None:
    if doc is None or doc.get("strategy", "none") == "none":
        return None
    if doc["strategy"] != "intercept_resend":
        raise ConfigError(f"unknown eve strategy {doc['strategy']!r}")
    return InterceptResend(
        basis_policy=doc.get("basis_policy", "random_zx"),
        fraction=float(doc.get("fraction", 1.0)),
    )


# ---------------------------------------------------------------------------
# Work items
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _WorkItem:
    point_index: int
    sweep_variable: str
    sweep_value: float
    seed: int
    protocol: str
    channel: ChannelParams
    eve: InterceptResend | None
    session: dict
    include_rounds: bool


def _apply_sweep(
    cfg: ExperimentConfig, variable: str, value: float
) -> tuple[ChannelParams, InterceptResend | None]:
    channel, eve = cfg.channel, cfg.eve
    if variable == "length_km":
        channel = replace(channel, length_km=value)
    elif variable == "flip_prob":
        channel = replace(channel, flip_prob_z=value, flip_prob_x=value)
    elif variable == "eve_fraction":
        eve = replace(eve, fraction=value)
    return channel, eve


def _work_items(cfg: ExperimentConfig) -> list[_WorkItem]:
    if cfg.sweep is None:
        points = [("none", 0.0)]
    else:
        points = [(cfg.sweep.variable, v) for v in cfg.sweep.values()]
    items = []
    for point_index, (variable, value) in enumerate(points):
        if variable == "none":
            channel, eve = cfg.channel, cfg.eve
        else:
            channel, eve = _apply_sweep(cfg, variable, value)
        for seed in cfg.seeds:
            items.append(
                _WorkItem(
                    point_index=point_index,
                    sweep_variable=variable,
                    sweep_value=value,
                    seed=seed,
                    protocol=cfg.protocol,
                    channel=channel,
                    eve=eve,
                    session=cfg.session,
                    include_rounds=cfg.include_rounds,
                )
            )
    return items


def _capacity_fields(capacity: CapacityReport | None) -> dict:
    if capacity is None:
        return {k: None for k in ("q_bob", "q_eve", "g", "e", "eps_x", "eps_z", "c_m", "c_w", "c_s", "c_s_clamped", "mode")}
    return {
        "q_bob": capacity.q_bob,
        "q_eve": capacity.q_eve,
        "g": capacity.g,
        "e": capacity.e,
        "eps_x": capacity.eps_x,
        "eps_z": capacity.eps_z,
        "c_m": capacity.c_m,
        "c_w": capacity.c_w,
        "c_s": capacity.c_s,
        "c_s_clamped": capacity.c_s_clamped,
        "mode": capacity.mode,
    }


def _run_protocol_session(item: _WorkItem, rng: np.random.Generator):
    """Run one session; returns (row fields, transcript json dict)."""
    session = item.session
    message_bits = int(session.get("message_bits", 128))
    message = random_bits(message_bits, rng)

    if item.protocol in ("dl04", "dl04_incum"):
        cfg = Dl04Config(
            n_photons=int(session.get("n_photons", 20000)),
            channel=item.channel,
            check_fraction=float(session.get("check_fraction", 0.1)),
            dber_abort_threshold=float(session.get("dber_abort_threshold", 0.12)),
            qber_abort_threshold=float(session.get("qber_abort_threshold", 0.12)),
            incum=item.protocol == "dl04_incum",
            check_bit_interval=int(session.get("check_bit_interval", 10)),
            capacity_mode=session.get("capacity_mode", "two_basis"),
        )
        transcript = run_dl04(cfg, message, eve=item.eve, rng=rng)
        return _transcript_row(item, transcript), transcript.to_json_dict(item.include_rounds)

    if item.protocol == "mdi_dl04":
        cfg = MdiConfig(
            n_rounds=int(session.get("n_rounds", 4000)),
            channel_alice=item.channel,
            epr_fraction=float(session.get("epr_fraction", 0.5)),
            detection_abort_threshold=float(session.get("dber_abort_threshold", 0.12)),
            qber_abort_threshold=float(session.get("qber_abort_threshold", 0.12)),
            check_bit_interval=int(session.get("check_bit_interval", 10)),
            capacity_mode=session.get("capacity_mode", "two_basis"),
        )
        transcript = run_mdi_dl04(
            cfg,
            message,
            eve=item.eve,
            charlie_honest=bool(session.get("charlie_honest", True)),
            rng=rng,
        )
        return _transcript_row(item, transcript), transcript.to_json_dict(item.include_rounds)

    # qmf
    frame_length = int(session.get("frame_length", 512))
    code_seed = int(session.get("code_seed", 7))
    precode = FecCode.from_regular(2 * message_bits, seed=code_seed)
    inner = FecCode.from_regular(frame_length, seed=code_seed + 1)
    qcfg = QmfSessionConfig(
        precode=precode,
        inner_code=inner,
        channel=item.channel,
        g=float(session.get("g", 1.0)),
        margin=float(session.get("margin", 0.1)),
        initial_dber=float(session.get("initial_dber", 0.02)),
        initial_qber=float(session.get("initial_qber", 0.02)),
        retry_budget=int(session.get("retry_budget", 3)),
        pool_reserve_bits=int(session.get("pool_reserve_bits", 0)),
    )
    transport = Dl04Transport(
        item.channel,
        check_fraction=float(session.get("check_fraction", 0.1)),
        dber_abort_threshold=float(session.get("dber_abort_threshold", 0.12)),
        qber_abort_threshold=float(session.get("qber_abort_threshold", 0.12)),
    )
    result = run_qmf_session(qcfg, message, transport=transport, rng=rng)
    fidelity = float(np.mean(result.received == message)) if len(result.received) else None
    last = result.frames[-1]
    q_eve = qcfg.g * last.q_bob
    row = {
        "aborted": 0,
        "fidelity": fidelity,
        "q_bob": last.q_bob,
        "q_eve": q_eve,
        "g": qcfg.g,
        "e": last.e,
        "eps_x": last.eps,
        "eps_z": last.eps,
        "c_m": last.c_m,
        "c_w": last.c_w,
        "c_s": last.c_s,
        "c_s_clamped": max(last.c_s, 0.0),
        "mode": "qmf_frame",
    }
    transcript_doc = {
        "protocol": "qmf",
        "fidelity": fidelity,
        "message_bits": message_bits,
        "bootstrap_frames": result.bootstrap_frames,
        "random_frames_mid_session": result.random_frames_mid_session,
        "pool_deposited": result.pool_deposited,
        "pool_consumed": result.pool_consumed,
        "frames": [f.to_json_dict() for f in result.frames],
    }
    return row, transcript_doc


def _transcript_row(item: _WorkItem, transcript: SessionTranscript) -> dict:
    row = {
        "aborted": int(transcript.aborted),
        "fidelity": transcript.fidelity,
    }
    row.update(_capacity_fields(transcript.capacity))
    # Aborted sessions have no capacity block but the measured error rates
    # are still worth reporting.
    if transcript.capacity is None:
        row["e"] = transcript.dber.e if transcript.dber.has_e else None
        row["eps_x"] = transcript.dber.eps_x if transcript.dber.has_x else None
        row["eps_z"] = transcript.dber.eps_z if transcript.dber.has_z else None
    return row


def _execute_item(item: _WorkItem):
    rng = np.random.default_rng([item.seed, item.point_index])
    try:
        row, transcript = _run_protocol_session(item, rng)
    except (ValueError, RuntimeError, QmfSessionError) as exc:
        return item, None, None, f"{type(exc).__name__}: {exc}"
    base = {
        "sweep_variable": item.sweep_variable,
        "sweep_value": item.sweep_value,
        "seed": item.seed,
        "protocol": item.protocol,
    }
    base.update(row)
    transcript = dict(transcript)
    transcript["seed"] = item.seed
    transcript["sweep"] = {"variable": item.sweep_variable, "value": item.sweep_value}
    return item, base, transcript, None


# ---------------------------------------------------------------------------
# Formatting and file output
# ---------------------------------------------------------------------------


def format_value(value) -> str:
    """Deterministic CSV cell: 9 significant digits, '.' decimal, no locale."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def run_experiment(
    cfg: ExperimentConfig,
    out_dir,
    jobs: int = 1,
    fmt: str = "csv",
) -> dict:
    """Run every (sweep point, seed) session and write artifact files.

    Returns a summary dict; raises ConfigError for bad configs and
    SessionFailure if any session raised an error (rows for the sessions
    that did complete are still written).
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcripts_dir = out_dir / "transcripts"
    transcripts_dir.mkdir(exist_ok=True)
    items = _work_items(cfg)

    results = []
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_item, items))
    else:
        results = [_execute_item(item) for item in items]

    # Deterministic order: by sweep value, then seed.
    results.sort(key=lambda r: (r[0].sweep_value, r[0].seed))

    rows = []
    failures = []
    for item, row, transcript, error in results:
        if error is not None:
            failures.append((item.point_index, item.seed, error))
            continue
        rows.append(row)
        name = f"point{item.point_index:03d}_seed{item.seed}.json"
        (transcripts_dir / name).write_text(
            json.dumps(transcript, indent=1, sort_keys=True), encoding="utf-8"
        )

    if fmt == "csv":
        (out_dir / "results.csv").write_text(rows_to_csv(rows, CSV_COLUMNS), encoding="utf-8")
    else:
        payload = json.dumps(rows, indent=1, sort_keys=True, default=format_value)
        (out_dir / "results.json").write_text(payload, encoding="utf-8")

    summary = _summarize(cfg, rows, failures)
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")

    if failures:
        details = "; ".join(f"point {p} seed {s}: {e}" for p, s, e in failures[:5])
        raise SessionFailure(f"{len(failures)} session(s) failed: {details}")
    return {"rows": len(rows), "failures": len(failures)}


def _summarize(cfg: ExperimentConfig, rows: list[dict], failures: list) -> str:
    lines = [f"protocol: {cfg.protocol}", f"sessions: {len(rows)}", f"failures: {len(failures)}"]
    by_point: dict[float, list[dict]] = {}
    for row in rows:
        by_point.setdefault(row["sweep_value"], []).append(row)
    for value in sorted(by_point):
        group = by_point[value]
        aborts = sum(r["aborted"] for r in group)
        fids = [r["fidelity"] for r in group if r["fidelity"] is not None]
        epss = [r["eps_z"] for r in group if r["eps_z"] is not None]
        lines.append(
            f"point {format_value(value)}: sessions={len(group)} "
            f"abort_rate={format_value(aborts / len(group))} "
            f"mean_fidelity={format_value(sum(fids) / len(fids)) if fids else ''} "
            f"mean_eps_z={format_value(sum(epss) / len(epss)) if epss else ''}"
        )
    for point, seed, error in failures:
        lines.append(f"FAILED point {point} seed {seed}: {error}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Analytic capacity tables
# ---------------------------------------------------------------------------


def capacity_table(
    base_channel: ChannelParams,
    lengths_km,
    e: float,
    eps_x: float,
    eps_z: float,
    mode: str = "two_basis",
    incum: bool = False,
) -> list[dict]:
    """Deterministic capacity curve over distance at fixed error rates.

    No Monte Carlo: reception rates follow the attenuation law, the
    eavesdropper rate follows the channel's gain model, and each row is one
    closed-form capacity evaluation.  With ``incum`` the masked variant is
    reported (eavesdropper rate pinned to the receiver's).
    """
    rows = []
    for length in lengths_km:
        channel = replace(base_channel, length_km=float(length))
        q_bob = reception_rate(channel)
        q_eve = eve_rate_for(q_bob, channel.eve_gain)
        report = secrecy_capacity(q_bob, q_eve, e, eps_x, eps_z, mode=mode)
        if incum:
            report = apply_incum(report)
        rows.append(
            {
                "length_km": float(length),
                "q_bob": report.q_bob,
                "q_eve": report.q_eve,
                "e": report.e,
                "eps_x": report.eps_x,
                "eps_z": report.eps_z,
                "c_m": report.c_m,
                "c_w": report.c_w,
                "c_s": report.c_s,
                "mode": report.mode,
            }
        )
    return rows


def capacity_table_from_dict(doc: dict) -> list[dict]:
    """Build a capacity table from a parsed config document."""
    try:
        channel = _channel_from_dict(doc.get("channel", {}))
        table = doc["table"]
        span = table["lengths"]
        lengths = np.linspace(
            float(span["start"]), float(span["stop"]), int(span["steps"])
        )
        return capacity_table(
            channel,
            lengths,
            e=float(table.get("e", 0.0)),
            eps_x=float(table.get("eps_x", 0.0)),
            eps_z=float(table.get("eps_z", 0.0)),
            mode=table.get("mode", "two_basis"),
            incum=bool(table.get("incum", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad table config: {exc}") from exc
