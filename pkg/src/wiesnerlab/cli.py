"""Experiment runner: seeded trials for every attack, CSV/JSON emission.

Subcommands: ev-bomb, bt-attack, bt-list, pm-identify, pm-tomography,
figure, bounds. Each resolves a RunConfig (JSON config file + flag
overrides), runs its trials on per-trial Philox streams derived from the
master seed, and writes a deterministic summary (JSON, floats printed with
12 significant digits). Identical (config, seed) gives byte-identical
output regardless of worker count; wall time goes to stderr only.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import analytics, bt_attack, pm_attack, qcore
from ._rounds import BACKEND
from .bank import (Bank, BankError, FourStateScheme, KeySymbol, ListedScheme,
                   NoisyThreshold, StateList, StrictDestroy)
from .pm_attack import EstimationFailedError

MASTER_SECRET_ENV = "WIESNERLAB_MASTER_SECRET"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved run configuration; round-trips losslessly through JSON."""

    subcommand: str
    scheme: str = "four-state"
    state_file: str | None = None
    n: int = 1
    policy: str = "strict"
    return_frac: float = 0.05
    reissue_frac: float = 0.10
    n_rounds: int | None = None
    epsilon: float = 0.1
    coupling_budget: float = math.pi / 8
    eta: float = 0.1
    nu_final: float | None = None
    f_budget: float | None = None
    variant: str = "serial"
    live: bool = True
    mode: str = "sampled"
    trials: int = 1
    master_seed: int = 0
    points: int = 200
    workers: int = 1
    out: str | None = None
    transcript: str | None = None
    reconstruction: str | None = None
    traces: str | None = None
    dump_db: str | None = None
    master_secret: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = {f.name for f in fields(RunConfig)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**d)

    def validate(self) -> None:
        if self.subcommand not in ("ev-bomb", "bt-attack", "bt-list", "pm-identify",
                                   "pm-tomography", "figure", "bounds"):
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.scheme not in ("four-state", "listed"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.policy not in ("strict", "noisy"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if not (0.0 <= self.return_frac <= self.reissue_frac <= 1.0):
            raise ConfigError("need 0 <= return_frac <= reissue_frac <= 1")
        if self.mode not in ("sampled", "postselected", "fastforward"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.policy == "noisy" and self.mode != "sampled":
            raise ConfigError("the noisy policy only supports sampled mode")
        if self.variant not in ("serial", "parallel"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.points < 2:
            raise ConfigError("points must be >= 2")
        if self.n_rounds is not None and self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError("epsilon must be in (0, 1)")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")


# ---------------------------------------------------------------------------
# Deterministic JSON/CSV emission (12 significant digits)
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("refusing to serialize NaN/Inf")
    s = format(float(x), ".12g")
    return s


def _emit(obj, out: list) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", ")
            _emit(val, out)
        out.append("]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    else:
        out.append(json.dumps(obj))


def dumps_summary(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out) + "\n"


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent per-trial stream: Philox keyed by SeedSequence spawn."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.Philox(ss))


def _master_secret(cfg: RunConfig) -> bytes | None:
    if cfg.master_secret is not None:
        return cfg.master_secret.encode()
    env = os.environ.get(MASTER_SECRET_ENV)
    return env.encode() if env else None


def _build_bank(cfg: RunConfig) -> Bank:
    if cfg.scheme == "listed":
        scheme = ListedScheme(_load_state_list(cfg))
    else:
        scheme = FourStateScheme()
    if cfg.policy == "noisy":
        policy = NoisyThreshold(cfg.return_frac, cfg.reissue_frac)
    else:
        policy = StrictDestroy()
    return Bank(scheme=scheme, policy=policy, master_secret=_master_secret(cfg))


# A small built-in demo list for bt-list runs without a state file.
_DEMO_LIST = (
    qcore.KET0,
    qcore.from_polar(math.pi / 5),
    qcore.from_polar(2 * math.pi / 5, math.pi / 3),
)


def _load_state_list(cfg: RunConfig) -> StateList:
    if cfg.state_file is None:
        return StateList(_DEMO_LIST)
    with open(cfg.state_file) as fh:
        raw = json.load(fh)
    states = []
    for row in raw:
        q = qcore.PureQubit(complex(row[0], row[1]), complex(row[2], row[3]))
        states.append(q.normalized())
    return StateList(tuple(states))


# ---------------------------------------------------------------------------
# Per-trial workers (module level so process pools can pickle them)
# ---------------------------------------------------------------------------

def _trial_ev(cfg_dict: dict, idx: int) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    rng = trial_rng(cfg.master_seed, idx)
    params = bt_attack.BtParams(cfg.n_rounds or 100)
    res = bt_attack.ev_bomb_test(cfg.live, params, "sampled", rng)
    return {"exploded": res.exploded, "probe_outcome": res.probe_outcome}


def _trial_bt(cfg_dict: dict, idx: int) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    rng = trial_rng(cfg.master_seed, idx)
    bank = _build_bank(cfg)
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    recover = (bt_attack.bt_recover_key_serial if cfg.variant == "serial"
               else bt_attack.bt_recover_key_parallel)
    res = recover(oracle, cfg.epsilon, rng, cfg.mode, n_rounds=cfg.n_rounds)
    success = (not res.caught) and tuple(res.recovered) == bank.key_of(res.serial)
    return {"success": success, "caught": res.caught,
            "verifications": res.verifications, "reissues": res.reissues}


def _trial_bt_list(cfg_dict: dict, idx: int) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    rng = trial_rng(cfg.master_seed, idx)
    bank = _build_bank(cfg)
    if not isinstance(bank.scheme, ListedScheme):
        raise ConfigError("bt-list needs scheme = listed")
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    res = bt_attack.bt_list_attack(oracle, bank.scheme.state_list, cfg.epsilon,
                                   cfg.mode, rng)
    success = (not res.caught) and tuple(res.recovered) == bank.key_of(res.serial)
    return {"success": success, "caught": res.caught,
            "verifications": res.verifications, "runs": res.runs}


def _trial_pm_identify(cfg_dict: dict, idx: int) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    rng = trial_rng(cfg.master_seed, idx)
    bank = _build_bank(cfg)
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    n_rounds = cfg.n_rounds or 1000
    res = pm_attack.pm_recover_key(oracle, n_rounds, rng, cfg.mode)
    success = (not res.caught) and tuple(res.recovered) == bank.key_of(res.serial)
    return {"success": success, "caught": res.caught,
            "verifications": res.verifications, "reissues": res.reissues}


def _trial_pm_tomography(cfg_dict: dict, idx: int) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    rng = trial_rng(cfg.master_seed, idx)
    bank = _build_bank(cfg)
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    nu_final = cfg.nu_final if cfg.nu_final is not None else 6.0 * cfg.n * 0.2
    res = pm_attack.pm_forge_note(oracle, cfg.eta, nu_final, rng,
                                  f_budget=cfg.f_budget, n_rounds=cfg.n_rounds,
                                  mode=cfg.mode)
    out = {"caught": res.caught, "catch_events": res.catch_events,
           "verifications": res.verifications, "m": res.m, "n_rounds": res.n_rounds}
    if not res.caught and res.reconstruction.complete:
        truth = [s.state if isinstance(s, KeySymbol) else
                 bank.scheme.key_state(s) for s in bank.key_of(res.serial)]
        nu = res.nu
        errors = []
        paulis = (qcore.SIGMA_X, qcore.SIGMA_Y, qcore.SIGMA_Z)
        for i, alpha in enumerate(truth):
            est = res.reconstruction.estimates[i]
            for j, pauli in enumerate(paulis):
                errors.append(abs(est[j] - float(pauli.expectation(alpha).real)))
        fid = pm_attack.product_fidelity(res.reconstruction.states, truth)
        chain = pm_attack.fidelity_chain_bound(res.reconstruction.raw_states, truth)
        out.update({
            "max_obs_error": max(errors),
            "obs_failures": sum(1 for e in errors if e > nu),
            "obs_estimates": len(errors),
            "fidelity": fid,
            "chain_bound": chain,
            "chain_ok": fid >= chain - 1e-12,
            "estimates": [list(t) for t in res.reconstruction.estimates],
            "bloch": [list(s.bloch) for s in res.reconstruction.states],
        })
    return out


_TRIAL_FNS = {
    "ev-bomb": _trial_ev,
    "bt-attack": _trial_bt,
    "bt-list": _trial_bt_list,
    "pm-identify": _trial_pm_identify,
    "pm-tomography": _trial_pm_tomography,
}


def run_trials(cfg: RunConfig) -> list[dict]:
    """Run cfg.trials independent trials, merged in trial order."""
    fn = _TRIAL_FNS[cfg.subcommand]
    cfg_dict = cfg.to_dict()
    if cfg.workers == 1:
        return [fn(cfg_dict, i) for i in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(fn, cfg_dict, i) for i in range(cfg.trials)]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def _freq(rows: list[dict], key: str) -> float:
    return sum(1 for r in rows if r.get(key)) / len(rows)


def summarize(cfg: RunConfig, rows: list[dict]) -> dict:
    results: dict = {"trials": cfg.trials}
    if cfg.subcommand == "ev-bomb":
        params = bt_attack.BtParams(cfg.n_rounds or 100)
        analytic = (1.0 - math.sin(params.delta) ** 2) ** params.n_rounds
        survived = [r for r in rows if not r["exploded"]]
        results.update({
            "analytic_survival": analytic if cfg.live else 1.0,
            "survival_lower_bound": 1.0 - math.pi**2 / (4 * params.n_rounds),
            "survival_frequency": len(survived) / len(rows),
            "probe1_frequency": (sum(1 for r in survived if r["probe_outcome"] == 1)
                                 / len(survived)) if survived else None,
        })
    elif cfg.subcommand in ("bt-attack", "bt-list", "pm-identify"):
        results.update({
            "success_frequency": _freq(rows, "success"),
            "caught_frequency": _freq(rows, "caught"),
            "mean_verifications": sum(r["verifications"] for r in rows) / len(rows),
        })
        if cfg.subcommand != "bt-list":
            results["total_reissues"] = sum(r.get("reissues", 0) for r in rows)
    elif cfg.subcommand == "pm-tomography":
        uncaught = [r for r in rows if not r["caught"]]
        results.update({
            "caught_frequency": _freq(rows, "caught"),
            "catch_budget": cfg.f_budget,
            "uncaught": len(uncaught),
            "m": rows[0]["m"],
            "n_rounds": rows[0]["n_rounds"],
        })
        if uncaught:
            n_fail = sum(r["obs_failures"] for r in uncaught)
            n_est = sum(r["obs_estimates"] for r in uncaught)
            results.update({
                "mean_fidelity": sum(r["fidelity"] for r in uncaught) / len(uncaught),
                "min_fidelity": min(r["fidelity"] for r in uncaught),
                "obs_failure_frequency": n_fail / n_est,
                "max_obs_error": max(r["max_obs_error"] for r in uncaught),
                "chain_ok_all": all(r["chain_ok"] for r in uncaught),
            })
    return results


def build_summary(cfg: RunConfig, results: dict) -> dict:
    return {
        "subcommand": cfg.subcommand,
        "config": cfg.to_dict(),
        "rng": {"family": "philox4x64-10",
                "streams": "numpy SeedSequence(master_seed, spawn_key=(trial,))",
                "master_seed": cfg.master_seed},
        "backend": BACKEND,
        "results": results,
    }


def _write_summary(cfg: RunConfig, summary: dict) -> None:
    text = dumps_summary(summary)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommand drivers
# ---------------------------------------------------------------------------

def _run_figure(cfg: RunConfig) -> int:
    grid = analytics.default_sweep_grid(cfg.points)
    rows = analytics.sweep_theta(cfg.n_rounds or 10_000, grid)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            analytics.write_sweep_csv(rows, fh)
    else:
        analytics.write_sweep_csv(rows, sys.stdout)
    summary = build_summary(cfg, {
        "rows": len(rows),
        "max_p_caught": max(r.outcome.p_caught for r in rows),
        "p_probe1_at_min": rows[0].outcome.p_probe1,
        "p_probe0_at_max": rows[-1].outcome.p_probe0,
    })
    sys.stderr.write(dumps_summary(summary))
    return 0


def _run_bounds(cfg: RunConfig) -> int:
    fit = analytics.bound_0tn0_check()
    rng = np.random.default_rng(cfg.master_seed)
    states = [qcore.random_qubit(rng) for _ in range(50)]
    scaling = analytics.pm_scaling_check(qcore.SIGMA_X, states, cfg.coupling_budget)
    results = {
        "bound_fit": {"c_fit": fit.c_fit, "satisfied": fit.satisfied,
                      "cap": fit.cap, "worst_theta": fit.worst_theta,
                      "worst_N": fit.worst_n},
        "pm_scaling": {"bounded": scaling.bounded,
                       "growth_factor": scaling.growth_factor,
                       "states": len(states),
                       "max_n_times_catch": max(r.n_times_catch for r in scaling.rows),
                       "max_n_times_eig_err": max(r.n_times_eig_err for r in scaling.rows),
                       "max_n_times_state_err": max(r.n_times_state_err for r in scaling.rows)},
    }
    _write_summary(cfg, build_summary(cfg, results))
    if not fit.satisfied or not scaling.bounded:
        return 3
    return 0


def _run_transcripted_bt(cfg: RunConfig) -> int:
    """Single-trial bt run with a per-round JSONL transcript."""
    rng = trial_rng(cfg.master_seed, 0)
    bank = _build_bank(cfg)
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    oracle.transcript = []
    res = bt_attack.bt_recover_key_serial(oracle, cfg.epsilon, rng, cfg.mode,
                                          n_rounds=cfg.n_rounds)
    with open(cfg.transcript, "w") as fh:
        for entry in oracle.transcript:
            fh.write(json.dumps(entry) + "\n")
    results = {
        "trials": 1,
        "success_frequency": 0.0 if res.caught else 1.0,
        "caught_frequency": 1.0 if res.caught else 0.0,
        "mean_verifications": float(res.verifications),
        "transcript_rounds": len(oracle.transcript),
    }
    _write_summary(cfg, build_summary(cfg, results))
    return 0


def run(cfg: RunConfig) -> int:
    """Execute a validated RunConfig; returns the process exit code."""
    cfg.validate()
    if cfg.subcommand == "figure":
        return _run_figure(cfg)
    if cfg.subcommand == "bounds":
        return _run_bounds(cfg)
    if cfg.transcript and cfg.subcommand == "bt-attack":
        return _run_transcripted_bt(cfg)
    rows = run_trials(cfg)
    results = summarize(cfg, rows)
    summary = build_summary(cfg, results)
    if cfg.subcommand == "pm-tomography" and cfg.reconstruction:
        first = next((r for r in rows if not r["caught"] and "estimates" in r), None)
        recon = {}
        if first is not None:
            for i, (est, bloch) in enumerate(zip(first["estimates"], first["bloch"])):
                recon[str(i)] = {"est": est, "bloch": bloch}
        with open(cfg.reconstruction, "w") as fh:
            fh.write(dumps_summary(recon))
    if cfg.subcommand == "pm-tomography" and cfg.traces:
        _write_traces(cfg)
    if cfg.dump_db:
        bank = _build_bank(cfg)
        rng = trial_rng(cfg.master_seed, 0)
        bank.issue(cfg.n, rng)
        with open(cfg.dump_db, "w") as fh:
            fh.write(bank.export_json())
    _write_summary(cfg, summary)
    return 0


def _write_traces(cfg: RunConfig) -> None:
    """One extra seeded tomography run with per-repetition trace rows."""
    rng = trial_rng(cfg.master_seed, 0)
    bank = _build_bank(cfg)
    note = bank.issue(cfg.n, rng)
    oracle = bank.oracle_for(note)
    nu_final = cfg.nu_final if cfg.nu_final is not None else 6.0 * cfg.n * 0.2
    traces: list[dict] = []
    pm_attack.pm_forge_note(oracle, cfg.eta, nu_final, rng, f_budget=cfg.f_budget,
                            n_rounds=cfg.n_rounds, mode=cfg.mode, traces=traces)
    with open(cfg.traces, "w") as fh:
        fh.write("qubit,observable,repetition,passed,y_outcome\n")
        for row in traces:
            y = "" if row["y_outcome"] is None else str(row["y_outcome"])
            fh.write(f"{row['qubit']},{row['observable']},{row['repetition']},"
                     f"{int(row['passed'])},{y}\n")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=["sampled", "postselected", "fastforward"])
    p.add_argument("--out", help="summary path (figure: CSV path)")
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-db", dest="dump_db", help="export the bank database JSON")
    p.add_argument("--master-secret", dest="master_secret",
                   help=f"bank master secret (or set {MASTER_SECRET_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wiesnerlab",
        description="Attack laboratory for strictly tested quantum money",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ev-bomb", help="interaction-free bomb quality test")
    p.add_argument("--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--live", dest="live", action="store_true", default=None)
    p.add_argument("--dud", dest="live", action="store_false", default=None)
    _add_common(p)

    p = sub.add_parser("bt-attack", help="4-state key recovery via controlled flips")
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--variant", choices=["serial", "parallel"])
    p.add_argument("--policy", choices=["strict", "noisy"])
    p.add_argument("--return-frac", dest="return_frac", type=float)
    p.add_argument("--reissue-frac", dest="reissue_frac", type=float)
    p.add_argument("--transcript", help="per-round JSONL transcript (single trial)")
    _add_common(p)

    p = sub.add_parser("bt-list", help="list-scheme key recovery via reflections")
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--state-file", dest="state_file",
                   help="JSON [[re0,im0,re1,im1], ...] candidate states")
    _add_common(p)

    p = sub.add_parser("pm-identify", help="4-state key recovery via weak coupling")
    p.add_argument("--n", type=int)
    p.add_argument("--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--policy", choices=["strict", "noisy"])
    p.add_argument("--return-frac", dest="return_frac", type=float)
    p.add_argument("--reissue-frac", dest="reissue_frac", type=float)
    _add_common(p)

    p = sub.add_parser("pm-tomography", help="full single-copy tomography of a note")
    p.add_argument("--n", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--nu-final", dest="nu_final", type=float)
    p.add_argument("--f-budget", dest="f_budget", type=float)
    p.add_argument("--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--reconstruction", help="write {qubit: {est, bloch}} JSON here")
    p.add_argument("--traces", help="write per-repetition CSV traces here")
    _add_common(p)

    p = sub.add_parser("figure", help="three-outcome sweep CSV over theta*sqrt(N)")
    p.add_argument("--N", "--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--points", type=int)
    _add_common(p)

    p = sub.add_parser("bounds", help="survival-bound fit + weak-coupling scalings")
    p.add_argument("--coupling-budget", dest="coupling_budget", type=float)
    _add_common(p)

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {"subcommand": args.subcommand}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        file_cfg.pop("subcommand", None)
        base.update(file_cfg)
    for key, val in vars(args).items():
        if key in ("config", "subcommand") or val is None:
            continue
        base[key] = val
    # subcommand-specific defaults
    if args.subcommand == "bt-list":
        base.setdefault("scheme", "listed")
    if args.subcommand == "pm-tomography":
        base.setdefault("mode", "fastforward")
        if base.get("f_budget") is None and base.get("n_rounds") is None:
            base["f_budget"] = 0.25
    if args.subcommand == "figure":
        base.setdefault("n_rounds", 10_000)
    return RunConfig.from_dict(base)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.monotonic()
    try:
        cfg = resolve_config(args)
        code = run(cfg)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (EstimationFailedError, BankError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    sys.stderr.write(f"wall_time_s={time.monotonic() - t0:.3f}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
