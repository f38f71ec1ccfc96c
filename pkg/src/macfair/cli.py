"""Command-line front end: simulate traces, analyze trace files, evaluate the
closed forms, and sweep a parameter axis comparing simulation against theory.

Exit codes: 0 success, 1 validation or domain error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import analytic, metrics
from .core import (
    MICROS_PER_SLOT,
    AlohaParams,
    ChannelTrace,
    CsmaMode,
    CsmaParams,
    TraceError,
    slots_to_us,
    us_to_slots,
    validate_trace,
)
from .sim import SimConfig, simulate_aloha, simulate_csma, simulate_tdma, write_audit

_DURATION_RE = re.compile(r"^(\d+)(us)?$")


def parse_duration(text: str, micros_per_slot: int) -> int:
    """A duration flag: plain slots, or microseconds with a `us` suffix."""
    m = _DURATION_RE.match(text.strip())
    if not m:
        raise TraceError(f"bad duration {text!r}; use slots or <n>us")
    value = int(m.group(1))
    if m.group(2):
        return us_to_slots(value, micros_per_slot)
    return value


def _duration_list(text: str, micros_per_slot: int) -> list[int]:
    return [parse_duration(part, micros_per_slot) for part in text.split(",")]


def _csma_params(args, micros_per_slot: int, l_pkt: int | None = None) -> CsmaParams:
    mps = micros_per_slot
    return CsmaParams(
        cw_min=args.cw_min,
        beta=args.beta,
        l_difs=parse_duration(args.difs, mps),
        l_pkt=l_pkt if l_pkt is not None else parse_duration(args.pkt, mps),
        l_ack=parse_duration(args.ack, mps),
        l_rts=parse_duration(args.rts, mps),
        l_cts=parse_duration(args.cts, mps),
    )


def _add_csma_flags(sp, require_pkt: bool = True) -> None:
    sp.add_argument("--cw-min", type=int, default=32)
    sp.add_argument("--beta", type=int, default=5)
    sp.add_argument("--difs", default="4", help="slots or <n>us")
    if require_pkt:
        sp.add_argument("--pkt", required=True, help="slots or <n>us")
    sp.add_argument("--ack", default="1")
    sp.add_argument("--rts", default="1")
    sp.add_argument("--cts", default="1")


_CSMA_MODES = {"rtscts": CsmaMode.RTS_CTS, "basic": CsmaMode.BASIC}


def cmd_simulate(args) -> int:
    mps = args.micros_per_slot
    users = tuple(args.users.split(","))
    config = SimConfig(seed=args.seed, horizon=args.slots, users=users,
                       warmup=args.warmup)
    audit_rec = None
    if args.protocol == "aloha":
        params = AlohaParams(args.pa, args.pb, parse_duration(args.slot, mps))
        trace = simulate_aloha(params, config)
    elif args.protocol in ("csma-rtscts", "csma-basic"):
        params = _csma_params(args, mps)
        mode = _CSMA_MODES[args.protocol.split("-")[1]]
        if args.audit_out:
            trace, audit_rec = simulate_csma(params, config, mode, audit=True)
        else:
            trace = simulate_csma(params, config, mode)
    else:
        lengths = _duration_list(args.lengths, mps)
        trace = simulate_tdma(lengths, config)
    validate_trace(trace)
    if args.out:
        trace.to_file(args.out)
    if audit_rec is not None:
        with open(args.audit_out, "w") as fp:
            write_audit(audit_rec, fp)
    report = metrics.channel_cycle_time(trace)
    psi = "nan" if report.psi_slots is None else f"{report.psi_slots:.6f}"
    psi_us = "nan" if report.psi_slots is None \
        else f"{report.psi_slots * mps:.6f}"
    print(f"psi_slots={psi}")
    print(f"psi_undefined={'true' if report.psi_undefined else 'false'}")
    print(f"psi_us={psi_us}")
    print(f"throughput={metrics.throughput(trace):.6f}")
    print(f"events={len(trace)}")
    if args.out:
        print(f"trace={args.out}")
    if args.audit_out:
        print(f"audit={args.audit_out}")
    return 0


def cmd_analyze(args) -> int:
    trace = ChannelTrace.from_file(args.trace)
    validate_trace(trace)
    cycles = metrics.channel_cycle_time(trace)
    intertx = metrics.inter_transmission_report(trace)
    if args.json:
        blob = cycles.as_dict()
        inter = intertx.as_dict()
        blob["intertx_pmf"] = inter["intertx_pmf"]
        blob["intertx_mean"] = inter["intertx_mean"]
        blob["intertx_users"] = inter["users"]
        blob["throughput"] = metrics.throughput(trace)
        print(json.dumps(blob, indent=2, sort_keys=True))
        return 0
    sys.stdout.write(cycles.to_text())
    sys.stdout.write(intertx.to_text())
    print(f"throughput={metrics.throughput(trace):.6f}")
    return 0


def cmd_analytic(args) -> int:
    mps = args.micros_per_slot
    if args.family == "aloha":
        params = AlohaParams(args.pa, args.pb, parse_duration(args.slot, mps))
        result = analytic.aloha_cct(params)
    elif args.family == "csma":
        params = _csma_params(args, mps)
        result = analytic.csma_cct(params, p_ni0=args.p_ni0, e_ni=args.e_ni,
                                   mode=_CSMA_MODES[args.mode], p_c=args.p_c)
    else:
        lengths = _duration_list(args.lengths, mps)
        psi = analytic.tdma_cct(lengths)
        print(f"psi_slots={psi:.6f}")
        print(f"psi_us={slots_to_us(1, mps) * psi:.6f}")
        print("mode=tdma")
        return 0
    print(f"psi_slots={result.psi_slots:.6f}")
    print(f"psi_us={result.psi_slots * mps:.6f}")
    print(f"mode={result.mode.value}")
    c = result.components
    for name in ("p_c", "mu", "part1_mean", "part2_mean", "p_ni0", "e_ni"):
        value = getattr(c, name)
        if value is not None:
            print(f"{name}={value:.6f}")
    return 0


def _parse_range(text: str, integer: bool) -> list:
    try:
        lo_s, hi_s, step_s = text.split(":")
        if integer:
            lo, hi, step = int(lo_s), int(hi_s), int(step_s)
            if step <= 0:
                raise ValueError
            return list(range(lo, hi + 1, step))
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
        if step <= 0:
            raise ValueError
        values = np.round(np.arange(lo, hi + step / 2, step), 10)
        return [float(v) for v in values]
    except ValueError:
        raise TraceError(f"bad range {text!r}; use lo:hi:step") from None


def _run_seed(base: int, point: int, rep: int) -> int:
    ss = np.random.SeedSequence(entropy=(base, point, rep))
    return int(ss.generate_state(1, np.uint64)[0])


def _sim_psi(protocol: str, x, args, seed: int, mps: int) -> float | None:
    config = SimConfig(seed=seed, horizon=args.slots, warmup=args.warmup)
    if protocol == "aloha":
        if args.axis == "p":
            pa, pb = x
            params = AlohaParams(pa, pb, parse_duration(args.slot, mps))
        else:
            params = AlohaParams(args.pa, args.pb, int(x))
        trace = simulate_aloha(params, config)
    elif protocol in ("csma-rtscts", "csma-basic"):
        mode = _CSMA_MODES[protocol.split("-")[1]]
        if args.axis == "pkt":
            params = _csma_params(args, mps, l_pkt=int(x))
        else:
            params = CsmaParams(cw_min=int(x), beta=args.beta,
                                l_difs=parse_duration(args.difs, mps),
                                l_pkt=parse_duration(args.pkt, mps),
                                l_ack=parse_duration(args.ack, mps),
                                l_rts=parse_duration(args.rts, mps),
                                l_cts=parse_duration(args.cts, mps))
        trace = simulate_csma(params, config, mode)
    else:
        length = int(x) if args.axis == "pkt" else parse_duration(args.pkt, mps)
        trace = simulate_tdma([length, length], config)
    report = metrics.channel_cycle_time(trace)
    return report.psi_slots


def _analytic_psi(protocol: str, x, args, mps: int) -> float:
    if protocol == "aloha":
        if args.axis == "p":
            pa, pb = x
            return analytic.aloha_cct(
                AlohaParams(pa, pb, parse_duration(args.slot, mps))).psi_slots
        return analytic.aloha_cct(
            AlohaParams(args.pa, args.pb, int(x))).psi_slots
    if protocol in ("csma-rtscts", "csma-basic"):
        mode = _CSMA_MODES[protocol.split("-")[1]]
        if args.axis == "pkt":
            params = _csma_params(args, mps, l_pkt=int(x))
        else:
            params = CsmaParams(cw_min=int(x), beta=args.beta,
                                l_difs=parse_duration(args.difs, mps),
                                l_pkt=parse_duration(args.pkt, mps),
                                l_ack=parse_duration(args.ack, mps),
                                l_rts=parse_duration(args.rts, mps),
                                l_cts=parse_duration(args.cts, mps))
        return analytic.csma_cct(params, p_ni0=args.p_ni0, e_ni=args.e_ni,
                                 mode=mode).psi_slots
    length = int(x) if args.axis == "pkt" else parse_duration(args.pkt, mps)
    return analytic.tdma_cct([length, length])


def cmd_sweep(args) -> int:
    mps = args.micros_per_slot
    protocols = args.protocols.split(",")
    known = {"aloha", "csma-rtscts", "csma-basic", "tdma"}
    for p in protocols:
        if p not in known:
            raise TraceError(f"unknown protocol {p!r}")
    if args.pkt_range:
        args.axis = "pkt"
        points = [(str(v), v) for v in _parse_range(args.pkt_range, integer=True)]
    elif args.p_range:
        args.axis = "p"
        if set(protocols) - {"aloha"}:
            raise TraceError("--p-range sweeps apply to aloha only")
        grid = _parse_range(args.p_range, integer=False)
        points = [(f"{pa:g}/{pb:g}", (pa, pb)) for pa in grid for pb in grid]
    elif args.cw_range:
        args.axis = "cw"
        if set(protocols) - {"csma-rtscts", "csma-basic"}:
            raise TraceError("--cw-range sweeps apply to CSMA only")
        points = [(str(v), v) for v in _parse_range(args.cw_range, integer=True)]
    else:
        raise TraceError("one of --pkt-range, --p-range, --cw-range is required")
    rows = ["x,protocol,psi_analytic_slots,psi_sim_mean_slots,psi_sim_ci95"]
    for pi, (label, x) in enumerate(points):
        for protocol in protocols:
            psi_a = _analytic_psi(protocol, x, args, mps)
            samples = []
            for rep in range(args.reps):
                psi = _sim_psi(protocol, x, args, _run_seed(args.seed, pi, rep), mps)
                if psi is not None:
                    samples.append(psi)
            if samples:
                mean = float(np.mean(samples))
                ci = (1.96 * float(np.std(samples, ddof=1)) / len(samples) ** 0.5
                      if len(samples) > 1 else 0.0)
                rows.append(f"{label},{protocol},{psi_a:.6f},{mean:.6f},{ci:.6f}")
            else:
                rows.append(f"{label},{protocol},{psi_a:.6f},nan,nan")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(text)
        print(f"sweep={args.out} points={len(points)} protocols={len(protocols)}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macfair",
        description="Short-term fairness lab: cycle-time metrics, closed forms, "
                    "and slot-level MAC simulators.")
    parser.add_argument("--micros-per-slot", type=int, default=MICROS_PER_SLOT)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulator and report cycle times")
    sim.add_argument("--protocol", required=True,
                     choices=["aloha", "csma-rtscts", "csma-basic", "tdma"])
    sim.add_argument("--slots", type=int, required=True, help="trace horizon")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--warmup", type=int, default=1000)
    sim.add_argument("--users", default="A,B")
    sim.add_argument("--out", help="write the trace to this file")
    sim.add_argument("--audit-out", help="write the CSMA round audit log")
    sim.add_argument("--pa", type=float, default=0.5)
    sim.add_argument("--pb", type=float, default=0.5)
    sim.add_argument("--slot", default="1", help="Aloha slot length")
    sim.add_argument("--lengths", default="30,30", help="TDMA packet lengths")
    _add_csma_flags(sim, require_pkt=False)
    sim.add_argument("--pkt", default="30", help="slots or <n>us")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="report metrics for a trace file")
    ana.add_argument("trace")
    ana.add_argument("--json", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    an = sub.add_parser("analytic", help="evaluate a closed-form cycle time")
    fam = an.add_subparsers(dest="family", required=True)
    al = fam.add_parser("aloha")
    al.add_argument("--pa", type=float, required=True)
    al.add_argument("--pb", type=float, required=True)
    al.add_argument("--slot", default="1")
    cs = fam.add_parser("csma")
    cs.add_argument("--mode", choices=sorted(_CSMA_MODES), default="rtscts")
    cs.add_argument("--p-ni0", type=float, default=0.32)
    cs.add_argument("--e-ni", type=float, default=1.0)
    cs.add_argument("--p-c", type=float, default=None,
                    help="override the fixed-point collision probability")
    _add_csma_flags(cs)
    td = fam.add_parser("tdma")
    td.add_argument("--lengths", required=True)
    an.set_defaults(func=cmd_analytic)

    sw = sub.add_parser("sweep", help="simulation vs theory along one axis")
    sw.add_argument("--protocols", default="tdma,csma-rtscts,csma-basic,aloha")
    sw.add_argument("--pkt-range", help="lo:hi:step in slots")
    sw.add_argument("--p-range", help="lo:hi:step transmit probability grid")
    sw.add_argument("--cw-range", help="lo:hi:step contention windows")
    sw.add_argument("--slots", type=int, default=200_000)
    sw.add_argument("--reps", type=int, default=3)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--warmup", type=int, default=1000)
    sw.add_argument("--out", help="write CSV here instead of stdout")
    sw.add_argument("--pa", type=float, default=0.5)
    sw.add_argument("--pb", type=float, default=0.5)
    sw.add_argument("--slot", default="1")
    sw.add_argument("--p-ni0", type=float, default=0.32)
    sw.add_argument("--e-ni", type=float, default=1.0)
    _add_csma_flags(sw, require_pkt=False)
    sw.add_argument("--pkt", default="30")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TraceError, analytic.AnalyticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
