"""Command-line harness: ``r2rsim run | matrix | analyze``."""
import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from r2rsim.metrics import (compare_to_rta, extract_latencies, format_report, summarize,
                            write_report_csv, write_stats_csv)
from r2rsim.rta import dimension_channel
from r2rsim.workload import (VARIANTS, ConfigError, build_variant, load_scenario, parse_duration,
                             parse_variant, replication_seed, validate, variant_label)

EMIT_CHOICES = ("trace", "stats", "report")
MATRIX_COLUMNS = ("variant", "topic", "runs", "p99_ns", "p99_std_ns", "max_ns", "deadline_ns",
                  "rta_ns", "dropped", "verdict")


def _emit_list(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in EMIT_CHOICES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown emit item(s): {', '.join(bad)}")
    return set(items)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _scenario_args(p):
    p.add_argument("--scenario", default="table1",
                   help="scenario file, or 'table1' for the built-in benchmark")
    p.add_argument("--duration", help="override the simulated horizon, e.g. 20s or 500ms")
    p.add_argument("--reps", type=_positive_int, help="replications (scenario default: 10)")
    p.add_argument("--seed", type=int, help="base seed; replication k uses seed + k")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="replications simulated in parallel")


def build_parser():
    ap = argparse.ArgumentParser(prog="r2rsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one variant and write stats/trace/report")
    _scenario_args(run)
    run.add_argument("--variant", help="variant for every node (nort- prefix allowed)")
    run.add_argument("--nort", action="store_true", help="run node threads under SCHED_OTHER")
    run.add_argument("--emit", type=_emit_list, default={"stats", "report"},
                     help="comma list of trace,stats,report (default stats,report)")

    mx = sub.add_parser("matrix", help="simulate several variants, one combined CSV")
    _scenario_args(mx)
    mx.add_argument("--variants", default=",".join(VARIANTS),
                    help="comma list of variants (default: all)")
    mx.add_argument("--nort", action="store_true", help="also run the nort- form of each variant")

    an = sub.add_parser("analyze", help="response-time analysis only")
    an.add_argument("--scenario", default="table1")
    return ap


# -- helpers -----------------------------------------------------------------

def _load(args):
    spec = load_scenario(args.scenario)
    changes = {}
    if getattr(args, "duration", None):
        changes["duration"] = parse_duration(args.duration)
    if getattr(args, "reps", None):
        changes["replications"] = args.reps
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        spec = replace(spec, **changes)
    problems = validate(spec)
    if problems:
        raise ConfigError("invalid scenario:\n  " + "\n  ".join(problems))
    return spec


def _replicate(spec, k, keep_trace):
    """One replication; returns plain data so it can cross process boundaries."""
    sim = build_variant(spec, replication_seed(spec, k)).run()
    _, runs = extract_latencies(sim.trace, sim.chains, spec.warmup)
    in_flight = sim.in_flight()
    threads = sorted(sim.runtime_totals().items())
    trace_csv = sim.trace.to_csv() if keep_trace else None
    return runs, threads, trace_csv, in_flight


def simulate(spec, jobs=1, keep_trace=False):
    """Run all replications of ``spec``; results are ordered by replication."""
    ks = range(spec.replications)
    if jobs > 1 and spec.replications > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_replicate, [spec] * len(ks), ks, [keep_trace] * len(ks)))
    return [_replicate(spec, k, keep_trace) for k in ks]


def evaluate(spec, results):
    per_run = [r[0] for r in results]
    subjects = [c.name for c in spec.subjects()]
    stats = summarize(per_run, subjects)
    return stats, compare_to_rta(stats, spec.rta_by_subject(), spec.deadlines())


def _write(path, writer, *payload):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(fh, *payload)


def _write_threads(fh, results):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("replication", "thread", "runtime_ns"))
    for k, r in enumerate(results):
        for name, ns in r[1]:
            w.writerow((k, name, ns))


# -- commands ----------------------------------------------------------------

def cmd_run(args):
    spec = _load(args)
    if args.variant or args.nort:
        variant = args.variant or spec.nodes[0].variant
        spec = spec.with_variant(variant, nort=args.nort or None)
    os.makedirs(args.out, exist_ok=True)
    results = simulate(spec, args.jobs, keep_trace="trace" in args.emit)
    stats, comparisons = evaluate(spec, results)
    if "stats" in args.emit:
        _write(os.path.join(args.out, "stats.csv"), write_stats_csv, stats)
        _write(os.path.join(args.out, "threads.csv"), _write_threads, results)
    if "trace" in args.emit:
        for k, r in enumerate(results):
            with open(os.path.join(args.out, f"trace_{k}.csv"), "w", encoding="utf-8",
                      newline="") as fh:
                fh.write(r[2])
    labels = sorted({variant_label(n.variant, n.nort) for n in spec.nodes})
    title = (f"{spec.name} / {', '.join(labels)}: {spec.replications} replication(s) "
             f"of {spec.duration / 1e9:g} s, seed {spec.seed}")
    text = format_report(comparisons, title)
    if "report" in args.emit:
        _write(os.path.join(args.out, "report.csv"), write_report_csv, comparisons)
        with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_matrix(args):
    names = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not names:
        return 0
    spec = _load(args)
    labels = []
    for name in names:
        base, nort = parse_variant(name)
        labels.append(variant_label(base, nort))
        if args.nort and not nort:
            labels.append(variant_label(base, True))
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for label in labels:
        vspec = spec.with_variant(label)
        stats, comparisons = evaluate(vspec, simulate(vspec, args.jobs))
        by_subject = {s.subject: s for s in stats}
        for c in comparisons:
            s = by_subject[c.subject]
            rows.append((label, c.subject, s.runs, s.p99, s.p99_std, s.max, c.deadline_ns,
                         c.rta_ns, c.dropped, c.verdict))
        print(f"{label:<28}" + " ".join(f"{c.subject}={c.verdict}" for c in comparisons))
    path = os.path.join(args.out, "matrix.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MATRIX_COLUMNS)
        for row in rows:
            w.writerow(tuple("" if v is None else f"{v:.3f}" if isinstance(v, float) else v
                             for v in row))
    return 0


def analyze_lines(spec):
    tasks = spec.rta_tasks()
    res = spec.analysis()
    lines = [f"{'task':<12}{'C_ms':>10}{'T_ms':>10}{'prio':>6}{'R_ms':>12}{'capacity':>10}"
             "  verdict"]
    for r in res.responses:
        t = r.task
        cap = dimension_channel(r.value, t.period, r.converged)
        if not r.converged:
            verdict, rtxt = "divergent", f">{r.value / 1e6:.3f}"
        else:
            verdict = "ok" if r.schedulable else "deadline-miss"
            rtxt = f"{r.value / 1e6:.3f}"
        lines.append(f"{t.name:<12}{t.cost / 1e6:>10.3f}{t.period / 1e6:>10.3f}{t.priority:>6}"
                     f"{rtxt:>12}{'-' if cap is None else cap:>10}  {verdict}")
    u = spec.utilization()
    note = " (> 1, overloaded)" if u > 1 else ""
    lines.append(f"utilization {u:.3f}{note}")
    lines.append("schedulable" if res.schedulable and tasks else "NOT schedulable")
    return lines


def cmd_analyze(args):
    spec = load_scenario(args.scenario)
    problems = validate(spec)
    if problems:
        raise ConfigError("invalid scenario:\n  " + "\n  ".join(problems))
    print("\n".join(analyze_lines(spec)))
    return 0


COMMANDS = {"run": cmd_run, "matrix": cmd_matrix, "analyze": cmd_analyze}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"r2rsim: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"r2rsim: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
