"""``lmax`` command line.

Exit codes: 0 success, 1 error, 2 hypothesis not met (results still
written), 64 malformed usage or config, 74 I/O failure.
"""
import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74

log = logging.getLogger("lmax")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser():
    p = _Parser(prog="lmax", description="Local maximal operators on domains of R^n.")
    p.add_argument("--version", action="store_true", help="print the version and exit")
    sub = p.add_subparsers(dest="verb", parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON config (domain or experiment)")
        sp.add_argument("--out", default="lmax-out", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None, help="parallel workers (default $LMAX_WORKERS or 1)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted keys, JSON values)")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("distance", help="distance-to-complement field of a domain")
    common(sp)
    sp = sub.add_parser("whitney", help="Whitney-type covering with invariant checks")
    common(sp)
    sp.add_argument("--beta", default="1/2")
    sp.add_argument("-t", type=int, default=None, help="covering parameter (default: minimal with 2^-t <= beta/20)")
    sp = sub.add_parser("cloud", help="lattice cloud of a cube")
    common(sp)
    sp.add_argument("--beta", default="1/2")
    sp.add_argument("--center", required=True, help="comma-separated coordinates (fractions allowed)")
    sp.add_argument("--half", required=True, help="half side of the cube")
    sp.add_argument("--resolution", type=int, default=None)
    sp = sub.add_parser("maximal", help="evaluate a local maximal operator")
    common(sp, config_required=False)
    sp.add_argument("--field", required=True, help="field file (LMAXFLD)")
    sp.add_argument("--mode", default="uncentered", choices=["uncentered", "centered", "truncated", "weighted", "fractional"])
    sp.add_argument("--beta", default="1/2")
    sp.add_argument("--lattice", default="dyadic", choices=["dyadic", "dense"])
    sp.add_argument("--sigma", help="sigma field file for the weighted mode")
    sp.add_argument("--alpha-frac", type=float, default=0.0)
    sp = sub.add_parser("weights", help="weight-class diagnostics for an experiment config")
    common(sp)
    sp = sub.add_parser("verify", help="run a theorem-level experiment")
    common(sp)
    sp.add_argument("--experiment", required=True, choices=["theorem2", "theorem3", "prop45", "beta", "self-improvement"])
    sp = sub.add_parser("sweep", help="trend tables over domains, exponents and grids")
    common(sp)
    return p


# -- helpers -------------------------------------------------------------------------

def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _apply_overrides(obj, overrides):
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = obj
        parts = key.split(".")
        for k in parts[:-1]:
            node = node.setdefault(k, {})
        node[parts[-1]] = val
    return obj


def _workers(args):
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("LMAX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError("LMAX_WORKERS must be an integer") from None
    return 1


def _manifest(out, args, config_obj, seed):
    import scipy

    from . import __version__
    from .io import dump_json, write_json

    cfg_text = dump_json(config_obj)
    write_json(out / "manifest.json", {
        "verb": args.verb,
        "config_hash": hashlib.sha256(cfg_text.encode()).hexdigest()[:16],
        "config": config_obj,
        "seed": seed,
        "versions": {"localmax": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })


def _frac(text):
    from .dyadic import parse_ratio

    try:
        return parse_ratio(float(text)) if "/" not in text else Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _heatmap(csv_path, svg_path, title):
    """SVG heatmap read back from the CSV it illustrates."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "lmax"
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    i = data["i"].astype(int)
    j = data["j"].astype(int)
    grid = np.full((i.max() + 1, j.max() + 1), np.nan)
    grid[i, j] = data["value"]
    fig, ax = plt.subplots(figsize=(4, 4))
    im = ax.imshow(grid.T, origin="lower", cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _trend_plot(csv_path, svg_path):
    import csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "lmax"
    series = {}
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = f'{row["domain"]} b={row["beta"]} p={row["p"]} q={row["q"]}'
            series.setdefault(key, []).append((int(row["cells"]), float(row["gap"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in sorted(series):
        pts = sorted(series[key])
        ax.plot([c for c, _ in pts], [g for _, g in pts], marker="o", label=key)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("cells per axis")
    ax.set_ylabel("norm / testing constant")
    if series:
        ax.legend(fontsize=5)
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _field_csv(path, values):
    from .io import write_csv

    idx = np.argwhere(np.ones(values.shape, dtype=bool))
    write_csv(path, ["i", "j", "value"], ([int(a), int(b), float(values[a, b])] for a, b in idx))


# -- verbs ---------------------------------------------------------------------------

def _domain_cfg(args):
    obj = _apply_overrides(_load_json(args.config), args.overrides)
    return obj


def _domain(obj, base):
    from .io import domain_from_json

    return domain_from_json(obj, base)


def cmd_distance(args, out):
    from .io import write_field, write_json
    from .fields import ScalarField

    obj = _domain_cfg(args)
    _manifest(out, args, obj, args.seed)
    dom = _domain(obj, Path(args.config).parent)
    d = dom.node_distance
    write_field(out / "distance.bin", ScalarField(dom, d))
    write_json(out / "distance.json", {"nodes": int(d.size), "interior": int(dom.interior.sum()), "max": float(d.max())})
    if dom.n == 2:
        _field_csv(out / "distance.csv", d)
        _heatmap(out / "distance.csv", out / "distance.svg", "distance to complement")
    return EXIT_OK


def cmd_whitney(args, out):
    from .coverings import build_whitney, check_whitney, minimal_t
    from .io import write_json

    obj = _domain_cfg(args)
    beta = _frac(args.beta)
    t = args.t if args.t is not None else minimal_t(beta)
    _manifest(out, args, {"domain": obj, "beta": str(beta), "t": t}, args.seed)
    dom = _domain(obj, Path(args.config).parent)
    W = build_whitney(dom, beta, t)
    bad = check_whitney(W)
    write_json(out / "covering.json", W.to_json())
    summary = {"cubes": len(W), "beta": str(beta), "t": t, "violations": bad,
               "provenance": {p: W.provenance.count(p) for p in sorted(set(W.provenance))},
               "bands": sorted({int(k) for k in W.band}), "ok": not any(bad.values())}
    write_json(out / "summary.json", summary)
    print(json.dumps({"cubes": len(W), "ok": summary["ok"]}))
    return EXIT_OK if summary["ok"] else EXIT_ERROR


def cmd_cloud(args, out):
    from .coverings import cloud
    from .geometry import Cube
    from .io import write_json, write_mask

    obj = _domain_cfg(args)
    beta = _frac(args.beta)
    center = tuple(_frac(c) for c in args.center.split(","))
    half = _frac(args.half)
    _manifest(out, args, {"domain": obj, "beta": str(beta), "center": [str(c) for c in center], "half": str(half)}, args.seed)
    dom = _domain(obj, Path(args.config).parent)
    if len(center) != dom.n:
        raise UsageError("center dimension does not match the domain")
    cl = cloud(dom, Cube(center, half), beta, resolution=args.resolution)
    write_mask(out / "cloud.mask", cl.region)
    write_json(out / "cloud.json", {"measure": cl.measure, "nodes": int(cl.region.sum()),
                                    "resolution": cl.resolution, "stable": cl.stable,
                                    "band_span": list(cl.band_span), "ratio": cl.measure / float(Cube(center, half).volume)})
    return EXIT_OK


def cmd_maximal(args, out):
    from .geometry import Domain
    from .io import read_field, write_field, write_json
    from .maximal import maximal

    obj = _apply_overrides(_load_json(args.config), args.overrides) if args.config else None
    _manifest(out, args, {"domain": obj, "field": str(args.field), "mode": args.mode, "beta": args.beta,
                          "lattice": args.lattice}, args.seed)
    if obj is not None:
        dom = _domain(obj, Path(args.config).parent)
        f = read_field(args.field, dom)
    else:
        vals, h = read_field(args.field)
        # a bare field file is read on the punctured space centred in its box
        lo = [-(s * h) / 2 for s in vals.shape]
        dom = Domain(vals.ndim, "punctured-space", lo, h, vals.shape)
        from .fields import ScalarField

        f = ScalarField(dom, vals)
    kw = {"lattice": args.lattice}
    if args.mode == "weighted":
        if not args.sigma:
            raise UsageError("weighted mode needs --sigma")
        kw["sigma"] = read_field(args.sigma, dom)
    if args.mode == "fractional":
        kw["alpha_frac"] = args.alpha_frac
    res = maximal(f, _frac(args.beta), args.mode, **kw)
    write_field(out / "maximal.bin", f.with_values(res.values))
    write_json(out / "witness.json", {
        "summary": res.summary(),
        "witness_center": res.witness_center.reshape(-1, dom.n),
        "witness_m": res.witness_m.reshape(-1),
        "flagged": np.argwhere(res.flagged),
    })
    if dom.n == 2:
        _field_csv(out / "maximal.csv", res.values)
        _heatmap(out / "maximal.csv", out / "maximal.svg", f"{args.mode} maximal function")
    return EXIT_OK


def _experiment(args):
    from .verification import ExperimentConfig

    obj = _apply_overrides(_load_json(args.config), args.overrides)
    if args.seed is not None:
        obj["seed"] = args.seed
    try:
        cfg = ExperimentConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"malformed experiment config: {exc}") from exc
    return cfg


def cmd_weights(args, out):
    from .io import write_json
    from .verification import build_setup
    from .weights import (ainfty_estimate, apq_constant, box_sample, doubling_constant,
                          reverse_holder_exponent)

    cfg = _experiment(args)
    _manifest(out, args, cfg.to_json(), cfg.seed)
    s = build_setup(cfg)
    base = box_sample(s.domain, stride=int(cfg.sample.get("stride", 1)))
    reports = {
        "doubling_u": doubling_constant(s.u, s.beta).to_json(),
        "doubling_sigma": doubling_constant(s.sigma, s.beta).to_json(),
        "apq_beta": apq_constant(s.u, s.exps, base, sigma=s.sigma, beta=s.beta).to_json(),
        "apq_global": apq_constant(s.u, s.exps, base, sigma=s.sigma).to_json(),
        "ainfty_sigma": ainfty_estimate(s.sigma, s.beta, cap=cfg.caps["ainfty"], seed=cfg.seed).to_json(),
        "rhi_sigma": reverse_holder_exponent(s.sigma, s.beta, cap=cfg.caps["rhi"]).to_json(),
    }
    write_json(out / "weights.json", {"config_hash": cfg.hash, "reports": reports})
    return EXIT_OK


def cmd_verify(args, out):
    from .io import write_json
    from .verification import EXPERIMENTS

    cfg = _experiment(args)
    _manifest(out, args, cfg.to_json(), cfg.seed)
    report = EXPERIMENTS[args.experiment](cfg)
    write_json(out / f"report-{args.experiment}.json", report)
    for e in report["assertions"]:
        print(f'{e["status"]:>20}  {e["name"]}')
    return {"pass": EXIT_OK, "fail": EXIT_ERROR}.get(report["status"], EXIT_HYPOTHESIS)


def cmd_sweep(args, out):
    from .io import write_csv, write_json
    from .verification import sweep, sweep_configs

    spec = _apply_overrides(_load_json(args.config), args.overrides)
    if args.seed is not None:
        spec["seed"] = args.seed
    try:
        configs = sweep_configs(spec)
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"malformed sweep config: {exc}") from exc
    _manifest(out, args, spec, spec.get("seed", 0))
    rows = sweep(configs, workers=_workers(args))
    header = list(rows[0]) if rows else []
    write_csv(out / "sweep.csv", header, ([r[k] for k in header] for r in rows))
    write_json(out / "sweep.json", {"rows": rows})
    if rows:
        _trend_plot(out / "sweep.csv", out / "sweep.svg")
    return EXIT_OK if all(r["necessity"] == "pass" for r in rows) else EXIT_ERROR


VERBS = {
    "distance": cmd_distance,
    "whitney": cmd_whitney,
    "cloud": cmd_cloud,
    "maximal": cmd_maximal,
    "weights": cmd_weights,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def run(argv=None):
    from .geometry import DomainError
    from .io import FormatError

    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; parse errors carry EXIT_USAGE
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.version:
        from . import __version__

        print(__version__)
        return EXIT_OK
    if not args.verb:
        _parser().print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return VERBS[args.verb](args, out)
    except (UsageError, FormatError) as exc:
        print(f"lmax: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lmax: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"lmax: domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"lmax: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
