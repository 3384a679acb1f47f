"""Command-line front end: ``supertube <command> [options]``.

Exit codes: 0 ok, 1 invariant failure (verify), 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import __version__
from . import bogoliubov as bog
from . import critical as crit
from . import oracle as orc
from . import pairseries as ps
from . import report
from . import variational as var
from .checks import Suite, oracle_setup
from .config import RunConfig
from .core import DispersionCurve, LatticeVector, as_lattice, lattice_array, wavevectors
from .errors import ConfigError, ModeSetNotClosed, NonConvergence, SupertubeError
from .potential import build_table, limit_table, v0_limit

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DISPERSION_HEADER = ["n1", "n2", "n3", "k_abs", "lambda", "selected", "complex"]


def make_table(cfg: RunConfig):
    p, spec = cfg.physical, cfg.potential
    V0 = v0_limit(spec, p)
    if cfg.raw["mode"] == "finiteN":
        return build_table(
            spec, p, cutoff=2 * cfg.cutoff, longitudinal_cutoff=2 * cfg.longitudinal_cutoff,
            rtol=cfg.raw["tolerance"]["quadrature"],
        )
    return limit_table(V0, p)


def _curve_rows(curve):
    sel = curve.selected if curve.selected is not None else np.ones(len(curve), bool)
    cpx = curve.complex_flag if curve.complex_flag is not None else np.zeros(len(curve), bool)
    for n, k, e, s, c in zip(curve.ns, curve.k_abs, curve.energy, sel, cpx):
        yield [int(n[0]), int(n[1]), int(n[2]), float(k), float(e), bool(s), bool(c)]


def transverse_curve(cfg: RunConfig, variant=None):
    """Lowest physical branch per l of the (flow, k2) pair series.

    Without ``variant`` the 4x4 blocks are diagonalised and the row carries
    the lowest selected real energy (falling back to the lowest real part,
    flagged complex, when no selected branch is real). With ``variant`` the
    closed-form first branch is tabulated instead.
    """
    p = cfg.physical
    V0 = v0_limit(cfg.potential, p)
    k1, k2 = as_lattice(cfg.raw["flow"]), as_lattice(cfg.raw["k2"])
    if variant is None:
        res = var.scan(k1, k2, V0, p, cfg.cutoff, cfg.longitudinal_cutoff)
        if max(res.reduction_error, res.trace_error) > cfg.raw["tolerance"]["eigen"]:
            raise NonConvergence(
                f"block reduction error {res.reduction_error:.3e}, trace error {res.trace_error:.3e}",
                module="variational",
            )
        ns = res.ns
        lam = res.lam.real
        real_sel = res.selected & ~res.complex_flag
        has = real_sel.any(axis=1)
        best_real = np.where(real_sel, lam, np.inf).min(axis=1)
        pool = np.where(res.selected.any(axis=1)[:, None], res.selected, True)
        fallback = np.where(pool, lam, np.inf).min(axis=1)
        energy = np.where(has, best_real, fallback)
        selected = res.selected.any(axis=1)
        cplx = ~has
    else:
        ns = lattice_array(cfg.cutoff, cfg.longitudinal_cutoff)
        ns = ns[~np.all(ns == np.array(-k2), axis=1)]
        vals = np.array([var.closed_form_branches(k1, k2, LatticeVector(*map(int, n)), V0, p, variant)[0] for n in ns])
        energy = vals.real
        cplx = vals.imag != 0
        selected = np.ones(len(ns), bool)
    ks = wavevectors(ns, p)
    return DispersionCurve(
        series="transverse",
        ns=ns,
        k_abs=np.sqrt(np.sum(ks**2, axis=1)),
        energy=energy,
        selected=selected,
        complex_flag=cplx,
    )


def cmd_dispersion(cfg, args):
    if args.series == "bogoliubov":
        curve = bog.dispersion(make_table(cfg), as_lattice(cfg.raw["flow"]), cfg.cutoff, cfg.longitudinal_cutoff)
    else:
        curve = transverse_curve(cfg, args.variant)
    if args.format == "json":
        rows = [dict(zip(DISPERSION_HEADER, r)) for r in _curve_rows(curve)]
        return report.dumps({"meta": report.meta(cfg), "series": curve.series, "rows": rows})
    return report.csv_text(DISPERSION_HEADER, _curve_rows(curve), cfg)


def _resonance_hits(cfg):
    p = cfg.physical
    V0 = v0_limit(cfg.potential, p)
    vmax = cfg.raw["resonance"]["v_max"] or 2 * crit.geometric_critical_velocity(p)
    hits = crit.resonance_scan(p, V0, vmax, cfg.raw["tolerance"]["resonance"], cfg.raw["resonance"]["cutoff"])
    return vmax, hits


def _hit_dict(h):
    return {
        "k0": list(h.k0),
        "k1": list(h.k1),
        "k2": list(h.k2),
        "e_flow": h.e_flow,
        "e_pair": h.e_pair,
        "gap": h.gap,
        "relative_gap": h.relative_gap,
    }


def cmd_critical(cfg, args):
    p = cfg.physical
    rep = crit.critical_velocity(p, make_table(cfg), cfg.cutoff, cfg.longitudinal_cutoff or None)
    vmax, hits = _resonance_hits(cfg)
    doc = {
        "meta": report.meta(cfg),
        "critical": rep.as_dict(),
        "resonance": {"v_max": vmax, "tolerance": cfg.raw["tolerance"]["resonance"], "hits": [_hit_dict(h) for h in hits]},
    }
    return report.dumps(doc)


RESONANCE_HEADER = ["k0_n1", "k1_n1", "k2_n2", "k2_n3", "e_flow", "e_pair", "gap", "relative_gap"]


def cmd_resonance(cfg, args):
    vmax, hits = _resonance_hits(cfg)
    if args.format == "json":
        return report.dumps({"meta": report.meta(cfg), "v_max": vmax, "hits": [_hit_dict(h) for h in hits]})
    rows = [[h.k0.n1, h.k1.n1, h.k2.n2, h.k2.n3, h.e_flow, h.e_pair, h.gap, h.relative_gap] for h in hits]
    return report.csv_text(RESONANCE_HEADER, rows, cfg)


PHI_HEADER = ["n1", "n2", "n3", "re", "im", "complex"]


def cmd_phi_table(cfg, args):
    table = make_table(cfg)
    state = ps.build_state(
        as_lattice(cfg.raw["flow"]), as_lattice(cfg.raw["k2"]), table,
        cutoff=cfg.cutoff, longitudinal_cutoff=cfg.longitudinal_cutoff,
    )
    rows = [[l.n1, l.n2, l.n3, complex(v).real, complex(v).imag, state.complex_flags[l]] for l, v in state.phi.items()]
    if args.format == "json":
        doc = {
            "meta": report.meta(cfg),
            "omega": state.omega,
            "energy": state.energy,
            "normalization": ps.normalization_check(state),
            "rows": [dict(zip(PHI_HEADER, r)) for r in rows],
        }
        return report.dumps(doc)
    return report.csv_text(PHI_HEADER, rows, cfg)


def cmd_oracle(cfg, args):
    o = cfg.raw["oracle"]
    p, basis, table = oracle_setup(cfg, o["coupling_fraction"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModeSetNotClosed)
        H = orc.build_hamiltonian(basis, table)
    spec = orc.diagonalize(H, basis)
    doc = {
        "meta": report.meta(cfg),
        "dimension": len(basis),
        "mode_set_closed": not any(issubclass(w.category, ModeSetNotClosed) for w in caught),
        "comparison": orc.compare_bogoliubov(spec, basis, table, o["density"]),
        "ground_sector": list(spec.ground_sector),
    }
    return report.dumps(doc)


def cmd_verify(cfg, args):
    suite = Suite(cfg, skip_oracle=args.skip_oracle)
    results = suite.run()
    info = suite.discrepancies()
    failed = [r for r in results if not r.passed]
    if args.format == "json":
        doc = {
            "meta": report.meta(cfg),
            "passed": not failed,
            "checks": [{"name": r.name, "module": r.module, "passed": r.passed, "detail": r.detail} for r in results],
            "informational": info,
        }
        text = report.dumps(doc)
    else:
        lines = [f"# config_hash={cfg.hash} version={__version__}"]
        lines += [f"{'PASS' if r.passed else 'FAIL'} [{r.module}] {r.name}: {r.detail}" for r in results]
        lines += [f"INFO {k}: {v}" for k, v in sorted(info.items())]
        lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
        text = "\n".join(lines) + "\n"
    return text, (EXIT_INVARIANT if failed else EXIT_OK)


COMMANDS = {
    "dispersion": cmd_dispersion,
    "critical": cmd_critical,
    "resonance": cmd_resonance,
    "phi-table": cmd_phi_table,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration (defaults are used when omitted)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--mode", choices=["limit", "finiteN"], help="override the configured coefficient mode")
    parser = argparse.ArgumentParser(prog="supertube", description="Spectra and critical velocities of a Bose gas in a thin periodic tube.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    d = sub.add_parser("dispersion", parents=[common], help="quasiparticle dispersion table")
    d.add_argument("--series", choices=["bogoliubov", "transverse"], default="bogoliubov")
    d.add_argument("--variant", choices=["literal", "corrected"], help="tabulate a closed-form branch instead of diagonalising")
    sub.add_parser("critical", parents=[common], help="critical velocity report with resonance hits")
    sub.add_parser("resonance", parents=[common], help="resonances between flowing and pair states")
    sub.add_parser("phi-table", parents=[common], help="pair coefficients of the configured state")
    sub.add_parser("oracle", parents=[common], help="exact diagonalisation against the Bogoliubov spectrum")
    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--skip-oracle", action="store_true", help="skip the exact-diagonalisation checks")
    return parser


def _write(text: str, path):
    if path:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "json" if args.command in ("critical", "oracle") else "csv"
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig.default()
        if args.mode:
            cfg = cfg.with_overrides(mode=args.mode)
        out = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SupertubeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    status = EXIT_OK
    if isinstance(out, tuple):
        out, status = out
    _write(out, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
