"""Command-line front end.

Every subcommand writes its artifacts and a ``manifest.json`` into ``--out``
and nowhere else.  Exit status: 0 on success, 1 when an experiment gate
fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import blockstieltjes as bs
from . import limitlaw as ll
from . import spectra as sp
from .atoms import FAMILIES, AtomPairSpec
from .ensemble import PerturbationSpec, build_perturbation, sample_elliptic
from .errors import EllipticLabError
from .experiments import EXPERIMENTS, ExperimentConfig, trial_seed
from .svg import render_spectrum_svg

__all__ = ["main", "parse_complex", "parse_complex_list", "build_parser"]

FIGURE1_EIGS = (2j, -1.5, 1 + 1j)

_EXPERIMENT_HELP = {
    "outliers": "outliers of X + C outside E_{rho,2delta}; CSV columns: n, trial, seed, observed, predicted, matching, count_match",
    "radius": "spectral radius per n; CSV columns: n, trial, radius",
    "lsv": "least singular value over an eps-net; CSV columns: n, trial, min_sigma, argmin_z",
    "mean": "outlier of a constant mean shift; CSV columns: n, trial, outliers, count, deviation, pass",
    "isotropic": "sup |u*G v - m u*v| over a net; CSV columns: n, trial, sup_<pair>, spot_check",
    "bilinear": "bilinear-form tail frequencies; CSV columns: n, median_tail, mean_tail, ...",
    "esd": "mass in scaled ellipse and in E_{rho,delta}; CSV columns: n, trial, frac_in_Edelta, frac_in_scaled",
    "gamma": "empirical versus limiting block transform; CSV columns: n, trial, eta, z, a_N, b_N, c_N, error",
    "condition": "condition number of X - z; CSV columns: n, trial, sigma_1, sigma_n, condition",
}


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(rf"([+-])({_NUM}(?:/{_NUM})?)?(i?)")


def parse_complex(text) -> complex:
    """Parse ``2.25+0i``, ``1+i``, ``-3/2``, ``7/4i`` style numbers (``i`` or ``j``)."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("j", "i")
    if not s:
        raise ValueError("empty complex literal")
    if s[0] not in "+-":
        s = "+" + s
    total, pos = 0j, 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos or not (m.group(2) or m.group(3)):
            raise ValueError(f"cannot parse complex literal {text!r}")
        sign, body, imag = m.groups()
        if body is None:
            val = 1.0
        elif "/" in body:
            num, den = body.split("/", 1)
            val = float(num) / float(den)
        else:
            val = float(body)
        val = -val if sign == "-" else val
        total += 1j * val if imag else val
        pos = m.end()
    return total


def parse_complex_list(text: str) -> list[complex]:
    return [parse_complex(part) for part in str(text).split(",") if part.strip()]


def _fmt(z) -> str:
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}i"


def _git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class _Run:
    """Collects artifacts for the manifest."""

    def __init__(self, command: str, out: Path, config: dict | None):
        self.command = command
        self.out = out
        self.config = config
        self.started = datetime.now(timezone.utc).isoformat()
        self.artifacts: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.artifacts.append(name)
        return path

    def add(self, name: str) -> None:
        self.artifacts.append(name)

    def finish(self) -> None:
        entries = []
        for name in self.artifacts:
            data = (self.out / name).read_bytes()
            entries.append({"path": name, "git_blob": _git_blob_hash(data), "sha256": hashlib.sha256(data).hexdigest()})
        manifest = {
            "command": self.command,
            "config": self.config,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "artifacts": entries,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, help="pair correlation in [-1, 1]")
    p.add_argument("--n", type=str, help="dimension, or comma-separated ascending list")
    p.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--delta", type=float, help="neighbourhood width delta")
    p.add_argument("--out", type=Path, default=Path("ellipticlab_out"), help="output directory")
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--eigs", type=str, help='perturbation eigenvalues, e.g. "2i,-3/2,1+i"')
    p.add_argument("--mu", type=str, help="mean shift mu (complex)")
    p.add_argument("--z", type=str, help="complex point, or comma-separated list")
    p.add_argument("--family", choices=FAMILIES, help="atom family")
    p.add_argument("--format", choices=("csv", "json"), default="json", help="report format")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellipticlab", description="Elliptic random matrix laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sample": "sample an elliptic matrix Y; CSV: the n x n entries of Y",
        "theory": "closed-form limit quantities at --z",
        "density": "singular-value density of X - z; CSV columns: x, p",
        "figure1": "outlier scatter plot for the diagonal perturbation 2i, -3/2, 1+i",
        **_EXPERIMENT_HELP,
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
    return parser


def _load_config(args) -> ExperimentConfig:
    base = json.loads(args.config.read_text()) if args.config else {}
    if args.rho is not None:
        base["rho"] = args.rho
    if args.n is not None:
        base["n_list"] = [int(v) for v in args.n.split(",")]
    if args.trials is not None:
        base["trials"] = args.trials
    if args.seed is not None:
        base["seed"] = args.seed
    if args.delta is not None:
        base["delta"] = args.delta
    if args.family is not None:
        base["family"] = args.family
    if args.eigs is not None:
        base["perturbation"] = PerturbationSpec("diagonal_eigs", eigs=tuple(parse_complex_list(args.eigs))).to_dict()
    if args.mu is not None:
        base["perturbation"] = PerturbationSpec("mean_shift", mu=parse_complex(args.mu)).to_dict()
    if args.z is not None:
        base.setdefault("params", {})
        zs = [[z.real, z.imag] for z in parse_complex_list(args.z)]
        base["params"]["z_grid" if args.command in ("gamma", "lsv") else "z"] = zs if args.command in ("gamma", "lsv") else zs[0]
    return ExperimentConfig.from_dict(base)


def _apply_config_defaults(args) -> None:
    # non-experiment commands read scalar settings from --config when flags are absent
    if not args.config:
        return
    d = json.loads(args.config.read_text())
    for key, attr in (("rho", "rho"), ("seed", "seed"), ("delta", "delta"), ("family", "family")):
        if getattr(args, attr) is None and key in d:
            setattr(args, attr, d[key])
    if args.n is None and d.get("n_list"):
        args.n = str(d["n_list"][-1])


def _cmd_sample(args, run: _Run) -> int:
    n = int(args.n or 4)
    spec = AtomPairSpec(args.family or "gaussian", args.rho if args.rho is not None else 0.0)
    m = sample_elliptic(n, spec, args.seed if args.seed is not None else 0)
    if args.format == "csv":
        m.to_csv(run.out / "sample.csv")
        run.add("sample.csv")
    else:
        run.write("sample.json", json.dumps({"n": n, "seed": m.seed, "spec": spec.to_dict(), "entries": m.entries.tolist()}) + "\n")
    return 0


def _cmd_theory(args, run: _Run) -> int:
    rho = args.rho if args.rho is not None else 0.5
    z = parse_complex(args.z or "2.25")
    out = {"rho": rho, "z": _fmt(z), "dist_to_ellipse": float(ll.dist_to_ellipse(rho, z))}
    lines = [f"dist(z, E_rho) = {out['dist_to_ellipse']:.12g}"]
    if ll.in_ellipse(rho, z):
        lines.append("m(z): undefined (z lies in E_rho)")
    else:
        m = complex(ll.m_of_z(rho, z))
        out["m"] = _fmt(m)
        out["branch_gap"] = ll.branch_gap(rho, z)
        lines.insert(0, f"m(z) = {_fmt(m)}")
        lines.append(f"|m - m2| = {out['branch_gap']:.12g}")
    try:
        lam = ll.inverse_outlier_map(rho, z)
        out["H_inverse"] = _fmt(lam)
        lines.append(f"H^-1(z) = {_fmt(lam)}")
    except EllipticLabError:
        lines.append("H^-1(z): no preimage with |lambda| > 1")
    print("\n".join(lines))
    run.write("theory.json", json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_density(args, run: _Run) -> int:
    rho = args.rho if args.rho is not None else 0.0
    z = parse_complex(args.z or "0")
    R = 1.0 + abs(rho) + abs(z) + 1.0
    prof = bs.density_nu(rho, z, np.linspace(-R, R, 801))
    print(f"support gap = {prof.support_gap:.6g}, mass = {prof.mass():.6f}")
    if args.format == "csv":
        prof.to_csv(run.out / "density.csv")
        run.add("density.csv")
    else:
        run.write("density.json", json.dumps({"z": _fmt(z), "rho": rho, "support_gap": prof.support_gap, "x": prof.x.tolist(), "p": prof.p.tolist()}) + "\n")
    return 0


def _cmd_figure1(args, run: _Run) -> int:
    rho = args.rho if args.rho is not None else 0.5
    n = int(args.n or 1000)
    seed = args.seed if args.seed is not None else 0
    delta = args.delta if args.delta is not None else 0.05
    eigs = parse_complex_list(args.eigs) if args.eigs else list(FIGURE1_EIGS)
    pert = PerturbationSpec("diagonal_eigs", eigs=tuple(eigs))
    X = sample_elliptic(n, AtomPairSpec("gaussian", rho), trial_seed(seed, 0, n)).X
    ev = sp.eigenvalues(X + build_perturbation(n, pert), checks=0).eigenvalues
    pred = ll.predict_outliers(rho, eigs, delta)
    radius = n ** -0.25
    render_spectrum_svg(ev, rho, [(c, radius) for c in pred.predicted], run.out / "figure1.svg")
    run.add("figure1.svg")
    obs = ev[ll.dist_to_ellipse(rho, ev) > 2 * delta]
    run.write("figure1.json", json.dumps({
        "n": n, "rho": rho, "seed": seed, "radius": radius,
        "predicted": [_fmt(c) for c in pred.predicted],
        "observed_outliers": [_fmt(c) for c in sorted(obs.tolist(), key=lambda w: (-abs(w), w.real))],
    }, indent=2) + "\n")
    print(f"{obs.size} eigenvalues outside E_(rho,2delta); predicted {pred.j}")
    return 0


def _cmd_experiment(args, run: _Run) -> int:
    cfg = _load_config(args)
    run.config = cfg.to_dict()
    report = EXPERIMENTS[args.command](cfg)
    if args.format == "csv":
        run.write(f"{args.command}.csv", report.to_csv())
        run.write(f"{args.command}_summary.json", json.dumps(report.to_dict()["summary"], indent=2, sort_keys=True) + "\n")
    else:
        run.write(f"{args.command}.json", report.to_json() + "\n")
    for gate, ok in report.gates.items():
        print(f"{'PASS' if ok else 'FAIL'} {args.command}:{gate}")
    return 0 if report.passed else 1


_COMMANDS = {"sample": _cmd_sample, "theory": _cmd_theory, "density": _cmd_density, "figure1": _cmd_figure1}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    run = _Run(args.command, args.out, None)
    try:
        if args.command in _COMMANDS:
            _apply_config_defaults(args)
        code = _COMMANDS.get(args.command, _cmd_experiment)(args, run)
    except (EllipticLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run.finish()
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
