"""Command-line interface: ``gi-spec <subcommand> [--flags]``.

Every output file gets a sibling ``<out>.manifest.json`` recording the
command, resolved configuration, seed and tool version.  Exit codes: 0 on
success, 1 on a failed check or invalid model, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, boundary, galerkin, linalg, specialmodes, specsets, symbol
from .model import (ModelError, PlanetModel, boundary_grid, boundary_normal, load_model_file,
                    sample_background)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    outputs: list = field(default_factory=list)
    version: str = __version__

    def write(self, path):
        doc = {"schema": "gi-spec/manifest/1", **asdict(self)}
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def worker_count() -> int:
    raw = os.environ.get("GI_SPEC_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def fmt(v) -> str:
    return f"{float(v) + 0.0:.17g}"


def write_csv(path, schema: str, columns, rows):
    lines = [f"# schema: {schema}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- SVG --------------------------------------------------------------------------

def _svg_num(v):
    return f"{v:.3f}"


def render_spectrum_svg(sets, eigenvalues, path, s1=None, ds=None, size=480, tol=1e-6):
    """Axis diagram of spectral sets in the complex plane.

    ``sets`` (essential-spectrum pieces) are drawn as thick segments, ``s1`` as
    a thin cross and the off-axis part of ``ds`` as a dashed outline.
    Eigenvalues are ``x`` markers, red when outside every set in ``sets``.
    """
    eig = np.asarray(list(eigenvalues), dtype=complex)
    extent = 1.0
    for s in list(sets) + [t for t in (s1,) if t is not None]:
        extent = max(extent, s.real_part.halfwidth, s.imag_part.halfwidth)
    if ds is not None and ds.ds_region is not None:
        extent = max(extent, np.sqrt(ds.ds_region.disc_radius_sq))
    if eig.size:
        extent = max(extent, float(np.abs(eig.real).max()), float(np.abs(eig.imag).max()))
    extent *= 1.15
    c = size / 2
    k = (size / 2 - 10) / extent

    def px(re, im):
        return c + k * re, c - k * im

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
           f'<line x1="0" y1="{c}" x2="{size}" y2="{c}" stroke="#999" stroke-width="1"/>',
           f'<line x1="{c}" y1="0" x2="{c}" y2="{size}" stroke="#999" stroke-width="1"/>']
    for t in range(-int(extent), int(extent) + 1):
        if t == 0:
            continue
        x, _ = px(t, 0)
        _, y = px(0, t)
        out.append(f'<line x1="{_svg_num(x)}" y1="{c - 4}" x2="{_svg_num(x)}" y2="{c + 4}" stroke="#999"/>')
        out.append(f'<line x1="{c - 4}" y1="{_svg_num(y)}" x2="{c + 4}" y2="{_svg_num(y)}" stroke="#999"/>')

    if s1 is not None:
        for a, b in s1.real_part.intervals:
            (x1, y1), (x2, y2) = px(a, 0), px(b, 0)
            out.append(f'<line class="s1" x1="{_svg_num(x1)}" y1="{_svg_num(y1)}" x2="{_svg_num(x2)}" '
                       f'y2="{_svg_num(y2)}" stroke="black" stroke-width="1.5"/>')
        for a, b in s1.imag_part.intervals:
            (x1, y1), (x2, y2) = px(0, a), px(0, b)
            out.append(f'<line class="s1" x1="{_svg_num(x1)}" y1="{_svg_num(y1)}" x2="{_svg_num(x2)}" '
                       f'y2="{_svg_num(y2)}" stroke="black" stroke-width="1.5"/>')

    if ds is not None and ds.ds_region is not None and ds.ds_region.disc_radius_sq > 0:
        R = np.sqrt(ds.ds_region.disc_radius_sq)
        band = ds.ds_region.imag_band_halfwidth
        th = np.linspace(0, 2 * np.pi, 181)
        pts = [px(R * np.cos(t), np.clip(R * np.sin(t), -band, band)) for t in th]
        d = "M " + " L ".join(f"{_svg_num(x)} {_svg_num(y)}" for x, y in pts) + " Z"
        out.append(f'<path class="ds" d="{d}" fill="none" stroke="#2060c0" stroke-width="1.5" '
                   f'stroke-dasharray="6 4"/>')

    for s in sets:
        for a, b in s.real_part.intervals:
            (x1, y1), (x2, y2) = px(a, 0), px(b, 0)
            if b - a > 0:
                out.append(f'<line class="ess" x1="{_svg_num(x1)}" y1="{_svg_num(y1)}" x2="{_svg_num(x2)}" '
                           f'y2="{_svg_num(y2)}" stroke="#444" stroke-width="7"/>')
        for a, b in s.imag_part.intervals:
            (x1, y1), (x2, y2) = px(0, a), px(0, b)
            if b - a > 0:
                out.append(f'<line class="ess" x1="{_svg_num(x1)}" y1="{_svg_num(y1)}" x2="{_svg_num(x2)}" '
                           f'y2="{_svg_num(y2)}" stroke="#444" stroke-width="7"/>')
            else:
                out.append(f'<circle class="ess" cx="{_svg_num(x1)}" cy="{_svg_num(y1)}" r="3.5" fill="#444"/>')

    m = 4
    for lam in eig:
        inside = any(specsets.contains(s, lam, tol) for s in sets)
        color = "black" if inside else "red"
        x, y = px(lam.real, lam.imag)
        out.append(f'<path class="eig" d="M {_svg_num(x - m)} {_svg_num(y - m)} L {_svg_num(x + m)} '
                   f'{_svg_num(y + m)} M {_svg_num(x - m)} {_svg_num(y + m)} L {_svg_num(x + m)} '
                   f'{_svg_num(y - m)}" stroke="{color}" stroke-width="1.2"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# --- helpers ----------------------------------------------------------------------

def galerkin_pencil_for(model: PlanetModel, degree: int) -> galerkin.GalerkinPencil:
    """Galerkin pencil matching ``model``; needs the unit ball and constant ``N^2``."""
    if not model.is_ball:
        raise ModelError("Galerkin runs need the unit-ball domain")
    if model.nsq.kind != "constant":
        raise ModelError("Galerkin runs need a constant nsq profile")
    basis = galerkin.build_basis(degree)
    if model.gravity.mode == "radial":
        return galerkin.assemble_pencil(basis, model.omega, model.nsq.value, "radial")
    return galerkin.assemble_pencil(basis, model.omega, model.nsq.value, "constant", model.gravity.vector)


def sorted_modes(pencil):
    res = galerkin.solve_modes(pencil)
    lam = res.eigenvalues
    r = linalg.pencil_residuals(pencil.mass, pencil.coriolis, pencil.buoyancy, lam, res.eigenvectors)
    order = np.lexsort((lam.real, lam.imag))
    return lam[order], r[order]


def _tangent(n, rng):
    v = rng.standard_normal(3)
    v -= (v @ n) * n
    return v / np.linalg.norm(v)


# --- verification suites -------------------------------------------------------------

def suite_rank_oracle(model, rng, samples):
    sw = symbol.oracle_sweep(model, samples, rng)
    return {"checked": sw.checked, "mismatches": sw.mismatches, "passed": bool(sw.mismatches == 0)}


def suite_vtilde(model, rng, samples):
    Xb = boundary_grid(model, samples)
    bb = sample_background(model, Xb, check_domain=False)
    worst = worst_ind = 0.0
    skipped = 0
    for k in range(len(Xb)):
        n = boundary_normal(model, Xb[k])
        lam = complex(*rng.uniform(-2, 2, 2))
        om, nsq, gh = model.omega_vec, float(bb.nsq[k]), bb.ghat[k]
        try:
            closed = boundary.vtilde_inverse_local(om, nsq, gh, n, lam)
        except boundary.DegenerateSymbolError:
            skipped += 1
            continue
        direct = np.linalg.inv(boundary.vtilde(om, nsq, gh, n, lam))
        worst = max(worst, np.linalg.norm(closed - direct) / np.linalg.norm(direct))
        xh = _tangent(n, rng)
        ind = boundary.lopatinskii_indicator_local(om, nsq, gh, n, xh, lam)
        ref = xh @ direct @ xh
        worst_ind = max(worst_ind, abs(ind - ref) / max(abs(ref), np.linalg.norm(direct)))
    return {"max_rel_error": worst, "max_indicator_error": worst_ind, "skipped": skipped,
            "passed": bool(worst <= 1e-10 and worst_ind <= 1e-10)}


def suite_rigid(model, rng, samples):
    om = model.omega_vec
    if model.omega_norm == 0:
        return {"skipped": "zero rotation", "passed": True}
    a = np.cross(om, rng.standard_normal(3))
    worst = 0.0
    values = []
    for kind in specialmodes.KINDS:
        mode = specialmodes.rigid_mode(om, kind, a)
        values.append(mode.lam)
        for x in symbol.random_domain_points(model, samples, rng):
            r = np.linalg.norm(specialmodes.rigid_residual(om, mode, x))
            worst = max(worst, r / specialmodes.rigid_scale(om, mode, x))
    return {"max_rel_residual": worst, "eigenvalues": [[float(v.real) + 0.0, float(v.imag) + 0.0] for v in values],
            "passed": bool(worst <= 1e-12)}


def random_potential(rng, degree=4):
    mons = galerkin.monomials(degree)
    return specialmodes.Poly3({m: rng.standard_normal() for m in mons if sum(m) > 0})


def suite_geostrophic(model, rng, samples, potentials=10):
    if model.gravity.mode != "radial" or not model.is_ball:
        return {"skipped": "needs radial gravity on the unit ball", "passed": True}
    worst = [0.0, 0.0, 0.0]
    for _ in range(potentials):
        phi = random_potential(rng)
        X = symbol.random_domain_points(model, samples, rng)
        B = X / np.linalg.norm(X, axis=1)[:, None]
        for x in np.vstack([X, B]):
            res = specialmodes.geostrophic_residual(model, phi, x)
            worst[0] = max(worst[0], abs(res.divergence_rho_u))
            worst[1] = max(worst[1], abs(res.stilde_dot_u))
            if res.boundary_div_u is not None:
                worst[2] = max(worst[2], abs(res.boundary_div_u))
    return {"max_div_rho_u": worst[0], "max_stilde_dot_u": worst[1], "max_boundary_div_u": worst[2],
            "passed": bool(max(worst) <= 1e-10)}


# --- subcommands ----------------------------------------------------------------------

def cmd_spectrum(args, model):
    ess = specsets.essential_spectrum(model, args.interior_samples, args.boundary_samples)
    s1 = specsets.s1_bound(model)
    eigs = np.zeros(0, complex)
    gamma = args.gamma
    if args.degree is not None:
        pencil = galerkin_pencil_for(model, args.degree)
        eigs = galerkin.solve_modes(pencil).eigenvalues
        if gamma is None:
            gamma = galerkin.discrete_gamma(pencil) if pencil.n else 0.0
    ds = specsets.ds_region(model, gamma) if gamma is not None else None
    doc = {"schema": "gi-spec/spectrum-report/1", "essential": specsets.export_set(ess),
           "s1": specsets.export_set(s1), "ds": specsets.export_set(ds) if ds else None,
           "eigenvalues": [[float(v.real) + 0.0, float(v.imag) + 0.0] for v in eigs]}
    write_json(args.out, doc)
    outs = [args.out]
    if args.svg:
        render_spectrum_svg([ess], eigs, args.svg, s1=s1, ds=ds)
        outs.append(args.svg)
    return outs, True


def cmd_symbol_scan(args, model):
    rng = np.random.default_rng(args.seed)
    X = symbol.random_domain_points(model, args.points, rng)
    Xi = rng.standard_normal((args.points, 3))
    bg = sample_background(model, X)
    om = model.omega_vec
    rows = []
    for k in range(args.points):
        R = symbol.pointwise_radicand(om, float(bg.nsq[k]), bg.ghat[k], Xi[k])
        bm, bp = symbol.beta_pm_local(om, float(bg.nsq[k]), bg.ghat[k])
        rows.append([*X[k], *Xi[k], R, bm, bp])
    write_csv(args.out, "gi-spec/symbol-scan/1",
              ["x", "y", "z", "xi_x", "xi_y", "xi_z", "radicand", "beta_minus", "beta_plus"], rows)
    return [args.out], True


def cmd_lopatinskii_scan(args, model):
    rng = np.random.default_rng(args.seed)
    lam = complex(args.lambda_re, args.lambda_im)
    rows = []
    for x in boundary_grid(model, args.boundary_samples):
        n = boundary_normal(model, x)
        rep = boundary.lopatinskii_report(model, x, _tangent(n, rng), lam)
        h = boundary.boundary_failure_halfwidth(model, x)
        rows.append([*x, rep.indicator.real, rep.indicator.imag, h,
                     str(int(rep.interior_elliptic)), str(int(rep.boundary_elliptic))])
    write_csv(args.out, "gi-spec/lopatinskii-scan/1",
              ["x", "y", "z", "indicator_re", "indicator_im", "failure_halfwidth", "interior_elliptic",
               "boundary_elliptic"], rows)
    return [args.out], True


def cmd_galerkin(args, model):
    degrees = sorted(set(args.degree))
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(degrees))) as ex:
        results = list(ex.map(lambda d: (d, sorted_modes(galerkin_pencil_for(model, d))), degrees))
    rows = [[str(d), l.real, l.imag, r] for d, (lam, res) in results for l, r in zip(lam, res)]
    write_csv(args.out, "gi-spec/galerkin-eigenvalues/1", ["degree", "re_lambda", "im_lambda", "residual"], rows)
    outs = [args.out]
    if args.svg:
        ess = specsets.essential_spectrum(model)
        render_spectrum_svg([ess], results[-1][1][0], args.svg, s1=specsets.s1_bound(model))
        outs.append(args.svg)
    return outs, True


def cmd_rigid_modes(args, model):
    if model.omega_norm == 0:
        raise ModelError("rigid modes need a nonzero rotation vector")
    rng = np.random.default_rng(args.seed)
    om = model.omega_vec
    a = np.cross(om, rng.standard_normal(3))
    X = symbol.random_domain_points(model, args.points, rng)
    rows = []
    ok = True
    for kind in specialmodes.KINDS:
        mode = specialmodes.rigid_mode(om, kind, a)
        worst = max(np.linalg.norm(specialmodes.rigid_residual(om, mode, x)) / specialmodes.rigid_scale(om, mode, x)
                    for x in X)
        ok &= bool(worst <= 1e-12)
        rows.append([kind, mode.lam.real, mode.lam.imag, worst])
    write_csv(args.out, "gi-spec/rigid-modes/1", ["kind", "re_lambda", "im_lambda", "max_rel_residual"], rows)
    return [args.out], ok


def cmd_geostrophic(args, model):
    rng = np.random.default_rng(args.seed)
    rows = []
    ok = True
    specialmodes._require_radial(model)
    for j in range(args.potentials):
        phi = random_potential(rng, args.potential_degree)
        X = symbol.random_domain_points(model, args.points, rng)
        B = X / np.linalg.norm(X, axis=1)[:, None]
        worst = [0.0, 0.0, 0.0]
        for x in np.vstack([X, B]):
            res = specialmodes.geostrophic_residual(model, phi, x)
            worst[0] = max(worst[0], abs(res.divergence_rho_u))
            worst[1] = max(worst[1], abs(res.stilde_dot_u))
            if res.boundary_div_u is not None:
                worst[2] = max(worst[2], abs(res.boundary_div_u))
        ok &= bool(max(worst) <= 1e-10)
        rows.append([str(j), *worst])
    write_csv(args.out, "gi-spec/geostrophic/1",
              ["potential", "max_div_rho_u", "max_stilde_dot_u", "max_boundary_div_u"], rows)
    return [args.out], ok


def cmd_pseudospectrum(args, model):
    pencil = galerkin_pencil_for(model, args.degree)
    re, im, vals = galerkin.pseudospectrum_scan(pencil, (args.re_min, args.re_max), (args.im_min, args.im_max),
                                                args.n_re, args.n_im, whiten=args.whiten)
    rows = [[re[j], im[i], vals[i, j]] for i in range(len(im)) for j in range(len(re))]
    write_csv(args.out, "gi-spec/pseudospectrum/1", ["re", "im", "sigma_min"], rows)
    return [args.out], True


def cmd_verify(args, model):
    rng = np.random.default_rng(args.seed)
    report = {
        "rank_oracle": suite_rank_oracle(model, rng, args.samples),
        "vtilde_inverse": suite_vtilde(model, rng, min(args.samples, 512)),
        "rigid_modes": suite_rigid(model, rng, 100),
        "geostrophic": suite_geostrophic(model, rng, 20),
    }
    ok = all(v["passed"] for v in report.values())
    for name, v in report.items():
        print(f"{name}: {'PASS' if v['passed'] else 'FAIL'}")
    outs = []
    if args.out:
        write_json(args.out, {"schema": "gi-spec/verify/1", "passed": ok, "suites": report})
        outs.append(args.out)
    return outs, ok


COMMANDS = {
    "spectrum": cmd_spectrum,
    "symbol-scan": cmd_symbol_scan,
    "lopatinskii-scan": cmd_lopatinskii_scan,
    "galerkin": cmd_galerkin,
    "rigid-modes": cmd_rigid_modes,
    "geostrophic": cmd_geostrophic,
    "pseudospectrum": cmd_pseudospectrum,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gi-spec", description="Spectral sets and checks for rotating stratified fluids.",
                                allow_abbrev=False)
    p.add_argument("--version", action="version", version=f"gi-spec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, allow_abbrev=False)
        sp.add_argument("--model", required=True, help="model JSON file")
        return sp

    sp = add("spectrum", "essential spectrum, bounding cross and optional Galerkin overlay")
    sp.add_argument("--out", required=True, help="JSON output")
    sp.add_argument("--svg", help="SVG figure output")
    sp.add_argument("--interior-samples", type=int, default=2048)
    sp.add_argument("--boundary-samples", type=int, default=512)
    sp.add_argument("--gamma", type=float, help="lower bound of the potential energy (adds the full-spectrum region)")
    sp.add_argument("--degree", type=int, help="overlay Galerkin eigenvalues of this degree")

    sp = add("symbol-scan", "pointwise radicand and beta envelope at random (x, xi)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("lopatinskii-scan", "boundary indicator on the boundary grid")
    sp.add_argument("--out", required=True)
    sp.add_argument("--boundary-samples", type=int, default=256)
    sp.add_argument("--lambda-re", type=float, default=0.0)
    sp.add_argument("--lambda-im", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("galerkin", "polynomial Galerkin eigenvalues on the unit ball")
    sp.add_argument("--degree", type=int, nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--svg")

    sp = add("rigid-modes", "residuals of the six quasi-rigid modes")
    sp.add_argument("--out", required=True)
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("geostrophic", "residuals of geostrophic flows from random polynomial potentials")
    sp.add_argument("--out", required=True)
    sp.add_argument("--potentials", type=int, default=10)
    sp.add_argument("--potential-degree", type=int, default=4)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("pseudospectrum", "normalized smallest singular value of the Galerkin pencil on a grid")
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--re-min", type=float, default=-1.0)
    sp.add_argument("--re-max", type=float, default=1.0)
    sp.add_argument("--im-min", type=float, default=-3.0)
    sp.add_argument("--im-max", type=float, default=3.0)
    sp.add_argument("--n-re", type=int, default=41)
    sp.add_argument("--n-im", type=int, default=121)
    sp.add_argument("--whiten", action="store_true", help="scan the identity-mass congruent pencil")

    sp = add("verify", "run the oracle suites; nonzero exit on any failure")
    sp.add_argument("--out", help="JSON report")
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        model = load_model_file(args.model)
        outputs, ok = COMMANDS[args.command](args, model)
    except (ModelError, ValueError, OSError) as e:
        print(f"gi-spec {args.command}: {e}", file=sys.stderr)
        return 1
    if outputs:
        config = {k: v for k, v in vars(args).items() if k != "command"}
        config["model_resolved"] = model.to_dict()
        RunManifest(args.command, config, getattr(args, "seed", None), outputs).write(str(outputs[0]) + ".manifest.json")
    return 0 if ok else 1


def main():
    sys.exit(run())
