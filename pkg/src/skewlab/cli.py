"""Command-line front end.

Exit codes: 0 pass, 2 fail, 3 inconclusive, 64 usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .certificates import ProbeCertificate, canonical_json
from .config import RunConfig, parse_complex, parse_grid
from .family import GOLDEN, INCONCLUSIVE, REFUTED, VERIFIED

EXIT_USAGE = 64
PROBES = ("expansivity", "intersections", "fatou", "disjointness", "ramification", "julia-coincidence")


class Usage(click.UsageError):
    exit_code = EXIT_USAGE


def _complex(_ctx, _param, value):
    if value is None:
        return None
    try:
        return parse_complex(value)
    except ValueError:
        raise click.BadParameter(f"not a complex number: {value!r}") from None


def _grid(_ctx, _param, value):
    try:
        return parse_grid(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None


def common(fn):
    opts = [
        click.option("--d", "d", type=int, default=3, show_default=True, help="degree"),
        click.option("--c", "c", callback=_complex, default=None, help="free critical point (default: certified finder output)"),
        click.option("--beta", callback=_complex, default="1", show_default=True),
        click.option("--theta", type=float, default=GOLDEN, show_default=True, help="rotation number of p"),
        click.option("--nradius", type=float, default=0.05, show_default=True, help="radius of N in the linear coordinate"),
        click.option("--grid", "grid", callback=_grid, default="512x512", show_default=True),
        click.option("--nmax", type=int, default=None, help="iteration cap (meaning depends on the command)"),
        click.option("--tol", type=float, default=1e-12, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--out", type=click.Path(file_okay=False), default="skewlab-out", show_default=True),
        click.option("--threads", type=click.IntRange(1, 64), default=None, help="worker threads for compiled kernels"),
        click.option("--quick", is_flag=True),
        click.option("--unchecked", is_flag=True, help="allow parameters without a certificate"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(kw: dict, probes: tuple[str, ...] = ()) -> RunConfig:
    from . import kernels

    kernels.set_threads(kw.pop("threads"))
    nmax = kw.pop("nmax")
    try:
        return RunConfig(
            d=kw["d"], c=kw["c"], beta=kw["beta"], theta=kw["theta"], nradius=kw["nradius"], grid=kw["grid"],
            nmax=nmax if nmax is not None else 4096, tol=kw["tol"], seed=kw["seed"], probes=probes,
            out=kw["out"], quick=kw["quick"], unchecked=kw["unchecked"],
        )
    except ValueError as exc:
        raise Usage(str(exc)) from None


def _workspace(cfg: RunConfig):
    from .pipeline import UncertifiedParameters, Workspace

    ws = Workspace(cfg)
    try:
        ws.params
    except UncertifiedParameters as exc:
        raise Usage(str(exc)) from None
    return ws


def _write(out: str, name: str, doc) -> Path:
    path = Path(out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(doc))
    return path


@click.group()
def cli():
    """Numerical laboratory for polynomial skew products of C^2."""


@cli.command("find-params")
@common
def find_params(**kw):
    """Find the Misiurewicz-type parameter and check assumptions (A1)-(A3)."""
    from .pipeline import parameter_certificate

    cfg = _config(kw)
    doc, _ = parameter_certificate(cfg.d, cfg.beta, cfg.theta)
    doc = {k: v for k, v in doc.items() if k not in ("cache_key", "schema")}
    doc = {"schema": 1, "config_hash": cfg.hash, **doc}
    path = _write(cfg.out, "params.json", doc)
    verdicts = doc["assumptions"]["verdicts"]
    for key, val in sorted(verdicts.items()):
        click.echo(f"{key}: {val}")
    click.echo(str(path))
    a2 = verdicts["A2"]
    sys.exit({VERIFIED: 0, REFUTED: 2, INCONCLUSIVE: 3}[a2])


@cli.command("render-slice")
@click.option("--z", "z", callback=_complex, default="0", show_default=True, help="base point of the slice")
@common
def render_slice(z, **kw):
    """Membership PGM and potential raster of K_z."""
    from .outputs import write_pgm, write_raw
    from .potential import BAND, INTERIOR, GridSpec, julia_slice

    cfg = _config(kw)
    ws = _workspace(cfg)
    w, h = cfg.grid
    js = julia_slice(ws.f, z, GridSpec(0j, 1.0, w, h), cfg.nmax)
    img = np.zeros(js.membership.shape, dtype=np.uint8)
    img[js.membership == BAND] = 255
    img[js.membership == INTERIOR] = 128
    meta = {"config_hash": cfg.hash, **js.metadata(), "delta_hat_z": js.diameter_estimate}
    write_pgm(Path(cfg.out) / "slice.pgm", img, meta)
    write_raw(Path(cfg.out) / "potential.f32", js.potential, meta)
    warn = js.unresolved_fraction > 0.01
    _write(cfg.out, "slice.json", {**meta, "unresolved_fraction": js.unresolved_fraction, "warning": warn})
    click.echo(f"diameter estimate {js.diameter_estimate:.6f}, unresolved fraction {js.unresolved_fraction:.4f}")
    sys.exit(3 if warn else 0)


@cli.command()
@common
def linearize(**kw):
    """Siegel linearizer of p, its radius estimate and an invariant circle."""
    from .siegel import invariant_circle, rotation_number

    cfg = _config(kw)
    ws = _workspace(cfg)
    sd = ws.siegel
    r = 0.5 * sd.radius_estimate
    circle = invariant_circle(sd, r)
    doc = {
        "config_hash": cfg.hash,
        "siegel": sd.to_json(),
        "conjugacy_residual_half_radius": sd.conjugacy_residual(r),
        "circle": circle.to_json(),
        "rotation_number": rotation_number(sd, circle),
    }
    _write(cfg.out, "siegel.json", doc)
    click.echo(f"radius estimate {sd.radius_estimate:.6f}")


@cli.command()
@common
def motion(**kw):
    """Holomorphic motion of the hyperbolic skeleton over N."""
    from .motion import expansion_constants

    cfg = _config(kw)
    ws = _workspace(cfg)
    mo = ws.motion
    periodic = [leaf for leaf in mo.leaves if leaf.base.periodic]
    doc = {
        "config_hash": cfg.hash,
        "leaves": len(mo.leaves),
        "failures": mo.failures,
        "max_residual": max(leaf.residual for leaf in mo.leaves),
        "min_gap": mo.min_gap(),
        "expansion": expansion_constants(ws.f, periodic, mo.mesh),
        "motion": mo.to_json() if not cfg.quick else None,
    }
    _write(cfg.out, "motion.json", doc)
    click.echo(f"{len(mo.leaves)} leaves, {len(mo.failures)} failures")


@cli.command()
@click.argument("kind", type=click.Choice(PROBES))
@click.option("--circles", type=int, default=20, show_default=True, help="invariant circles (intersections)")
@click.option("--samples", type=int, default=100, show_default=True, help="random configurations (expansivity)")
@common
def probe(kind, circles, samples, **kw):
    """Run one probe and write its certificate."""
    from . import pipeline

    nmax = kw["nmax"]
    cfg = _config(kw, (kind,))
    ws = _workspace(cfg)
    if not cfg.unchecked and not pipeline.certified_ok(ws.certificate):
        raise Usage("the parameter certificate does not verify (A2); pass --unchecked to proceed")
    if kind == "expansivity":
        cert = pipeline.expansivity_campaign(ws, samples, n_iter=200)
    elif kind == "intersections":
        cert = pipeline.intersection_campaign(ws, circles)
    elif kind == "fatou":
        cert = pipeline.fatou_campaign(ws, 10 if cfg.quick else 40, 2 if cfg.quick else 10)
    elif kind == "disjointness":
        cert = pipeline.disjointness_demo(ws)
    elif kind == "ramification":
        cert = pipeline.ramification_default(ws, nmax if nmax is not None else 6)
    else:
        cert = pipeline.coincidence_default(ws, 40 if cfg.quick else 200)
    path = cert.write(Path(cfg.out) / f"probe-{kind}.json")
    click.echo(f"{kind}: {cert.verdict} ({path})")
    _summary(cert)
    sys.exit(cert.exit_code)


def _summary(cert: ProbeCertificate) -> None:
    for key, val in sorted(cert.measured.items()):
        if isinstance(val, (int, float, str, bool)) or val is None:
            click.echo(f"  {key}: {val}")


@cli.command()
@common
def verify(**kw):
    """Run the acceptance suite."""
    from .acceptance import run_all
    from .pipeline import Workspace

    cfg = _config(kw)
    results = run_all(Workspace(cfg), quick=cfg.quick)
    for res in results:
        click.echo(f"{res.line()}  ({res.runtime:.1f} s)")
    doc = {"config_hash": cfg.hash, "quick": cfg.quick, "criteria": [r.to_json() for r in results]}
    _write(cfg.out, "verify.json", doc)
    sys.exit(0 if all(r.passed for r in results) else 2)


def main(argv=None) -> int:
    try:
        code = cli.main(args=argv, prog_name="skewlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    return int(code or 0)
