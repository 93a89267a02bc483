"""Background planet model: geometry, rotation and radial profiles.

All scalar fields are functions of the normalized radius
``r = sqrt(sum((x_i / a_i)**2))`` (plain ``|x|`` on the unit ball).  Gravity is
prescribed, never solved for: either ``-|g|(r) * x/|x|`` or a constant vector.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

GRID_CHECK_POINTS = 1025

_PROFILE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "constant"}, "value": {"type": "number"}},
            "required": ["kind", "value"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "polynomial_r"},
                "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
            "required": ["kind", "coeffs"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "table_r"},
                "r": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "v": {"type": "array", "items": {"type": "number"}, "minItems": 2},
            },
            "required": ["kind", "r", "v"],
            "additionalProperties": False,
        },
    ]
}

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "omega": _VEC3,
        "domain": {
            "oneOf": [
                {"const": "unit_ball"},
                {
                    "type": "object",
                    "properties": {"ellipsoid": _VEC3},
                    "required": ["ellipsoid"],
                    "additionalProperties": False,
                },
            ]
        },
        "rho0": _PROFILE_SCHEMA,
        "csq": _PROFILE_SCHEMA,
        "nsq": _PROFILE_SCHEMA,
        "gravity": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"mode": {"const": "radial"}, "profile": _PROFILE_SCHEMA},
                    "required": ["mode", "profile"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"mode": {"const": "constant"}, "vector": _VEC3},
                    "required": ["mode", "vector"],
                    "additionalProperties": False,
                },
            ]
        },
        "gravity_const": {"type": "number"},
    },
    "required": ["omega", "domain", "nsq"],
    "additionalProperties": False,
}


class ModelError(ValueError):
    """Invalid model document or a query the model cannot answer."""


class DomainError(ModelError):
    pass


@dataclass(frozen=True)
class Profile:
    kind: str
    value: float = 0.0
    coeffs: tuple = ()
    r: tuple = ()
    v: tuple = ()

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial_r", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def table(cls, r, v):
        r = tuple(float(t) for t in r)
        v = tuple(float(t) for t in v)
        if len(r) != len(v):
            raise ModelError("table_r: r and v lengths differ")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ModelError("table_r: radius grid must be strictly increasing")
        if r[0] < 0 or r[-1] > 1:
            raise ModelError("table_r: radius grid must lie inside [0, 1]")
        return cls("table_r", r=r, v=v)

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "polynomial_r":
            return cls.polynomial(d["coeffs"])
        if kind == "table_r":
            return cls.table(d["r"], d["v"])
        raise ModelError(f"unknown profile kind {kind!r}")

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "polynomial_r":
            return {"kind": "polynomial_r", "coeffs": list(self.coeffs)}
        return {"kind": "table_r", "r": list(self.r), "v": list(self.v)}

    @property
    def is_polynomial(self):
        return self.kind in ("constant", "polynomial_r")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full(r.shape, self.value)
        if self.kind == "polynomial_r":
            return np.polynomial.polynomial.polyval(r, self.coeffs)
        return np.interp(r, self.r, self.v)

    def derivative(self, r):
        """d/dr; exact for polynomial kinds, one-sided table slopes otherwise."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.zeros(r.shape)
        if self.kind == "polynomial_r":
            d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
            return np.polynomial.polynomial.polyval(r, d)
        h = 1e-6
        return (np.interp(r + h, self.r, self.v) - np.interp(r - h, self.r, self.v)) / (2 * h)


@dataclass(frozen=True)
class Gravity:
    mode: str
    profile: Optional[Profile] = None
    vector: Optional[tuple] = None

    @classmethod
    def radial(cls, profile):
        return cls("radial", profile=profile)

    @classmethod
    def constant(cls, vector):
        return cls("constant", vector=tuple(float(t) for t in vector))

    def to_dict(self):
        if self.mode == "radial":
            return {"mode": "radial", "profile": self.profile.to_dict()}
        return {"mode": "constant", "vector": list(self.vector)}


@dataclass(frozen=True)
class PlanetModel:
    omega: tuple
    semi_axes: tuple = (1.0, 1.0, 1.0)
    rho0: Profile = Profile.constant(1.0)
    csq: Profile = Profile.constant(1.0)
    nsq: Profile = Profile.constant(0.0)
    gravity: Gravity = Gravity.radial(Profile.constant(1.0))
    gravity_const: Optional[float] = None
    is_ball: bool = field(init=False, default=True)

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(t) for t in self.omega))
        object.__setattr__(self, "semi_axes", tuple(float(t) for t in self.semi_axes))
        if len(self.omega) != 3 or len(self.semi_axes) != 3:
            raise ModelError("omega and semi_axes must be 3-vectors")
        if min(self.semi_axes) <= 0:
            raise ModelError("ellipsoid semi-axes must be positive")
        object.__setattr__(self, "is_ball", self.semi_axes == (1.0, 1.0, 1.0))

    @property
    def omega_vec(self):
        return np.array(self.omega)

    @property
    def omega_norm(self):
        return float(np.linalg.norm(self.omega))

    @property
    def radius(self):
        return max(self.semi_axes)

    def to_dict(self):
        d = {
            "omega": list(self.omega),
            "domain": "unit_ball" if self.is_ball else {"ellipsoid": list(self.semi_axes)},
            "rho0": self.rho0.to_dict(),
            "csq": self.csq.to_dict(),
            "nsq": self.nsq.to_dict(),
            "gravity": self.gravity.to_dict(),
        }
        if self.gravity_const is not None:
            d["gravity_const"] = self.gravity_const
        return d


@dataclass(frozen=True)
class BackgroundSample:
    x: np.ndarray
    rho0: float
    csq: float
    g: np.ndarray
    ghat: np.ndarray
    nsq: float
    stilde: np.ndarray


@dataclass(frozen=True)
class BackgroundArrays:
    """Vectorized background on an ``(m, 3)`` point set."""

    x: np.ndarray
    r: np.ndarray
    rho0: np.ndarray
    csq: np.ndarray
    g: np.ndarray
    ghat: np.ndarray
    gnorm: np.ndarray
    nsq: np.ndarray
    stilde: np.ndarray


def _fmt_path(path):
    return "/" + "/".join(str(p) for p in path) if path else "/"


def load_model(doc) -> PlanetModel:
    """Validate a model document (dict, JSON text) and build a :class:`PlanetModel`."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    validator = jsonschema.Draft202012Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ModelError(f"schema violation at {_fmt_path(e.absolute_path)}: {e.message}")
    domain = doc["domain"]
    semi = (1.0, 1.0, 1.0) if domain == "unit_ball" else tuple(domain["ellipsoid"])
    grav = doc.get("gravity", {"mode": "radial", "profile": {"kind": "constant", "value": 1.0}})
    gravity = (
        Gravity.radial(Profile.from_dict(grav["profile"]))
        if grav["mode"] == "radial"
        else Gravity.constant(grav["vector"])
    )
    model = PlanetModel(
        omega=tuple(doc["omega"]),
        semi_axes=semi,
        rho0=Profile.from_dict(doc.get("rho0", {"kind": "constant", "value": 1.0})),
        csq=Profile.from_dict(doc.get("csq", {"kind": "constant", "value": 1.0})),
        nsq=Profile.from_dict(doc["nsq"]),
        gravity=gravity,
        gravity_const=doc.get("gravity_const"),
    )
    rr = np.linspace(0.0, 1.0, GRID_CHECK_POINTS)
    c2 = model.csq(rr)
    if np.any(c2 <= 0):
        bad = rr[np.argmax(c2 <= 0)]
        raise ModelError(f"csq must be positive on the domain (fails at r={bad:.6g})")
    if np.any(model.rho0(rr) <= 0):
        raise ModelError("rho0 must be positive on the domain")
    return model


def load_model_file(path) -> PlanetModel:
    return load_model(json.loads(Path(path).read_text(encoding="utf-8")))


def normalized_radius(model, X):
    X = np.asarray(X, dtype=float)
    return np.sqrt(np.sum((X / np.array(model.semi_axes)) ** 2, axis=-1))


def sample_background(model: PlanetModel, X, check_domain=True) -> BackgroundArrays:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r = normalized_radius(model, X)
    if check_domain and np.any(r > 1 + 1e-12):
        raise DomainError(f"point outside the domain (normalized radius {r.max():.6g})")
    rho0 = model.rho0(r)
    csq = model.csq(r)
    nsq = model.nsq(r)
    if model.gravity.mode == "radial":
        norm = np.linalg.norm(X, axis=1)
        safe = np.where(norm > 0, norm, 1.0)
        xhat = np.where(norm[:, None] > 0, X / safe[:, None], 0.0)
        g = -model.gravity.profile(r)[:, None] * xhat
    else:
        g = np.broadcast_to(np.array(model.gravity.vector), X.shape).copy()
    gnorm = np.linalg.norm(g, axis=1)
    bad = (gnorm == 0) & (nsq != 0)
    if np.any(bad):
        raise ModelError("gravity vanishes where N^2 != 0; gravity direction undefined")
    safe = np.where(gnorm > 0, gnorm, 1.0)
    ghat = np.where(gnorm[:, None] > 0, g / safe[:, None], 0.0)
    stilde = (rho0 * nsq / safe)[:, None] * ghat
    return BackgroundArrays(X, r, rho0, csq, g, ghat, gnorm, nsq, stilde)


def eval_background(model: PlanetModel, x) -> BackgroundSample:
    x = np.asarray(x, dtype=float).reshape(3)
    b = sample_background(model, x[None, :])
    return BackgroundSample(
        x=x, rho0=float(b.rho0[0]), csq=float(b.csq[0]), g=b.g[0], ghat=b.ghat[0],
        nsq=float(b.nsq[0]), stilde=b.stilde[0],
    )


def boundary_normal(model: PlanetModel, x, outward=False) -> np.ndarray:
    """Unit normal at a boundary point; inward unless ``outward`` is set."""
    x = np.asarray(x, dtype=float).reshape(3)
    r = float(normalized_radius(model, x))
    if abs(r - 1.0) > 1e-8:
        raise DomainError(f"point is not on the boundary (normalized radius {r:.12g})")
    grad = x / np.array(model.semi_axes) ** 2
    n = grad / np.linalg.norm(grad)
    return n if outward else -n


def _boundary_normals(model, X):
    grad = X / np.array(model.semi_axes) ** 2
    return -grad / np.linalg.norm(grad, axis=1)[:, None]


# --- deterministic nested sampling grids --------------------------------------

def _frame(axis):
    e3 = np.asarray(axis, dtype=float)
    nrm = np.linalg.norm(e3)
    if nrm == 0:
        return np.eye(3)
    e3 = e3 / nrm
    if np.array_equal(e3, [0.0, 0.0, 1.0]):
        return np.eye(3)
    trial = np.eye(3)[np.argmin(np.abs(e3))]
    e1 = trial - (trial @ e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.column_stack([e1, e2, e3])


def _levels(n, cycle, base):
    """Longest prefix of the refinement cycle whose point count stays <= n."""
    lv = dict(base)
    while True:
        for key in cycle:
            trial = dict(lv)
            trial[key] += 1
            if _count(trial) > n:
                return lv
            lv = trial


def _count(lv):
    per_sphere = 2 + (2 ** lv["b"] - 1) * 2 ** lv["c"]
    return 2 ** lv.get("a", 0) * per_sphere


def _sphere_points(b, c):
    nb, nc = 2 ** b, 2 ** c
    pts = [(0.0, 0.0, 1.0)]
    for j in range(1, nb):
        th = j * math.pi / nb
        st, ct = math.sin(th), math.cos(th)
        for m in range(nc):
            ph = m * 2.0 * math.pi / nc
            pts.append((st * math.cos(ph), st * math.sin(ph), ct))
    pts.append((0.0, 0.0, -1.0))
    return np.array(pts)


def interior_grid(model: PlanetModel, n: int, axis=None) -> np.ndarray:
    """Radial x polar x azimuthal product grid aligned with ``axis``.

    Shell radii are ``k / 2**a`` (the centre is excluded), polar angles
    include the equator, and the point set for ``n`` is contained in the
    point set for any larger ``n``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    lv = _levels(max(n, 3), ("a", "c", "b"), {"a": 0, "b": 1, "c": 1})
    frame = _frame(model.omega if axis is None else axis)
    sph = _sphere_points(lv["b"], lv["c"]) @ frame.T
    na = 2 ** lv["a"]
    radii = np.arange(1, na + 1) / na
    pts = (radii[:, None, None] * sph[None, :, :]).reshape(-1, 3)
    return pts * np.array(model.semi_axes)


def boundary_grid(model: PlanetModel, n: int, axis=None) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one sample")
    lv = _levels(max(n, 3), ("c", "b"), {"b": 1, "c": 1})
    frame = _frame(model.omega if axis is None else axis)
    return (_sphere_points(lv["b"], lv["c"]) @ frame.T) * np.array(model.semi_axes)


def natural_axes(model: PlanetModel):
    """(interior axis, boundary axis) used by the sampling grids.

    The interior grid follows the rotation axis so the surface where
    ``Omega . g^ = 0`` is sampled exactly for radial gravity; the boundary
    grid follows a constant gravity direction so the circle ``n . g^ = 0``
    is sampled exactly.
    """
    om = model.omega_vec if model.omega_norm > 0 else np.array([0.0, 0.0, 1.0])
    if model.gravity.mode == "constant" and np.linalg.norm(model.gravity.vector) > 0:
        return om, np.array(model.gravity.vector)
    return om, om


# --- hydrostatic consistency ---------------------------------------------------

@dataclass
class ValidationReport:
    interior_max_angle: float
    boundary_max_angle: float
    boundary_min_inward_gravity: float
    tol: float = 1e-6
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def _unsigned_angle(u, v):
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = (nu > 0) & (nv > 0)
    cos = np.ones(len(u))
    cos[ok] = np.abs(np.sum(u[ok] * v[ok], axis=1)) / (nu[ok] * nv[ok])
    cross = np.zeros(len(u))
    cross[ok] = np.linalg.norm(np.cross(u[ok], v[ok]), axis=1) / (nu[ok] * nv[ok])
    return np.arctan2(cross, np.clip(cos, 0.0, 1.0))


def grad_rho0(model, X, h=None):
    """Central-difference gradient of rho0 (step ``1e-5 * radius``)."""
    h = 1e-5 * model.radius if h is None else h
    X = np.atleast_2d(X)
    out = np.empty_like(X)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        rp = normalized_radius(model, X + e)
        rm = normalized_radius(model, X - e)
        out[:, i] = (model.rho0(rp) - model.rho0(rm)) / (2 * h)
    return out


def validate_hydrostatic(model: PlanetModel, samples: int, tol=1e-6) -> ValidationReport:
    """Check the parallelism and sign hypotheses of the well-posedness theory.

    ``g`` against ``grad rho0`` inside, ``g`` against the normal on the
    boundary, and ``-g . n_out > 0`` on the boundary.  Failures are recorded
    in the report, never raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ax_int, ax_bdy = natural_axes(model)
    Xi = interior_grid(model, samples, ax_int) * (1 - 1e-4)
    bi = sample_background(model, Xi, check_domain=False)
    gr = grad_rho0(model, Xi)
    small = np.linalg.norm(gr, axis=1) <= 1e-12 * max(1.0, float(np.abs(bi.rho0).max()))
    ang_i = _unsigned_angle(bi.g, gr)
    ang_i[small] = 0.0
    Xb = boundary_grid(model, samples, ax_bdy)
    bb = sample_background(model, Xb, check_domain=False)
    n_out = -_boundary_normals(model, Xb)
    ang_b = _unsigned_angle(bb.g, n_out)
    inward = -np.sum(bb.g * n_out, axis=1)
    rep = ValidationReport(
        interior_max_angle=float(ang_i.max()),
        boundary_max_angle=float(ang_b.max()),
        boundary_min_inward_gravity=float(inward.min()),
        tol=tol,
    )
    if rep.interior_max_angle > tol:
        rep.failures.append(f"g and grad(rho0) misaligned by {rep.interior_max_angle:.3g} rad")
    if rep.boundary_max_angle > tol:
        rep.failures.append(f"g and boundary normal misaligned by {rep.boundary_max_angle:.3g} rad")
    if not rep.boundary_min_inward_gravity > 0:
        rep.failures.append(f"g . n_out >= 0 somewhere on the boundary (min -g.n = {rep.boundary_min_inward_gravity:.3g})")
    return rep


def ball_model(omega=(0.0, 0.0, 0.0), nsq=0.0, gravity="radial", ghat=(0.0, 0.0, -1.0),
               rho0=1.0, csq=1.0, gnorm=1.0) -> PlanetModel:
    """Convenience constructor for constant-profile models on the unit ball."""
    nsq_p = nsq if isinstance(nsq, Profile) else Profile.constant(nsq)
    rho_p = rho0 if isinstance(rho0, Profile) else Profile.constant(rho0)
    if gravity == "radial":
        grav = Gravity.radial(gnorm if isinstance(gnorm, Profile) else Profile.constant(gnorm))
    else:
        v = np.asarray(ghat, dtype=float)
        grav = Gravity.constant(gnorm * v / np.linalg.norm(v))
    return PlanetModel(omega=tuple(omega), rho0=rho_p, csq=Profile.constant(csq), nsq=nsq_p, gravity=grav)
