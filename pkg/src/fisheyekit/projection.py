"""Fisheye projection geometry.

A fisheye lens maps a ray with incidence angle ``phi`` (measured from the
optical axis) to an image point at radius ``r`` from the principal point.
Four classical radius laws are supported, all scaled by the principal
distance ``c`` (pixels):

    equidistant      r = c * phi
    stereographic    r = 2c * tan(phi / 2)
    equisolid        r = 2c * sin(phi / 2)
    orthographic     r = c * sin(phi)

Full point projection works in polar form.  For a camera-frame point
(x, y, z) with the optical axis along +z:

    phi   = atan2(sqrt(x^2 + y^2), z)          incidence angle, [0, pi]
    theta = atan2(y, x)                        azimuth
    x' = r(phi) * cos(theta) + x'0 + dx'
    y' = r(phi) * sin(theta) + y'0 + dy'

where (dx', dy') is a polynomial distortion correction evaluated at the
undistorted offset from the principal point (x'0, y'0):

    dx' = x'(A1 r'^2 + A2 r'^4 + A3 r'^6) + B1 (r'^2 + 2x'^2) + 2 B2 x'y'
          + C1 x' + C2 y'
    dy' = y'(A1 r'^2 + A2 r'^4 + A3 r'^6) + 2 B1 x'y' + B2 (r'^2 + 2y'^2)

A1..A3 are radial terms, B1/B2 decentering terms, C1/C2 the horizontal
scale and shear of the sensor frame.  Using atan2 for phi keeps the model
valid past 90 degrees, which lenses above 180 degrees of view require.

All public functions accept scalars or numpy arrays and are pure; every
value type here is immutable, so concurrent use needs no locking.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ConvergenceError, DomainError, FieldOfViewError

__all__ = [
    "ProjectionModel",
    "Intrinsics",
    "CameraPoint",
    "PixelPoint",
    "radius_from_incidence",
    "incidence_from_radius",
    "max_invertible_radius",
    "distortion_delta",
    "project_point",
    "project_rays",
    "unproject_pixel",
    "unproject_pixels",
    "load_camera_json",
    "dump_camera_json",
]

UNDISTORT_TOL = 1e-10
UNDISTORT_MAX_ITER = 20


class ProjectionModel(enum.Enum):
    """Which radius law governs r(phi)."""

    EQUIDISTANT = "equidistant"
    STEREOGRAPHIC = "stereographic"
    EQUISOLID = "equisolid"
    ORTHOGRAPHIC = "orthographic"

    def __str__(self) -> str:
        return self.value


class CameraPoint(NamedTuple):
    """Camera-frame point, optical axis along +z. Units are arbitrary but consistent."""

    x: float
    y: float
    z: float


class PixelPoint(NamedTuple):
    """Image-plane point in pixels."""

    x: float
    y: float


# Largest incidence angle each law can represent (stereographic diverges at pi).
_PHI_LIMIT = {
    ProjectionModel.EQUIDISTANT: math.pi,
    ProjectionModel.STEREOGRAPHIC: math.pi,
    ProjectionModel.EQUISOLID: math.pi,
    ProjectionModel.ORTHOGRAPHIC: math.pi / 2,
}


@dataclass(frozen=True)
class Intrinsics:
    """Interior camera parameters.

    Attributes:
        c: Principal distance in pixels (scale of the radius law).
        principal_point: (x'0, y'0) in pixels.
        radial: (A1, A2, A3) radial distortion, units px^-2, px^-4, px^-6.
        decentering: (B1, B2) decentering distortion, units px^-1.
        affine: (C1, C2) horizontal scale factor and shear factor.
        image_size: (width, height) in pixels.
        phi_max: maximum incidence angle in radians.
    """

    c: float
    principal_point: tuple[float, float]
    radial: tuple[float, float, float] = (0.0, 0.0, 0.0)
    decentering: tuple[float, float] = (0.0, 0.0)
    affine: tuple[float, float] = (0.0, 0.0)
    image_size: tuple[int, int] = (512, 512)
    phi_max: float = math.radians(92.5)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "principal_point", tuple(float(v) for v in self.principal_point))
        object.__setattr__(self, "radial", tuple(float(v) for v in self.radial))
        object.__setattr__(self, "decentering", tuple(float(v) for v in self.decentering))
        object.__setattr__(self, "affine", tuple(float(v) for v in self.affine))
        object.__setattr__(self, "image_size", tuple(int(v) for v in self.image_size))
        object.__setattr__(self, "phi_max", float(self.phi_max))
        if not self.c > 0:
            raise ConfigError(f"principal distance must be positive, got {self.c}")
        if not 0 < self.phi_max <= math.pi:
            raise ConfigError(f"phi_max must be in (0, pi], got {self.phi_max}")
        if len(self.principal_point) != 2 or len(self.radial) != 3:
            raise ConfigError("principal_point needs 2 values, radial needs 3")
        if len(self.decentering) != 2 or len(self.affine) != 2:
            raise ConfigError("decentering and affine each need 2 values")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ConfigError(f"image_size must be positive, got {self.image_size}")
        x0, y0 = self.principal_point
        if not (0 <= x0 <= w and 0 <= y0 <= h):
            raise ConfigError(
                f"principal_point {self.principal_point} outside image bounds {self.image_size}"
            )

    @property
    def has_distortion(self) -> bool:
        return any(self.radial) or any(self.decentering) or any(self.affine)

    def with_principal_point(self, x0: float, y0: float) -> "Intrinsics":
        return replace(self, principal_point=(x0, y0))

    def to_json_dict(self) -> dict:
        return {
            "c": self.c,
            "principal_point": list(self.principal_point),
            "radial": list(self.radial),
            "decentering": list(self.decentering),
            "affine": list(self.affine),
            "image_size": list(self.image_size),
            "phi_max_deg": math.degrees(self.phi_max),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Intrinsics":
        try:
            return cls(
                c=data["c"],
                principal_point=tuple(data["principal_point"]),
                radial=tuple(data.get("radial", (0.0, 0.0, 0.0))),
                decentering=tuple(data.get("decentering", (0.0, 0.0))),
                affine=tuple(data.get("affine", (0.0, 0.0))),
                image_size=tuple(data.get("image_size", (512, 512))),
                phi_max=math.radians(data.get("phi_max_deg", 92.5)),
            )
        except KeyError as exc:
            raise ConfigError(f"intrinsics JSON missing field {exc}") from exc


def _check_model_phi_max(model: ProjectionModel, intr: Intrinsics) -> None:
    if intr.phi_max > _PHI_LIMIT[model] + 1e-15:
        raise ConfigError(
            f"phi_max={intr.phi_max:.6f} rad exceeds the {model.value} limit "
            f"{_PHI_LIMIT[model]:.6f} rad"
        )


def load_camera_json(source: str | Path | dict) -> tuple[ProjectionModel, Intrinsics]:
    """Read a camera description: the intrinsics JSON schema plus a "model" key.

    Omitted distortion arrays default to zeros.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = source
    try:
        model = ProjectionModel(data["model"])
    except KeyError:
        raise ConfigError("camera JSON missing 'model'") from None
    except ValueError:
        valid = ", ".join(m.value for m in ProjectionModel)
        raise ConfigError(f"unknown model {data['model']!r}; expected one of {valid}") from None
    intr = Intrinsics.from_json_dict(data)
    _check_model_phi_max(model, intr)
    return model, intr


def dump_camera_json(model: ProjectionModel, intr: Intrinsics) -> dict:
    return {"model": model.value, **intr.to_json_dict()}


# -- radius laws --------------------------------------------------------------


def radius_from_incidence(model: ProjectionModel, c: float, phi):
    """Image radius r(phi) in pixels for the given model and principal distance.

    Accepts a scalar or array of incidence angles in radians.  Raises
    DomainError when any angle is negative or beyond the model's limit
    (pi for equidistant/equisolid, strictly below pi for stereographic,
    pi/2 for orthographic).
    """
    if not c > 0:
        raise DomainError(f"principal distance must be positive, got {c}")
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr < 0):
        raise DomainError("incidence angle must be non-negative")
    limit = _PHI_LIMIT[model]
    strict = model is ProjectionModel.STEREOGRAPHIC
    if np.any(phi_arr >= limit if strict else phi_arr > limit):
        raise DomainError(
            f"incidence angle out of range for {model.value} "
            f"(limit {limit:.6f} rad, {'exclusive' if strict else 'inclusive'})"
        )
    if model is ProjectionModel.EQUIDISTANT:
        r = c * phi_arr
    elif model is ProjectionModel.STEREOGRAPHIC:
        r = 2.0 * c * np.tan(0.5 * phi_arr)
    elif model is ProjectionModel.EQUISOLID:
        r = 2.0 * c * np.sin(0.5 * phi_arr)
    else:
        r = c * np.sin(phi_arr)
    return float(r) if np.ndim(phi) == 0 else r


def max_invertible_radius(model: ProjectionModel, c: float) -> float:
    """Largest radius the model can map back to an incidence angle (inf for stereographic)."""
    if model is ProjectionModel.EQUIDISTANT:
        return c * math.pi
    if model is ProjectionModel.STEREOGRAPHIC:
        return math.inf
    if model is ProjectionModel.EQUISOLID:
        return 2.0 * c
    return c


def incidence_from_radius(model: ProjectionModel, c: float, r):
    """Analytic inverse of radius_from_incidence.

    Raises DomainError for negative radii or radii beyond the model's
    invertible range (r <= c*pi equidistant, r <= 2c equisolid, r <= c
    orthographic; stereographic is total).
    """
    if not c > 0:
        raise DomainError(f"principal distance must be positive, got {c}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("radius must be non-negative")
    r_max = max_invertible_radius(model, c)
    if np.any(r_arr > r_max):
        raise DomainError(f"radius exceeds the {model.value} invertible range (max {r_max:g})")
    if model is ProjectionModel.EQUIDISTANT:
        phi = r_arr / c
    elif model is ProjectionModel.STEREOGRAPHIC:
        phi = 2.0 * np.arctan(r_arr / (2.0 * c))
    elif model is ProjectionModel.EQUISOLID:
        phi = 2.0 * np.arcsin(r_arr / (2.0 * c))
    else:
        phi = np.arcsin(r_arr / c)
    return float(phi) if np.ndim(r) == 0 else phi


# -- distortion ---------------------------------------------------------------


def distortion_delta(intr: Intrinsics, x, y):
    """Correction (dx', dy') at offset (x, y) from the principal point.

    Total on finite inputs; x and y may be scalars or arrays.
    """
    a1, a2, a3 = intr.radial
    b1, b2 = intr.decentering
    c1, c2 = intr.affine
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    rad = r2 * (a1 + r2 * (a2 + r2 * a3))
    xy = x * y
    dx = x * rad + b1 * (r2 + 2.0 * x * x) + 2.0 * b2 * xy + c1 * x + c2 * y
    dy = y * rad + 2.0 * b1 * xy + b2 * (r2 + 2.0 * y * y)
    if np.ndim(dx) == 0:
        return float(dx), float(dy)
    return dx, dy


# -- forward projection -------------------------------------------------------


def _project_arrays(model: ProjectionModel, intr: Intrinsics, x, y, z):
    """Vectorized projection core. Returns (px, py, phi); caller handles masking."""
    s = np.hypot(x, y)
    phi = np.arctan2(s, z)
    # cos/sin of the azimuth as exact coordinate ratios; on-axis rays get r=0
    # so the placeholder direction never leaks into the result.
    safe_s = np.where(s > 0, s, 1.0)
    cos_t = np.where(s > 0, x / safe_s, 1.0)
    sin_t = np.where(s > 0, y / safe_s, 0.0)
    limit = _PHI_LIMIT[model]
    phi_c = np.clip(phi, 0.0, np.nextafter(limit, 0.0) if model is ProjectionModel.STEREOGRAPHIC else limit)
    r = radius_from_incidence(model, intr.c, phi_c)
    ox = r * cos_t
    oy = r * sin_t
    dx, dy = distortion_delta(intr, ox, oy)
    x0, y0 = intr.principal_point
    return x0 + ox + dx, y0 + oy + dy, phi


def project_point(model: ProjectionModel, intr: Intrinsics, point) -> PixelPoint:
    """Project one camera-frame point to fisheye pixel coordinates.

    Raises FieldOfViewError when the incidence angle exceeds intr.phi_max and
    DomainError when it exceeds the radius law's own limit. An on-axis point
    maps exactly to the principal point.
    """
    x, y, z = (float(v) for v in point)
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise DomainError("camera point must not be the origin")
    phi = math.atan2(math.hypot(x, y), z)
    if phi > intr.phi_max:
        raise FieldOfViewError(
            f"incidence angle {phi:.6f} rad exceeds phi_max {intr.phi_max:.6f} rad"
        )
    limit = _PHI_LIMIT[model]
    if phi >= limit if model is ProjectionModel.STEREOGRAPHIC else phi > limit:
        raise DomainError(f"incidence angle {phi:.6f} rad outside the {model.value} domain")
    px, py, _ = _project_arrays(model, intr, np.float64(x), np.float64(y), np.float64(z))
    return PixelPoint(float(px), float(py))


def project_rays(model: ProjectionModel, intr: Intrinsics, xyz, *, invalid: str = "raise"):
    """Project an (N, 3) array of camera-frame points to an (N, 2) pixel array.

    invalid="raise" raises on any out-of-FOV or out-of-domain ray;
    invalid="nan" writes NaN rows for them instead.
    """
    xyz = np.asarray(xyz, dtype=float)
    if xyz.ndim != 2 or xyz.shape[1] != 3:
        raise ValueError(f"expected (N, 3) array, got {xyz.shape}")
    limit = _PHI_LIMIT[model]
    with np.errstate(invalid="ignore"):
        px, py, phi = _project_arrays(model, intr, xyz[:, 0], xyz[:, 1], xyz[:, 2])
    strict = model is ProjectionModel.STEREOGRAPHIC
    bad = (phi > intr.phi_max) | (phi >= limit if strict else phi > limit)
    out = np.stack([px, py], axis=1)
    if np.any(bad):
        if invalid == "raise":
            raise FieldOfViewError(f"{int(bad.sum())} rays outside the field of view")
        out[bad] = np.nan
    return out


# -- unprojection -------------------------------------------------------------


def _undistort_offsets(intr: Intrinsics, tx, ty):
    """Invert offset + distortion_delta(offset) = target by fixed-point iteration.

    Returns (dx, dy, converged, iterations). With all distortion zero the
    first iterate is exact.
    """
    dx, dy = tx.copy(), ty.copy()
    if not intr.has_distortion:
        return dx, dy, np.ones(dx.shape, dtype=bool), 0
    converged = np.zeros(dx.shape, dtype=bool)
    iterations = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for iterations in range(1, UNDISTORT_MAX_ITER + 1):
            ex, ey = distortion_delta(intr, dx, dy)
            nx, ny = tx - ex, ty - ey
            step = np.hypot(nx - dx, ny - dy)
            dx, dy = nx, ny
            converged = step < UNDISTORT_TOL
            if np.all(converged):
                break
    converged &= np.isfinite(dx) & np.isfinite(dy)
    return dx, dy, converged, iterations


def unproject_pixels(model: ProjectionModel, intr: Intrinsics, pixels, *, invalid: str = "raise"):
    """Map an (N, 2) pixel array back to incidence/azimuth angle arrays.

    Removes distortion by fixed-point iteration, then inverts the radius law.
    invalid="nan" marks non-convergent or out-of-range pixels with NaN
    instead of raising.
    """
    q = np.asarray(pixels, dtype=float)
    if q.ndim != 2 or q.shape[1] != 2:
        raise ValueError(f"expected (N, 2) array, got {q.shape}")
    x0, y0 = intr.principal_point
    tx = q[:, 0] - x0
    ty = q[:, 1] - y0
    dx, dy, converged, _ = _undistort_offsets(intr, tx, ty)
    if invalid == "raise" and not np.all(converged):
        raise ConvergenceError(
            f"distortion removal did not reach {UNDISTORT_TOL} px "
            f"within {UNDISTORT_MAX_ITER} iterations"
        )
    with np.errstate(invalid="ignore"):
        r = np.hypot(dx, dy)
        r_max = max_invertible_radius(model, intr.c)
        in_range = converged & (r <= r_max)
        if invalid == "raise" and not np.all(in_range):
            raise DomainError(
                f"undistorted radius exceeds the {model.value} invertible range (max {r_max:g})"
            )
        r_safe = np.where(in_range, r, 0.0)
        phi = incidence_from_radius(model, intr.c, r_safe)
        theta = np.arctan2(dy, dx)
        theta = np.where(r_safe > 0, theta, 0.0)
        phi = np.where(in_range, phi, np.nan)
        theta = np.where(in_range, theta, np.nan)
    return phi, theta


def unproject_pixel(model: ProjectionModel, intr: Intrinsics, pixel) -> tuple[float, float]:
    """Inverse of project_point for one pixel: returns (phi, theta) in radians.

    theta is 0 by convention at the principal point. Raises ConvergenceError
    if distortion removal stalls and DomainError for pixels outside the image
    circle.
    """
    q = np.asarray([[float(pixel[0]), float(pixel[1])]])
    if not np.all(np.isfinite(q)):
        raise DomainError(f"pixel coordinates must be finite, got {pixel}")
    phi, theta = unproject_pixels(model, intr, q, invalid="raise")
    return float(phi[0]), float(theta[0])
