"""Model specification, validation and derived regression parameters."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator


class SpecError(ValueError):
    """Raised for invalid model specifications."""


class IntensityTable:
    """Piecewise-constant intensity on [0, 1].

    ``breaks`` is the partition 0 = b0 < b1 < ... < bn = 1 and ``rates[k]``
    holds on [b_k, b_{k+1}).  The last rate also holds at t = 1.
    """

    def __init__(self, breaks: Sequence[float], rates: Sequence[float]):
        b = np.asarray(breaks, dtype=float)
        r = np.asarray(rates, dtype=float)
        if b.ndim != 1 or len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise SpecError("intensity breaks must run from 0 to 1")
        if np.any(np.diff(b) <= 0):
            raise SpecError("intensity breaks must be strictly increasing")
        if r.shape != (len(b) - 1,):
            raise SpecError("need one rate per interval of the partition")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise SpecError("intensity rates must be finite and non-negative")
        self.breaks = b
        self.rates = r
        self.breaks.flags.writeable = False
        self.rates.flags.writeable = False

    @classmethod
    def constant(cls, rate: float) -> "IntensityTable":
        return cls([0.0, 1.0], [rate])

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.rates) - 1)
        return self.rates[idx]

    def value(self, t: float) -> float:
        return float(self(t))

    @property
    def peak(self) -> float:
        return float(self.rates.max())

    def pieces(self, a: float, b: float):
        """Yield (lo, hi, rate) for the pieces covering [a, b]."""
        for k, rate in enumerate(self.rates):
            lo = max(a, self.breaks[k])
            hi = min(b, self.breaks[k + 1])
            if hi > lo:
                yield lo, hi, float(rate)

    def integral(self, a: float, b: float) -> float:
        return sum((hi - lo) * r for lo, hi, r in self.pieces(a, b))

    def scaled(self, factor: float) -> "IntensityTable":
        return IntensityTable(self.breaks, self.rates * factor)

    def to_json(self):
        return {"breaks": self.breaks.tolist(), "rates": self.rates.tolist()}

    def __eq__(self, other):
        return (isinstance(other, IntensityTable)
                and np.array_equal(self.breaks, other.breaks)
                and np.array_equal(self.rates, other.rates))

    def __hash__(self):
        return hash((self.breaks.tobytes(), self.rates.tobytes()))

    def __repr__(self):
        return f"IntensityTable(breaks={self.breaks.tolist()}, rates={self.rates.tolist()})"


def _as_table(obj) -> IntensityTable:
    if isinstance(obj, IntensityTable):
        return obj
    if isinstance(obj, (int, float)):
        return IntensityTable.constant(float(obj))
    if isinstance(obj, dict):
        return IntensityTable(obj["breaks"], obj["rates"])
    raise SpecError(f"cannot interpret intensity {obj!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Full parameterization of the disclosure model.

    ``lam`` holds one intensity table per agent (``lambda`` in JSON).
    """

    m: int
    sigma0: float
    sigmaM: tuple
    alpha: tuple
    f: tuple
    lam: tuple
    x0: float = 1.0
    m0: tuple | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise SpecError("m: agent count must be a positive integer")
        set_(self, "m", int(self.m))
        set_(self, "sigmaM", tuple(float(v) for v in self.sigmaM))
        set_(self, "alpha", tuple(float(v) for v in self.alpha))
        set_(self, "f", tuple(float(v) for v in self.f))
        set_(self, "lam", tuple(_as_table(v) for v in self.lam))
        if self.m0 is None:
            set_(self, "m0", (1.0,) * self.m)
        else:
            set_(self, "m0", tuple(float(v) for v in self.m0))
        set_(self, "sigma0", float(self.sigma0))
        set_(self, "x0", float(self.x0))
        for name in ("sigmaM", "alpha", "f", "lam", "m0"):
            if len(getattr(self, name)) != self.m:
                raise SpecError(f"{name}: expected length {self.m}")
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise SpecError("sigma0: must be finite and strictly positive")
        for name, lo, strict in (("sigmaM", 0.0, False), ("alpha", 0.0, True),
                                 ("f", 0.0, True), ("m0", 0.0, True)):
            for j, v in enumerate(getattr(self, name)):
                ok = math.isfinite(v) and (v > lo if strict else v >= lo)
                if not ok:
                    rel = ">" if strict else ">="
                    raise SpecError(f"{name}[{j}]: must be finite and {rel} {lo}")
        if not (math.isfinite(self.x0) and self.x0 > 0):
            raise SpecError("x0: must be finite and strictly positive")

    def replace(self, **changes) -> "ModelSpec":
        data = dict(m=self.m, sigma0=self.sigma0, sigmaM=self.sigmaM, alpha=self.alpha,
                    f=self.f, lam=self.lam, x0=self.x0, m0=self.m0)
        data.update(changes)
        return ModelSpec(**data)

    def to_json(self) -> dict:
        return {"m": self.m, "sigma0": self.sigma0, "sigmaM": list(self.sigmaM),
                "alpha": list(self.alpha), "f": list(self.f),
                "lambda": [t.to_json() for t in self.lam],
                "x0": self.x0, "m0": list(self.m0)}


def single_agent(sigma0=1.0, sigmaM=1.0, alpha=1.0, f=1.0, lam=1.0, x0=1.0, m0=None) -> ModelSpec:
    return ModelSpec(m=1, sigma0=sigma0, sigmaM=(sigmaM,), alpha=(alpha,), f=(f,),
                     lam=(lam,), x0=x0, m0=None if m0 is None else (m0,))


def symmetric(m, sigma0=1.0, sigmaM=1.0, alpha=1.0, f=1.0, lam=1.0, x0=1.0) -> ModelSpec:
    return ModelSpec(m=m, sigma0=sigma0, sigmaM=(sigmaM,) * m, alpha=(alpha,) * m,
                     f=(f,) * m, lam=(lam,) * m, x0=x0)


@dataclass(frozen=True)
class DerivedParams:
    """Precisions and regression weights.

    Index 0 of ``p`` and ``kappa`` is the common factor; agent i sits at i+1
    there, while per-agent arrays (``sigma_i``, ``kappa1``, ...) are 0-based.
    ``expo[i, j]`` is the exponent on agent j's observation in agent i's
    valuation, alpha_i * kappa_j / alpha_j.
    """

    spec: ModelSpec
    sigma_i: np.ndarray
    p: np.ndarray
    p_total: float
    kappa: np.ndarray
    kappa_minus: np.ndarray
    kappa1: np.ndarray
    k_single: np.ndarray
    expo: np.ndarray
    k_multi: np.ndarray

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.spec.alpha)


def derive(spec: ModelSpec) -> DerivedParams:
    sigmaM = np.asarray(spec.sigmaM)
    alpha = np.asarray(spec.alpha)
    f = np.asarray(spec.f)
    if np.any(sigmaM == 0):
        raise SpecError("infinite precision unsupported: every sigmaM must be > 0")
    sigma_i = sigmaM / alpha
    p = np.concatenate([[1.0 / spec.sigma0 ** 2], 1.0 / sigma_i ** 2])
    p_total = float(p.sum())
    kappa = p / p_total
    pi = p[1:]
    kappa_minus = pi / (p_total - pi)
    kappa1 = pi / (p[0] + pi)
    k_single = f ** (1.0 - kappa1)
    expo = alpha[:, None] * kappa[None, 1:] / alpha[None, :]
    k_multi = f * np.exp(-(expo * np.log(f)[None, :]).sum(axis=1))
    for arr in (sigma_i, p, kappa, kappa_minus, kappa1, k_single, expo, k_multi):
        arr.flags.writeable = False
    return DerivedParams(spec, sigma_i, p, p_total, kappa, kappa_minus, kappa1,
                         k_single, expo, k_multi)


@dataclass(frozen=True)
class TildeParams:
    t: float
    sigma0_sq: float
    sigma_i_sq: np.ndarray
    sigma0i_sq: np.ndarray
    p_tilde_i: np.ndarray
    p_tilde0: float
    p_tilde: float


def tilde_at(derived: DerivedParams, t: float) -> TildeParams:
    """Remaining-horizon quantities at time t (variances times 1-t)."""
    if not 0.0 <= t < 1.0:
        raise SpecError(f"degenerate horizon: t={t} must lie in [0, 1)")
    tau = 1.0 - t
    s0 = derived.spec.sigma0 ** 2 * tau
    si = derived.sigma_i ** 2 * tau
    pti = 1.0 / si
    pt0 = 1.0 / s0
    return TildeParams(t, s0, si, s0 + si, pti, pt0, float(pt0 + pti.sum()))


def common_sized(spec: ModelSpec) -> ModelSpec:
    """Return ``spec`` with initial noise levels chosen so that the closed-form
    terminal regression k * <y^kappa> is the exact posterior mean of Z_1 under
    the simulated law started from the point (x0, m0).

    Requires equal loadings when m > 1 (otherwise no single choice works for
    every agent at once).
    """
    d = derive(spec)
    alpha = np.asarray(spec.alpha)
    if spec.m > 1 and not np.allclose(alpha, alpha[0], rtol=0, atol=1e-14):
        raise SpecError("common sizing needs equal loadings for m > 1")
    a = alpha[0]
    k0 = d.kappa[0]
    mean_log_x1 = math.log(spec.x0) - spec.sigma0 ** 2 / 2
    b = a * (k0 * mean_log_x1 + 0.5 * a / d.p_total) / (1.0 - k0)
    sm = np.asarray(spec.sigmaM)
    m0 = np.exp(b + sm ** 2 / 2)
    return spec.replace(m0=tuple(m0))


# ---------------------------------------------------------------- config IO

class _TableModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    breaks: list[float]
    rates: list[float]


class _ConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    m: int = Field(ge=1)
    sigma0: float = Field(gt=0, allow_inf_nan=False)
    sigmaM: list[float]
    alpha: list[float]
    f: list[float]
    lam: list[float | _TableModel] = Field(alias="lambda")
    x0: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    m0: list[float] | None = None

    @field_validator("sigmaM")
    @classmethod
    def _nonneg(cls, v):
        for x in v:
            if not (math.isfinite(x) and x >= 0):
                raise ValueError("entries must be finite and >= 0")
        return v

    @field_validator("alpha", "f", "m0")
    @classmethod
    def _pos(cls, v):
        if v is None:
            return v
        for x in v:
            if not (math.isfinite(x) and x > 0):
                raise ValueError("entries must be finite and > 0")
        return v


def spec_from_dict(data: dict) -> ModelSpec:
    try:
        cfg = _ConfigModel.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"])
            lines.append(f"{loc}: {err['msg']}")
        raise SpecError("invalid config\n" + "\n".join(lines)) from None
    lam = [x if isinstance(x, float) else x.model_dump() for x in cfg.lam]
    return ModelSpec(m=cfg.m, sigma0=cfg.sigma0, sigmaM=cfg.sigmaM, alpha=cfg.alpha,
                     f=cfg.f, lam=lam, x0=cfg.x0, m0=cfg.m0)


def load_spec(path) -> ModelSpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SpecError(f"{path}: top level must be an object")
    return spec_from_dict(data)
