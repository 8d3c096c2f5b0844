"""Source models and model-level transformations.

Two model kinds describe the correlated Gaussian triple (X, Y, Z):

``GeneralModel``
    X has covariance ``sigma_x``; the two observations are
    ``Y = B X + W_y`` and ``Z = E X + W_z`` with standard Gaussian noise.

``AlignedModel``
    All three vectors share the source dimension and the observations are
    ``Y = X + W_y``, ``Z = X + W_z`` with arbitrary invertible noise
    covariances.  A general model with square invertible B and E reduces to
    an aligned one without changing the achievable rate region.

All model objects are immutable after construction (arrays are frozen), so
they are safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    InvalidConditionalCov,
    NearSingular,
    NonPositiveAlpha,
    NotSquare,
)

# Count a generalized eigenvalue as "> 1" only above this threshold, so that
# identical observation channels give exactly zero surplus.
GEN_EIG_ONE_TOL = 1e-12

COND_COV_MIN_EIG = 1e-10


def _frozen(a):
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GeneralModel:
    """Source covariance plus observation matrices for Y and Z.

    Parameters
    ----------
    sigma_x : (mx, mx) array
        Source covariance, strictly positive definite.
    b : (my, mx) array
        Observation matrix of the legitimate receiver.
    e : (mz, mx) array
        Observation matrix of the eavesdropper.
    """

    sigma_x: np.ndarray
    b: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma_x", _frozen(self.sigma_x))
        object.__setattr__(self, "b", _frozen(np.atleast_2d(self.b)))
        object.__setattr__(self, "e", _frozen(np.atleast_2d(self.e)))
        validate_model(self)

    @property
    def mx(self):
        return self.sigma_x.shape[0]

    @property
    def my(self):
        return self.b.shape[0]

    @property
    def mz(self):
        return self.e.shape[0]


@dataclass(frozen=True)
class AlignedModel:
    """Aligned source model: Y = X + W_y, Z = X + W_z.

    All three covariances are m x m and strictly positive definite.
    """

    sigma_x: np.ndarray
    sigma_wy: np.ndarray
    sigma_wz: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma_x", _frozen(self.sigma_x))
        object.__setattr__(self, "sigma_wy", _frozen(self.sigma_wy))
        object.__setattr__(self, "sigma_wz", _frozen(self.sigma_wz))
        validate_model(self)

    @property
    def mx(self):
        return self.sigma_x.shape[0]


@dataclass(frozen=True)
class ConditionalCov:
    """Candidate conditional covariance of X given the auxiliary variable.

    The optimization variable of the rate characterization: a symmetric
    matrix Q with ``0 < Q <= sigma_x`` (eigenvalue tolerances: min eig of Q
    above 1e-10, ``sigma_x - Q`` PSD up to round-off).
    """

    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", _frozen(self.value))

    @classmethod
    def for_model(cls, model, value):
        """Validate ``value`` against ``model.sigma_x`` and wrap it.

        Raises ``InvalidConditionalCov`` when the matrix interval constraint
        fails.
        """
        if isinstance(value, ConditionalCov):
            value = value.value
        try:
            value = linalg.check_symmetric(value, "conditional covariance")
        except Exception as exc:
            raise InvalidConditionalCov(str(exc)) from exc
        if value.shape != model.sigma_x.shape:
            raise InvalidConditionalCov(
                f"conditional covariance shape {value.shape} does not match "
                f"source covariance shape {model.sigma_x.shape}"
            )
        if linalg.min_eig(value) <= COND_COV_MIN_EIG:
            raise InvalidConditionalCov(
                "conditional covariance is not strictly positive definite "
                f"(min eig = {linalg.min_eig(value):.3e})"
            )
        if not linalg.is_psd(model.sigma_x - value):
            raise InvalidConditionalCov(
                "conditional covariance exceeds the source covariance "
                f"(min eig of difference = {linalg.min_eig(model.sigma_x - value):.3e})"
            )
        return cls(value)


@dataclass(frozen=True)
class GenEigResult:
    """Generalized eigenvalues of the two signal-plus-identity matrices.

    ``phis`` is descending; ``rho`` counts the eigenvalues above 1, which
    are the only ones contributing to the infinite-communication key rate.
    """

    phis: np.ndarray
    rho: int

    def __post_init__(self):
        object.__setattr__(self, "phis", _frozen(self.phis))


@dataclass(frozen=True)
class PerturbedPair:
    """A model with invertible observation matrices plus its rate gap.

    ``model_bar`` perturbs every singular value of B and E upward by
    ``alpha``; ``gap`` bounds (in nats) how much key rate the original model
    can exceed the perturbed one by, and vanishes as ``alpha -> 0``.
    """

    model_bar: GeneralModel
    alpha: float
    gap: float


def conditional_cov(model, q):
    """Coerce ``q`` (array or ConditionalCov) to a validated ConditionalCov."""
    if isinstance(q, ConditionalCov):
        q = q.value
    return ConditionalCov.for_model(model, q)


def validate_model(m):
    """Check every invariant of a model; return it unchanged if valid.

    Raises ``NotPositiveDefinite`` (naming the offending matrix),
    ``DimensionMismatch``, or ``AsymmetricInput``.
    """
    if isinstance(m, GeneralModel):
        sigma_x = linalg.check_symmetric(m.sigma_x, "sigma_x")
        linalg.require_pd(sigma_x, "sigma_x")
        mx = sigma_x.shape[0]
        if m.b.ndim != 2 or m.b.shape[1] != mx:
            raise DimensionMismatch(
                f"b has shape {m.b.shape}, expected (*, {mx})"
            )
        if m.e.ndim != 2 or m.e.shape[1] != mx:
            raise DimensionMismatch(
                f"e has shape {m.e.shape}, expected (*, {mx})"
            )
        return m
    if isinstance(m, AlignedModel):
        for name in ("sigma_x", "sigma_wy", "sigma_wz"):
            mat = linalg.check_symmetric(getattr(m, name), name)
            linalg.require_pd(mat, name)
            if mat.shape != m.sigma_x.shape:
                raise DimensionMismatch(
                    f"{name} has shape {mat.shape}, expected {m.sigma_x.shape}"
                )
        return m
    raise TypeError(f"not a model: {type(m).__name__}")


def to_aligned(m: GeneralModel) -> AlignedModel:
    """Reduce a general model with square invertible B, E to aligned form.

    Applying ``B^-1`` to Y and ``E^-1`` to Z is information preserving, so
    the aligned model has the same rate region; its noise covariances are
    ``B^-1 B^-T`` and ``E^-1 E^-T``.

    Raises ``NotSquare`` or ``NearSingular`` (condition number >= 1e12).
    """
    validate_model(m)
    for name, mat in (("b", m.b), ("e", m.e)):
        if mat.shape[0] != mat.shape[1]:
            raise NotSquare(f"{name} has shape {mat.shape}; must be square")
        svals = np.linalg.svd(mat, compute_uv=False)
        if svals[-1] <= 0.0 or svals[0] / svals[-1] >= 1e12:
            raise NearSingular(f"{name} is numerically singular")
    b_inv = np.linalg.solve(m.b, np.eye(m.mx))
    e_inv = np.linalg.solve(m.e, np.eye(m.mx))
    return AlignedModel(
        sigma_x=m.sigma_x,
        sigma_wy=linalg.symmetrize(b_inv @ b_inv.T),
        sigma_wz=linalg.symmetrize(e_inv @ e_inv.T),
    )


def to_general(m: AlignedModel) -> GeneralModel:
    """Rewrite an aligned model with identity-covariance noise.

    Whitening each observation by the inverse square root of its noise
    covariance is information preserving, giving ``B = sigma_wy^-1/2`` and
    ``E = sigma_wz^-1/2``.
    """
    validate_model(m)
    return GeneralModel(
        sigma_x=m.sigma_x,
        b=linalg.inv_sqrtm_pd(m.sigma_wy, "sigma_wy"),
        e=linalg.inv_sqrtm_pd(m.sigma_wz, "sigma_wz"),
    )


def _square_embed(mat, mx):
    """Square m x m observation matrix equivalent to ``mat`` (k x m).

    Uses the SVD ``mat = U diag(s) Vh``: rotating the observation by U^T and
    padding with (or dropping) pure-noise coordinates preserves all
    information, leaving ``diag(s_padded) @ Vh`` with the singular values
    embedded in an mx x mx diagonal.
    """
    if mat.shape == (mx, mx):
        return np.asarray(mat, dtype=float), None
    _, svals, vh = np.linalg.svd(mat)
    s_pad = np.zeros(mx)
    s_pad[: len(svals)] = svals
    return s_pad[:, None] * vh[:mx, :], (s_pad, vh)


def perturb_svd(m: GeneralModel, alpha: float) -> PerturbedPair:
    """Perturb B and E into invertible matrices, reporting the rate gap.

    Every singular value of (square embeddings of) B and E is shifted up by
    ``alpha > 0``, making both matrices invertible so the aligned reduction
    applies.  The returned ``gap`` is
    ``log|E~ sigma_x E~^T + I|/2 - log|E sigma_x E^T + I|/2`` in nats: the
    worst-case key-rate surplus of the original model over the perturbed
    one.  It is nonnegative and vanishes as ``alpha -> 0``.
    """
    validate_model(m)
    if not alpha > 0.0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha!r}")
    mx = m.mx

    def perturbed(mat):
        sq, _ = _square_embed(np.asarray(mat, dtype=float), mx)
        u, svals, vh = np.linalg.svd(sq)
        return u @ ((svals + alpha)[:, None] * vh)

    model_bar = GeneralModel(sigma_x=m.sigma_x, b=perturbed(m.b), e=perturbed(m.e))
    gap = 0.5 * (
        linalg.logdet_pd(model_bar.e @ m.sigma_x @ model_bar.e.T + np.eye(mx))
        - linalg.logdet_pd(m.e @ m.sigma_x @ m.e.T + np.eye(m.mz))
    )
    return PerturbedPair(model_bar=model_bar, alpha=float(alpha), gap=float(gap))


def gen_eigs(m: GeneralModel) -> GenEigResult:
    """Generalized eigenvalues of the pencil behind the key-rate limit.

    With ``S = sigma_x^1/2``, the pencil is
    ``(S B^T B S + I, S E^T E S + I)``; the eigenvalues are computed by
    Cholesky whitening of the second matrix followed by a symmetric
    eigensolve.  All values are positive; ``rho`` counts those above 1.
    """
    validate_model(m)
    s_half = linalg.sqrtm_psd(m.sigma_x)
    eye = np.eye(m.mx)
    a = s_half @ (m.b.T @ m.b) @ s_half + eye
    c = s_half @ (m.e.T @ m.e) @ s_half + eye
    phis = linalg.gen_eig_pencil(linalg.symmetrize(a), linalg.symmetrize(c))
    rho = int(np.sum(phis > 1.0 + GEN_EIG_ONE_TOL))
    return GenEigResult(phis=phis, rho=rho)
