"""
Problem generation: ground truths, measurement ensembles, noise realizations
and the true solutions analysed by the landscape probes.
"""

import logging
from dataclasses import replace

import numpy as np

from common import linalg
from recovery.models import (
    EnsembleKindEnum,
    FactorPair,
    GroundTruth,
    GroundTruthKindEnum,
    Instance,
    InstanceSpec,
    MeasurementEnsemble,
    NoiseKindEnum,
    NoiseModel,
    NoiseRealization,
    SolutionKindEnum,
)

logger = logging.getLogger(__name__)

# Relative reconstruction tolerance for accepting a factor pair as a true solution
TRUE_SOLUTION_TOL = 1e-8


class ProblemError(Exception):
    """Base exception for problem construction"""
    pass


class InvalidDimensionsError(ProblemError):
    pass


class DimensionMismatchError(ProblemError):
    pass


class NotOrthonormalError(ProblemError):
    pass


class NotATrueSolutionError(ProblemError):
    """Factor pair does not reproduce X*"""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# ──────────────────────────────────────────────
# Ground truth
# ──────────────────────────────────────────────

def make_ground_truth(d1: int, d2: int, r: int, kind: str, rng: np.random.Generator) -> GroundTruth:
    """
    Draw X* = U*·diag(Σ*)·V*ᵀ with Haar factors and singular values
    log-uniform in [1, 3].

    Coherent ground truths have the last column of V* equal to e_0 exactly,
    the other columns Haar-random in its orthogonal complement.
    """
    if not 1 <= r <= min(d1, d2):
        raise InvalidDimensionsError(f"Rank r={r} must lie in [1, min({d1}, {d2})]")
    if kind == GroundTruthKindEnum.PSD_SYMMETRIC and d1 != d2:
        raise InvalidDimensionsError(f"psd-symmetric ground truth needs d1 == d2, got {d1}x{d2}")
    if kind not in GroundTruthKindEnum.values:
        raise InvalidDimensionsError(f"Unknown ground-truth kind '{kind}'")

    sigma = np.sort(np.exp(rng.uniform(0.0, np.log(3.0), size=r)))[::-1].copy()
    U = linalg.random_orthonormal(d1, r, rng)

    if kind == GroundTruthKindEnum.PSD_SYMMETRIC:
        V = U
    elif kind == GroundTruthKindEnum.COHERENT:
        V = np.zeros((d2, r))
        V[1:, :r - 1] = linalg.random_orthonormal(d2 - 1, r - 1, rng)
        V[0, r - 1] = 1.0
    else:
        V = linalg.random_orthonormal(d2, r, rng)

    X = (U * sigma) @ V.T
    if kind == GroundTruthKindEnum.PSD_SYMMETRIC:
        X = linalg.sym(X)
    return GroundTruth(d1=d1, d2=d2, r=r, Ustar=U, Sigmastar=sigma, Vstar=V, Xstar=X, kind=kind)


def coherent_axis(gt: GroundTruth):
    """
    Locate a singular vector aligned with a standard basis vector.

    Returns:
        (side, column, coordinate, sign) with side 'right' for V* and 'left'
        for U*, or None when the ground truth is not coherent
    """
    for side, M in (('right', gt.Vstar), ('left', gt.Ustar)):
        for j in range(M.shape[1]):
            c = int(np.argmax(np.abs(M[:, j])))
            if abs(abs(M[c, j]) - 1.0) <= 1e-12:
                return side, j, c, float(np.sign(M[c, j]))
    return None


# ──────────────────────────────────────────────
# Measurements and noise
# ──────────────────────────────────────────────

def sample_sensing(d1: int, d2: int, m: int, rng: np.random.Generator) -> MeasurementEnsemble:
    if m < 1:
        raise InvalidDimensionsError(f"Sensing needs m >= 1, got {m}")
    matrices = rng.standard_normal((m, d1, d2))
    return MeasurementEnsemble(kind=EnsembleKindEnum.SENSING, d1=d1, d2=d2, matrices=matrices)


def sample_mask(d1: int, d2: int, s: float, rng: np.random.Generator) -> MeasurementEnsemble:
    """Bernoulli(s) observation pattern, indices in row-major order."""
    if not 0.0 <= s <= 1.0:
        raise InvalidDimensionsError(f"Sampling probability must lie in [0, 1], got {s}")
    mask = rng.random((d1, d2)) < s
    indices = np.argwhere(mask).astype(np.int64)
    return MeasurementEnsemble(kind=EnsembleKindEnum.COMPLETION, d1=d1, d2=d2, indices=indices, s=float(s))


def noise_threshold(model: NoiseModel):
    """(t0, p0) such that P(|eps| >= t0) >= p0 for the noise distribution."""
    if model.kind == NoiseKindEnum.GAUSSIAN:
        return model.scale / 4.0, 0.5
    return float(model.scale), 1.0


def sample_noise(m: int, p: float, model: NoiseModel, rng: np.random.Generator) -> NoiseRealization:
    if not 0.0 <= p <= 1.0:
        raise ProblemError(f"Corruption probability must lie in [0, 1], got {p}")
    if model.scale <= 0:
        raise ProblemError(f"Noise scale must be positive, got {model.scale}")

    S = np.flatnonzero(rng.random(m) < p).astype(np.int64)
    eps = np.zeros(m)
    if model.kind == NoiseKindEnum.GAUSSIAN:
        eps[S] = rng.normal(0.0, model.scale, size=S.size)
    elif model.kind == NoiseKindEnum.SYMMETRIC_OUTLIER:
        eps[S] = model.scale * rng.choice([-1.0, 1.0], size=S.size)
    elif model.kind == NoiseKindEnum.POSITIVE_OUTLIER:
        eps[S] = model.scale
    else:
        raise ProblemError(f"Unknown noise kind '{model.kind}'")

    t0, p0 = noise_threshold(model)
    St = S[np.abs(eps[S]) >= t0]
    return NoiseRealization(p=float(p), model=model, S=S, eps=eps, t0=t0, p0=p0, St=St)


def apply_measurements(ens: MeasurementEnsemble, X: np.ndarray) -> np.ndarray:
    """A(X): inner products with the sensing matrices, or the observed entries."""
    if ens.is_sensing:
        return np.tensordot(ens.matrices, X, axes=([1, 2], [0, 1]))
    return X[ens.indices[:, 0], ens.indices[:, 1]]


def measure(gt: GroundTruth, ens: MeasurementEnsemble, noise: NoiseRealization,
            k=None, symmetric=False) -> Instance:
    """
    y = A(X*) + eps. The search rank defaults to r; callers normally set it
    with Instance.with_search_rank.
    """
    if (ens.d1, ens.d2) != (gt.d1, gt.d2):
        raise DimensionMismatchError(
            f"Ensemble is {ens.d1}x{ens.d2} but ground truth is {gt.d1}x{gt.d2}"
        )
    if noise.m != ens.m:
        raise DimensionMismatchError(f"Noise has length {noise.m}, ensemble has m={ens.m}")
    if symmetric and gt.kind != GroundTruthKindEnum.PSD_SYMMETRIC:
        raise DimensionMismatchError("Symmetric formulations need a psd-symmetric ground truth")
    k = gt.r if k is None else int(k)
    if k < gt.r:
        raise InvalidDimensionsError(f"Search rank k={k} is below the true rank r={gt.r}")

    y = apply_measurements(ens, gt.Xstar) + noise.eps
    return Instance(gt=gt, ens=ens, noise=noise, y=y, k=k, symmetric=bool(symmetric))


def generate_instance(spec: InstanceSpec, rng: np.random.Generator) -> Instance:
    """Build one instance of the requested formulation from a single stream."""
    gt_kind = spec.gt_kind
    if gt_kind is None:
        gt_kind = GroundTruthKindEnum.PSD_SYMMETRIC if spec.symmetric else GroundTruthKindEnum.GENERIC
    gt = make_ground_truth(spec.d1, spec.d2, spec.r, gt_kind, rng)

    if spec.is_sensing:
        ens = sample_sensing(spec.d1, spec.d2, spec.m, rng)
    else:
        ens = sample_mask(spec.d1, spec.d2, spec.s, rng)

    model = spec.noise
    if spec.noise_relative:
        model = replace(model, scale=model.scale * gt.sigma1)
    noise = sample_noise(ens.m, spec.p, model, rng)

    inst = measure(gt, ens, noise, k=spec.k, symmetric=spec.symmetric)
    logger.debug(
        f"Generated {inst.kind} instance d={spec.d1}x{spec.d2} r={spec.r} k={spec.k} "
        f"m={inst.m} |S|={noise.S.size} |St|={noise.St.size}"
    )
    return inst


def transpose_instance(inst: Instance) -> Instance:
    """The same realization posed for X*ᵀ (sensing matrices or index pairs transposed)."""
    gt = inst.gt
    gt_t = GroundTruth(
        d1=gt.d2, d2=gt.d1, r=gt.r,
        Ustar=gt.Vstar, Sigmastar=gt.Sigmastar, Vstar=gt.Ustar,
        Xstar=gt.Xstar.T.copy(), kind=gt.kind,
    )
    ens = inst.ens
    if ens.is_sensing:
        ens_t = replace(ens, d1=ens.d2, d2=ens.d1, matrices=np.ascontiguousarray(ens.matrices.transpose(0, 2, 1)))
    else:
        ens_t = replace(ens, d1=ens.d2, d2=ens.d1, indices=ens.indices[:, ::-1].copy())
    return replace(inst, gt=gt_t, ens=ens_t)


# ──────────────────────────────────────────────
# True solutions
# ──────────────────────────────────────────────

def true_solution_symmetric(gt: GroundTruth, k: int, R: np.ndarray) -> FactorPair:
    """W = V*·Σ*^{1/2}·R for R with orthonormal rows."""
    if gt.kind != GroundTruthKindEnum.PSD_SYMMETRIC:
        raise ProblemError("Symmetric true solutions need a psd-symmetric ground truth")
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (gt.r, k):
        raise DimensionMismatchError(f"R must be {gt.r}x{k}, got {R.shape}")
    if np.max(np.abs(R @ R.T - np.eye(gt.r))) > 1e-10:
        raise NotOrthonormalError("R must have orthonormal rows")
    W = (gt.Vstar * np.sqrt(gt.Sigmastar)) @ R
    return FactorPair(W)


def recover_rotation(W: FactorPair, gt: GroundTruth) -> np.ndarray:
    """R = Σ*^{-1/2}·V*ᵀ·W for a symmetric true solution W."""
    residual = float(np.linalg.norm(W.W1 @ W.W1.T - gt.Xstar))
    if residual > TRUE_SOLUTION_TOL * gt.sigma1:
        raise NotATrueSolutionError(
            f"W Wᵀ differs from X* by {residual:.3e} (Frobenius)", residual=residual,
        )
    return (gt.Vstar.T @ W.W1) / np.sqrt(gt.Sigmastar)[:, None]


def true_solution_asym(gt: GroundTruth, k: int, balance: str, Z=None, rng=None) -> FactorPair:
    """
    Balanced: W1 = [U*Σ*^{1/2} | 0], W2 = [Σ*^{1/2}V*ᵀ ; 0].
    Imbalanced: W1 = [U*Σ* | 0], W2 = [V* | Z]ᵀ with Z of shape d2×(k−r);
    Z defaults to a Haar draw with orthonormal columns.
    """
    r = gt.r
    if k < r:
        raise InvalidDimensionsError(f"Search rank k={k} is below r={r}")
    W1 = np.zeros((gt.d1, k))
    W2 = np.zeros((k, gt.d2))

    if balance == SolutionKindEnum.BALANCED:
        root = np.sqrt(gt.Sigmastar)
        W1[:, :r] = gt.Ustar * root
        W2[:r, :] = (gt.Vstar * root).T
        return FactorPair(W1, W2)

    if balance != SolutionKindEnum.IMBALANCED:
        raise ProblemError(f"Unknown balance '{balance}'")
    if k == r:
        raise InvalidDimensionsError("Imbalanced solutions need k > r")
    if Z is None:
        if rng is None:
            raise ProblemError("Imbalanced solution needs Z or an rng to draw it")
        if k - r > gt.d2:
            raise InvalidDimensionsError(f"k - r = {k - r} exceeds d2 = {gt.d2}")
        Z = linalg.random_orthonormal(gt.d2, k - r, rng)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != (gt.d2, k - r):
        raise DimensionMismatchError(f"Z must be {gt.d2}x{k - r}, got {Z.shape}")
    W1[:, :r] = gt.Ustar * gt.Sigmastar
    W2[:r, :] = gt.Vstar.T
    W2[r:, :] = Z.T
    return FactorPair(W1, W2)


def completion_witness_solution(gt: GroundTruth, k: int) -> FactorPair:
    """W1* = [U*Σ* | 0], W2* = [V* | I]ᵀ, the identity block occupying the first k−r columns."""
    r = gt.r
    if k <= r:
        raise InvalidDimensionsError("Witness solution needs k > r")
    if k - r > gt.d2:
        raise InvalidDimensionsError(f"k - r = {k - r} exceeds d2 = {gt.d2}")
    return true_solution_asym(gt, k, SolutionKindEnum.IMBALANCED, Z=np.eye(gt.d2, k - r))


def construct_solution(inst: Instance, kind: str, rng=None) -> FactorPair:
    gt, k = inst.gt, inst.k
    if kind == SolutionKindEnum.ROTATED:
        if rng is None:
            raise ProblemError("Rotated solution needs an rng")
        return true_solution_symmetric(gt, k, linalg.random_orthonormal(gt.r, k, rng))
    if kind == SolutionKindEnum.CANONICAL:
        return true_solution_symmetric(gt, k, np.eye(gt.r, k))
    if inst.symmetric:
        raise ProblemError(f"Solution kind '{kind}' is asymmetric but the instance is symmetric")
    if kind == SolutionKindEnum.WITNESS:
        return completion_witness_solution(gt, k)
    return true_solution_asym(gt, k, kind, rng=rng)


def default_solution_kind(inst: Instance) -> str:
    return SolutionKindEnum.ROTATED if inst.symmetric else SolutionKindEnum.BALANCED


def factorized_rank(W: FactorPair, tau: float = 0.0) -> int:
    """rank(W1, τ) + rank(W2, τ); twice rank(W, τ) for symmetric pairs."""
    _, rank1 = linalg.threshold_svd(W.W1, tau)
    if W.symmetric:
        return 2 * rank1
    _, rank2 = linalg.threshold_svd(W.W2, tau)
    return rank1 + rank2


def relative_distance(inst: Instance, W: FactorPair) -> float:
    X = inst.gt.Xstar
    return float(np.linalg.norm(W.product() - X) / np.linalg.norm(X))
