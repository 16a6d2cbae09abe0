"""
The ℓ1 objective f(W) = (1/m)·Σ|y_i − A_i(W1·W2)| with its residuals,
a Clarke subgradient and exact one-sided directional derivatives.

Symmetric instances evaluate the product W·Wᵀ from the single stored factor.
"""

import logging

import numpy as np

from common.linalg import sym
from recovery.models import FactorPair, Instance
from recovery.services.problem import DimensionMismatchError, apply_measurements

logger = logging.getLogger(__name__)

ZERO_RESIDUAL_TOL = 1e-11


def _check_dimensions(inst: Instance, W: FactorPair):
    if W.symmetric != inst.symmetric:
        raise DimensionMismatchError(
            f"{'Symmetric' if W.symmetric else 'Asymmetric'} factor pair given for a "
            f"{inst.kind} instance"
        )
    if W.left.shape != (inst.d1, inst.k) or W.right.shape != (inst.k, inst.d2):
        raise DimensionMismatchError(
            f"Factors {W.left.shape} x {W.right.shape} do not match "
            f"d1={inst.d1}, d2={inst.d2}, k={inst.k}"
        )


def _mean(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    return float(np.sum(values) / values.size)


def measurement_changes(inst: Instance, dX: np.ndarray) -> np.ndarray:
    """⟨A_i, dX⟩ for sensing, dX[x_i, y_i] for completion."""
    return apply_measurements(inst.ens, dX)


def residuals(inst: Instance, W: FactorPair) -> np.ndarray:
    _check_dimensions(inst, W)
    return inst.y - apply_measurements(inst.ens, W.product())


def loss(inst: Instance, W: FactorPair) -> float:
    return _mean(np.abs(residuals(inst, W)))


def loss_change(inst: Instance, W: FactorPair, dW: FactorPair, r_old=None) -> float:
    """
    loss(W + dW) − loss(W), averaged per measurement so small changes do not
    cancel against the baseline loss. Pass r_old to reuse the residuals at W.
    """
    if r_old is None:
        r_old = residuals(inst, W)
    r_new = residuals(inst, W + dW)
    return _mean(np.abs(r_new) - np.abs(r_old))


def adjoint(inst: Instance, weights: np.ndarray) -> np.ndarray:
    """A*(w) = Σ w_i A_i as a d1×d2 matrix."""
    if inst.ens.is_sensing:
        return np.tensordot(weights, inst.ens.matrices, axes=(0, 0))
    G = np.zeros((inst.d1, inst.d2))
    idx = inst.ens.indices
    np.add.at(G, (idx[:, 0], idx[:, 1]), weights)
    return G


def subgradient_from_residuals(inst: Instance, W: FactorPair, r: np.ndarray) -> FactorPair:
    """
    Chain rule through the product for residuals r = y − A(W1·W2).
    W may be any factor pair whose product has the d1×d2 shape.
    """
    if inst.m == 0:
        return W.zeros_like()
    M = adjoint(inst, np.sign(r)) / inst.m
    if W.symmetric:
        return FactorPair(-2.0 * sym(M) @ W.W1)
    return FactorPair(-M @ W.W2.T, -W.W1.T @ M)


def subgradient(inst: Instance, W: FactorPair) -> FactorPair:
    """
    Clarke subgradient with sgn(0) = 0.

    Asymmetric: G1 = −(1/m)·A*(sgn r)·W2ᵀ, G2 = −(1/m)·W1ᵀ·A*(sgn r).
    Symmetric:  G  = −(2/m)·sym(A*(sgn r))·W.
    """
    return subgradient_from_residuals(inst, W, residuals(inst, W))


def first_order_product_change(W: FactorPair, D: FactorPair) -> np.ndarray:
    """D1·W2 + W1·D2, or D·Wᵀ + W·Dᵀ for symmetric pairs."""
    return D.left @ W.right + W.left @ D.right


def directional_derivative(inst: Instance, W: FactorPair, D: FactorPair) -> float:
    """
    Exact one-sided derivative lim_{t→0+} (f(W + tD) − f(W))/t.

    Measurements whose residual is within 1e-11·(1 + |y_i|) of zero are kinks
    and contribute |d_i|; the rest contribute −sgn(r_i)·d_i.
    """
    r = residuals(inst, W)
    d = measurement_changes(inst, first_order_product_change(W, D))
    at_kink = np.abs(r) <= ZERO_RESIDUAL_TOL * (1.0 + np.abs(inst.y))
    contributions = np.where(at_kink, np.abs(d), -np.sign(r) * d)
    return _mean(contributions)
