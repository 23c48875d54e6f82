"""
Núcleos de Distribución.

Funciones de probabilidad, medias, funciones de enlace y cotas inferiores de
inflación para las familias PP, ZTNB, OIPP y OIZTNB.

Todas las probabilidades se acumulan en escala logarítmica (log-gamma para
los términos Γ) y solo se exponencian al final.
"""

import logging
from typing import Optional, Union

import numpy as np
from scipy.special import expit, gammaln, log_expit

from models.familia import Familia, Parametros, ParametrosEnlazados

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# log(mayor double finito); por encima exp() desborda
LOG_MAX_FLOAT = np.log(np.finfo(float).max)

# Hasta este conteo log Γ(α+y) − log Γ(α) se acumula con la recursión
MAX_RECURSION_POCHHAMMER = 100_000

# Valor finito de L_i cuando λ_i subdesborda
COTA_L_MINIMA = -1.0 / np.finfo(float).eps


def _escalar_si_aplica(valor: np.ndarray) -> ArrayLike:
    """Devuelve float si el resultado es de dimensión cero."""
    valor = np.asarray(valor)
    return float(valor) if valor.ndim == 0 else valor


def _validar_conteos(y: ArrayLike) -> np.ndarray:
    """
    Valida que los conteos sean enteros >= 1.

    Raises:
        ValueError: Si hay ceros, negativos o valores no enteros
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr != np.floor(y_arr)):
        raise ValueError(f"Los conteos deben ser enteros, se recibió {y}")
    if np.any(y_arr < 1):
        raise ValueError(f"y={y} fuera del soporte truncado en cero (y >= 1)")
    return y_arr.astype(np.int64)


# =============================================================================
# FUNCIONES AUXILIARES LOG-ESPACIO
# =============================================================================

def log_factorial(y: ArrayLike) -> ArrayLike:
    """
    Calcula log(y!) con log-gamma exacto.

    Args:
        y: Entero(s) no negativo(s)

    Returns:
        log(y!) (float o array)
    """
    return _escalar_si_aplica(gammaln(np.asarray(y, dtype=float) + 1.0))


def log_expm1(x: ArrayLike) -> np.ndarray:
    """log(exp(x) − 1) estable para x > 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore', over='ignore'):
        return np.where(
            x > 1.0,
            x + np.log1p(-np.exp(-np.maximum(x, 1.0))),
            np.log(np.expm1(np.minimum(x, 1.0)))
        )


def log_pochhammer(alpha: float, y: ArrayLike) -> np.ndarray:
    """
    log Γ(α+y) − log Γ(α) = Σ_{j=0}^{y-1} log(α+j).

    Para conteos moderados se usa la suma acumulada (recursión de la gamma),
    que no pierde precisión cuando α es grande; para conteos enormes se
    recurre a la diferencia de log-gammas.
    """
    y_arr = np.asarray(y, dtype=np.int64)
    y_max = int(y_arr.max()) if y_arr.size else 0

    if y_max <= MAX_RECURSION_POCHHAMMER:
        tabla = np.concatenate(([0.0], np.cumsum(np.log(alpha + np.arange(y_max)))))
        return tabla[y_arr]

    return gammaln(alpha + y_arr) - gammaln(alpha)


# =============================================================================
# FUNCIONES DE ENLACE
# =============================================================================

def lambda_link(x_row: np.ndarray, beta: np.ndarray) -> float:
    """
    Enlace canónico de la tasa: λ_i = exp(X_i β).

    Args:
        x_row: Fila de la matriz X (con intercepto)
        beta: Coeficientes β

    Returns:
        λ_i positivo y finito

    Raises:
        ValueError: Si las longitudes no coinciden
        OverflowError: Si X_i β desborda exp()
    """
    x_row = np.asarray(x_row, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x_row.shape != beta.shape:
        raise ValueError(f"x_row tiene longitud {x_row.shape}, beta tiene {beta.shape}")

    return float(tasas(x_row[np.newaxis, :], beta)[0])


def tasas(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """
    λ_i = exp(X_i β) para todas las filas de X.

    Raises:
        ValueError: Si las columnas de X no coinciden con β
        OverflowError: Si algún predictor lineal desborda exp()
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(beta):
        raise ValueError(f"X tiene forma {X.shape}, beta tiene longitud {len(beta)}")

    eta = X @ beta
    if np.any(eta > LOG_MAX_FLOAT):
        raise OverflowError(f"exp(X beta) desborda: max(X beta) = {eta.max():.4g}")
    return np.exp(eta)


def log_f1(familia: Familia, lam: ArrayLike, alpha: Optional[float] = None) -> np.ndarray:
    """
    log f(1) de la distribución base truncada (PP o ZTNB).

    Args:
        familia: Cualquier familia; se usa su familia base
        lam: λ_i
        alpha: α (solo familias binomiales negativas)
    """
    base = familia.base
    lam = np.asarray(lam, dtype=float)
    if base == Familia.PP:
        return np.log(lam) - log_expm1(lam)

    theta = lam / alpha
    log1p_theta = np.log1p(theta)
    return (
        np.log(lam)
        - (alpha + 1.0) * log1p_theta
        - np.log(-np.expm1(-alpha * log1p_theta))
    )


def f1(familia: Familia, lam: ArrayLike, alpha: Optional[float] = None) -> ArrayLike:
    """Probabilidad de un conteo igual a 1 bajo la distribución base truncada."""
    return _escalar_si_aplica(np.exp(log_f1(familia, lam, alpha)))


def lower_bound(
    familia: Familia,
    lam: ArrayLike,
    alpha: Optional[float] = None
) -> ArrayLike:
    """
    Cota inferior de ω: L_i = −f(1)/(1 − f(1)).

    Args:
        familia: OIPP u OIZTNB
        lam: λ_i
        alpha: α (requerido si y solo si la familia es OIZTNB)

    Returns:
        L_i estrictamente negativo, no menor que COTA_L_MINIMA

    Raises:
        ValueError: Si la familia no es inflada o α no corresponde a la familia
    """
    if not familia.es_inflada:
        raise ValueError(f"lower_bound no aplica a la familia {familia.etiqueta}")
    _validar_alpha(familia, alpha)

    lam = np.maximum(np.asarray(lam, dtype=float), np.finfo(float).tiny)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        lf1 = log_f1(familia, lam, alpha)
        # −f/(1−f) = f/expm1(log f)
        cota = np.exp(lf1) / np.expm1(lf1)
        # f(1) → 1 cuando λ → 0: L_i se acota en COTA_L_MINIMA
        cota = np.where(lf1 < 0, cota, COTA_L_MINIMA)
    return _escalar_si_aplica(np.maximum(cota, COTA_L_MINIMA))


def omega_link(z_row: np.ndarray, gamma: np.ndarray, lower_bound: ArrayLike) -> float:
    """
    Enlace logístico generalizado: ω_i = L_i + (1 − L_i)/(1 + exp(−Z_iγ)).

    Raises:
        ValueError: Si las longitudes no coinciden o L >= 1
    """
    z_row = np.asarray(z_row, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if z_row.shape != gamma.shape:
        raise ValueError(f"z_row tiene longitud {z_row.shape}, gamma tiene {gamma.shape}")
    if np.any(np.asarray(lower_bound) >= 1):
        raise ValueError(f"lower_bound debe ser < 1, se recibió {lower_bound}")

    return float(omega_desde_eta(float(z_row @ gamma), lower_bound))


def omega_desde_eta(eta: ArrayLike, cota: ArrayLike) -> ArrayLike:
    """ω a partir del predictor lineal η = Z_iγ y la cota L_i."""
    cota = np.asarray(cota, dtype=float)
    return _escalar_si_aplica(cota + (1.0 - cota) * expit(eta))


def _validar_alpha(familia: Familia, alpha: Optional[float]) -> None:
    if familia.usa_alpha:
        if alpha is None or not np.isfinite(alpha) or alpha <= 0:
            raise ValueError(f"La familia {familia.etiqueta} requiere alpha > 0, se recibió {alpha}")
    elif alpha is not None:
        raise ValueError(f"La familia {familia.etiqueta} no admite alpha")


def enlazar(
    familia: Familia,
    lam: ArrayLike,
    alpha: Optional[float] = None,
    eta: Optional[ArrayLike] = None,
    omega: Optional[ArrayLike] = None
) -> ParametrosEnlazados:
    """
    Construye ParametrosEnlazados a partir de λ (y η u ω en familias infladas).

    Args:
        familia: Familia del modelo
        lam: λ_i
        alpha: α (familias binomiales negativas)
        eta: Predictor lineal Z_iγ; ω se obtiene por el enlace
        omega: ω explícito (por ejemplo ω = 0 o ω = 1); ignora el enlace
    """
    _validar_alpha(familia, alpha)
    lam = np.asarray(lam, dtype=float)
    theta = lam / alpha if familia.usa_alpha else None

    if not familia.es_inflada:
        return ParametrosEnlazados(lam=lam, theta=theta)

    cota = np.asarray(lower_bound(familia, lam, alpha))
    if omega is None:
        if eta is None:
            raise ValueError(f"{familia.etiqueta} requiere eta u omega")
        eta = np.asarray(eta, dtype=float)
        omega = omega_desde_eta(eta, cota)
    else:
        eta = None

    return ParametrosEnlazados(
        lam=lam,
        theta=theta,
        lower_bound=cota,
        omega=np.asarray(omega, dtype=float),
        eta=eta
    )


def link(
    familia: Familia,
    params: Parametros,
    X: np.ndarray,
    Z: Optional[np.ndarray] = None
) -> ParametrosEnlazados:
    """
    Aplica los enlaces a matrices de diseño completas.

    Raises:
        ValueError: Si los parámetros no corresponden a la familia o a X/Z
        OverflowError: Si λ desborda
    """
    params.validar_para(
        familia,
        k=np.asarray(X).shape[1],
        p=np.asarray(Z).shape[1] if Z is not None else None
    )
    lam = tasas(X, params.beta)
    eta = None
    if familia.es_inflada:
        if Z is None:
            raise ValueError(f"{familia.etiqueta} requiere la matriz Z")
        eta = np.asarray(Z, dtype=float) @ params.gamma
    return enlazar(familia, lam, params.alpha, eta=eta)


# =============================================================================
# FUNCIONES DE PROBABILIDAD
# =============================================================================

def _log_pmf_base(
    familia: Familia,
    lam: np.ndarray,
    alpha: Optional[float],
    y: np.ndarray
) -> np.ndarray:
    """log f(y) de PP o ZTNB."""
    base = familia.base
    log_lam = np.log(lam)

    if base == Familia.PP:
        return y * log_lam - log_expm1(lam) - gammaln(y + 1.0)

    theta = lam / alpha
    log1p_theta = np.log1p(theta)
    return (
        log_pochhammer(alpha, y)
        - gammaln(y + 1.0)
        - alpha * log1p_theta
        + y * (np.log(theta) - log1p_theta)
        - np.log(-np.expm1(-alpha * log1p_theta))
    )


def log_pmf(
    familia: Familia,
    enlazados: ParametrosEnlazados,
    alpha: Optional[float],
    y: ArrayLike
) -> ArrayLike:
    """
    Log-probabilidad de y bajo la familia (vectorizada por observación).

    En familias infladas:
    - y = 1: log(ω + (1−ω) f(1)), que vale log σ(η) cuando ω sale del enlace
    - y >= 2: log(1−ω) + log f(y)

    Args:
        familia: Familia del modelo
        enlazados: Parámetros enlazados consistentes con la familia
        alpha: α (familias binomiales negativas)
        y: Conteo(s) >= 1

    Raises:
        ValueError: Si y está fuera del soporte o los parámetros no son válidos
    """
    _validar_alpha(familia, alpha)
    enlazados.validar(familia)
    y_arr = _validar_conteos(y)
    lam = np.asarray(enlazados.lam, dtype=float)

    with np.errstate(divide='ignore'):
        log_base = _log_pmf_base(familia, lam, alpha, y_arr)
        if not familia.es_inflada:
            return _escalar_si_aplica(log_base)

        es_uno = y_arr == 1
        if enlazados.eta is not None:
            eta = np.asarray(enlazados.eta, dtype=float)
            lf1 = log_f1(familia, lam, alpha)
            log_uno = log_expit(eta)
            # log(1−ω) = log σ(−η) − log(1 − f(1))
            log_resto = log_expit(-eta) - np.log(-np.expm1(lf1)) + log_base
        else:
            omega = np.asarray(enlazados.omega, dtype=float)
            f_uno = np.exp(log_f1(familia, lam, alpha))
            log_uno = np.log(np.maximum(omega + (1.0 - omega) * f_uno, 0.0))
            log_resto = np.log1p(-omega) + log_base

    return _escalar_si_aplica(np.where(es_uno, log_uno, log_resto))


def pmf(
    familia: Familia,
    enlazados: ParametrosEnlazados,
    alpha: Optional[float],
    y: ArrayLike
) -> ArrayLike:
    """
    Probabilidad de y bajo la familia.

    Returns:
        Valor(es) en [0, 1]
    """
    return _escalar_si_aplica(np.exp(log_pmf(familia, enlazados, alpha, y)))


# =============================================================================
# MEDIAS
# =============================================================================

def media_base(familia: Familia, lam: ArrayLike, alpha: Optional[float] = None) -> np.ndarray:
    """E[y] de la distribución base truncada (PP o ZTNB)."""
    lam = np.asarray(lam, dtype=float)
    if familia.base == Familia.PP:
        return lam / -np.expm1(-lam)
    return lam / -np.expm1(-alpha * np.log1p(lam / alpha))


def mean(
    familia: Familia,
    enlazados: ParametrosEnlazados,
    alpha: Optional[float] = None
) -> ArrayLike:
    """
    E[y] de la familia.

    PP: λe^λ/(e^λ − 1); ZTNB: λ/(1 − (1+λ/α)^(−α)); las familias infladas
    mezclan con ω: ω + (1 − ω) μ_base.

    Raises:
        ValueError: Si los parámetros no son válidos
    """
    _validar_alpha(familia, alpha)
    enlazados.validar(familia)

    mu = media_base(familia, enlazados.lam, alpha)
    if familia.es_inflada:
        omega = np.asarray(enlazados.omega, dtype=float)
        mu = omega + (1.0 - omega) * mu
    return _escalar_si_aplica(mu)


# =============================================================================
# SOPORTE ADAPTATIVO
# =============================================================================

def matriz_pmf(
    familia: Familia,
    enlazados: ParametrosEnlazados,
    alpha: Optional[float],
    y_max: int
) -> np.ndarray:
    """
    Probabilidades de y = 1..y_max para cada observación.

    Returns:
        Matriz (y_max, n); la fila j corresponde a y = j + 1
    """
    ys = np.arange(1, y_max + 1)[:, np.newaxis]
    return np.atleast_2d(pmf(familia, enlazados, alpha, ys))


def y_max_adaptativo(
    familia: Familia,
    enlazados: ParametrosEnlazados,
    alpha: Optional[float] = None,
    masa: float = 1.0 - 1e-12,
    tope: int = 1_000_000
) -> int:
    """
    Menor y_max tal que Σ_{y<=y_max} pmf(y) >= masa para todas las observaciones.

    El soporte se duplica hasta cubrir la masa pedida o alcanzar `tope`.
    """
    mu = np.atleast_1d(media_base(familia, enlazados.lam, alpha))
    y_max = int(min(tope, max(32, np.ceil(4 * mu.max()))))

    while True:
        acumulado = np.cumsum(matriz_pmf(familia, enlazados, alpha, y_max), axis=0)
        cubierto = np.all(acumulado >= masa, axis=1)
        if cubierto.any():
            return int(np.argmax(cubierto)) + 1
        if y_max >= tope:
            logger.warning(f"Soporte adaptativo alcanzó el tope de {tope} puntos")
            return tope
        y_max = min(2 * y_max, tope)
