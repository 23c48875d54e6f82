"""
Generador de Variables Aleatorias.

Muestras de PP, ZTNB, OIPP y OIZTNB bajo los enlaces de regresión.

- ω_i >= 0: en dos etapas; se emite 1 con probabilidad ω_i y si no se
  extrae de la distribución base sin truncar, rechazando ceros.
- ω_i < 0 (deflación): inversión directa sobre la pmf inflada, acumulando
  con el cociente recursivo f(y+1)/f(y).

Las extracciones base usan numpy: Poisson por inversión para λ < 10 y PTRS
por encima; la binomial negativa como mezcla gamma-Poisson.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from core.distribuciones import enlazar, log_f1, tasas
from models.familia import Familia, Parametros

logger = logging.getLogger(__name__)

# Rondas máximas de rechazo de ceros en la extracción en dos etapas
MAX_RECHAZOS = 10_000

# Puntos de soporte máximos en la inversión
MAX_SOPORTE_INVERSION = 10_000_000


@dataclass(frozen=True)
class Semilla:
    """
    Semilla reproducible: (master_seed, stream_id) determina la secuencia.

    Cada stream_id da un flujo independiente (SeedSequence con spawn_key).
    """
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        """Valida rangos."""
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError(f"master_seed debe ser un entero de 64 bits sin signo: {self.master_seed}")
        if self.stream_id < 0:
            raise ValueError(f"stream_id no puede ser negativo: {self.stream_id}")

    def generador(self) -> np.random.Generator:
        """Generator PCG64 del flujo."""
        secuencia = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(secuencia))

    def flujo(self, stream_id: int) -> 'Semilla':
        """Misma semilla maestra con otro flujo."""
        return Semilla(self.master_seed, stream_id)


def _extraer_base_sin_truncar(
    rng: np.random.Generator,
    familia: Familia,
    lam: np.ndarray,
    alpha: Optional[float]
) -> np.ndarray:
    """Extracciones de Poisson(λ) o NB(α, θ = λ/α) sin truncar."""
    if familia.base == Familia.PP:
        return rng.poisson(lam)
    return rng.poisson(rng.gamma(alpha, lam / alpha))


def _extraer_truncada(
    rng: np.random.Generator,
    familia: Familia,
    lam: np.ndarray,
    alpha: Optional[float]
) -> np.ndarray:
    """
    Extracciones de la base truncada en cero por rechazo de ceros.

    Raises:
        RuntimeError: Si tras MAX_RECHAZOS rondas quedan ceros (λ → 0)
    """
    y = _extraer_base_sin_truncar(rng, familia, lam, alpha)
    ceros = np.flatnonzero(y == 0)
    rondas = 0

    while ceros.size > 0:
        rondas += 1
        if rondas > MAX_RECHAZOS:
            raise RuntimeError(
                f"Rechazo de ceros superó {MAX_RECHAZOS} rondas "
                f"(min λ = {lam[ceros].min():.3g}); parámetros patológicos"
            )
        y[ceros] = _extraer_base_sin_truncar(rng, familia, lam[ceros], alpha)
        ceros = ceros[y[ceros] == 0]

    return y


def _extraer_por_inversion(
    rng: np.random.Generator,
    familia: Familia,
    lam: np.ndarray,
    alpha: Optional[float],
    omega: np.ndarray
) -> np.ndarray:
    """
    Inversión de la pmf inflada (útil cuando ω < 0).

    Raises:
        RuntimeError: Si se superan MAX_SOPORTE_INVERSION puntos de soporte
    """
    u = rng.random(lam.shape)
    f_uno = np.exp(log_f1(familia, lam, alpha))

    if familia.base == Familia.PP:
        def cociente(y: int) -> np.ndarray:
            return lam / (y + 1.0)
    else:
        razon = (lam / alpha) / (1.0 + lam / alpha)

        def cociente(y: int) -> np.ndarray:
            return (alpha + y) / (y + 1.0) * razon

    acumulada = omega + (1.0 - omega) * f_uno
    termino = (1.0 - omega) * f_uno  # (1 − ω) f(y) con y = 1
    resultado = np.ones(lam.shape, dtype=np.int64)
    pendiente = u > acumulada
    y = 1

    while pendiente.any():
        if y >= MAX_SOPORTE_INVERSION:
            raise RuntimeError(
                f"Inversión superó {MAX_SOPORTE_INVERSION} puntos de soporte; parámetros patológicos"
            )
        termino = termino * cociente(y)
        y += 1
        acumulada = acumulada + termino
        resultado[pendiente] = y

        # Cola agotada numéricamente: se asigna el último y
        agotada = (termino == 0) & (y > lam)
        pendiente = pendiente & (u > acumulada) & ~agotada

    return resultado


def sample(
    familia: Familia,
    params: Parametros,
    X: np.ndarray,
    Z: Optional[np.ndarray],
    semilla: Union[Semilla, np.random.Generator],
    omega: Optional[Union[float, np.ndarray]] = None
) -> np.ndarray:
    """
    Extrae y_i de la familia en (λ_i, ω_i, α) para cada fila.

    Args:
        familia: Familia del modelo
        params: Parámetros estructurales
        X: Matriz X con intercepto
        Z: Matriz Z con intercepto (familias infladas)
        semilla: Semilla del flujo o un Generator ya construido
        omega: ω explícito (por ejemplo 1.0); ignora γ y el enlace

    Returns:
        Vector de enteros >= 1 de longitud n

    Raises:
        ValueError: Dimensiones o parámetros inválidos
        RuntimeError: Si se supera algún tope del muestreo
    """
    X = np.asarray(X, dtype=float)
    p = np.asarray(Z).shape[1] if (Z is not None and familia.es_inflada) else None
    params.validar_para(familia, k=X.shape[1], p=p if omega is None else None)
    rng = semilla.generador() if isinstance(semilla, Semilla) else semilla
    alpha = params.alpha

    lam = tasas(X, params.beta)
    n = len(lam)

    if not familia.es_inflada:
        return _extraer_truncada(rng, familia, lam, alpha).astype(np.int64)

    if omega is not None:
        enlazados = enlazar(familia, lam, alpha, omega=np.broadcast_to(np.asarray(omega, dtype=float), (n,)))
    else:
        if Z is None:
            raise ValueError(f"{familia.etiqueta} requiere la matriz Z")
        enlazados = enlazar(familia, lam, alpha, eta=np.asarray(Z, dtype=float) @ params.gamma)
    enlazados.validar(familia)
    w = np.asarray(enlazados.omega, dtype=float)

    y = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    inflados = w >= 0

    dos_etapas = np.flatnonzero(inflados)
    if dos_etapas.size:
        uno = u[dos_etapas] < w[dos_etapas]
        y[dos_etapas[uno]] = 1
        resto = dos_etapas[~uno]
        if resto.size:
            y[resto] = _extraer_truncada(rng, familia, lam[resto], alpha)

    deflados = np.flatnonzero(~inflados)
    if deflados.size:
        y[deflados] = _extraer_por_inversion(rng, familia, lam[deflados], alpha, w[deflados])

    logger.debug(
        f"Muestra {familia.etiqueta}: n={n}, deflados={deflados.size}, "
        f"proporción de unos={np.mean(y == 1):.4f}"
    )
    return y
