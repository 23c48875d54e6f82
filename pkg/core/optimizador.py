"""
Optimizador cuasi-Newton y derivadas numéricas.

- numeric_gradient / numeric_hessian: diferencias centrales con paso
  h_j = escala × max(1, |θ_j|)
- minimizar: registro de métodos; por defecto BFGS de scipy con gradiente
  por diferencias centrales, reiniciado desde el último punto mientras la
  norma sup del gradiente no baje de la tolerancia
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

Objetivo = Callable[[np.ndarray], float]

# Valor devuelto al optimizador cuando el objetivo no es finito
PENALIZACION = 1e10


def pasos_diferencias(theta: np.ndarray, escala: float) -> np.ndarray:
    """h_j = escala × max(1, |θ_j|)."""
    return escala * np.maximum(1.0, np.abs(theta))


def numeric_gradient(
    f: Objetivo,
    theta: np.ndarray,
    escala: float,
    pasos: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Gradiente por diferencias centrales.

    Args:
        f: Función escalar
        theta: Punto de evaluación
        escala: Escala del paso (ignorada si se dan `pasos`)
        pasos: Pasos explícitos por coordenada

    Returns:
        Vector gradiente
    """
    theta = np.asarray(theta, dtype=float)
    h = pasos_diferencias(theta, escala) if pasos is None else np.asarray(pasos, dtype=float)
    gradiente = np.zeros_like(theta)

    for j in range(len(theta)):
        adelante = theta.copy()
        atras = theta.copy()
        adelante[j] += h[j]
        atras[j] -= h[j]
        gradiente[j] = (f(adelante) - f(atras)) / (2.0 * h[j])

    return gradiente


def numeric_hessian(
    f: Objetivo,
    theta: np.ndarray,
    escala: float,
    pasos: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Hessiana por segundas diferencias centrales.

    H_jj = [f(θ+h_j) − 2f(θ) + f(θ−h_j)] / h_j²
    H_jk = [f(++) − f(+−) − f(−+) + f(−−)] / (4 h_j h_k)

    Returns:
        Matriz simétrica (se promedian los elementos cruzados)
    """
    theta = np.asarray(theta, dtype=float)
    h = pasos_diferencias(theta, escala) if pasos is None else np.asarray(pasos, dtype=float)
    d = len(theta)
    hessiana = np.zeros((d, d))
    f0 = f(theta)

    def desplazado(j: int, sj: float, k: Optional[int] = None, sk: float = 0.0) -> float:
        punto = theta.copy()
        punto[j] += sj * h[j]
        if k is not None:
            punto[k] += sk * h[k]
        return f(punto)

    for j in range(d):
        hessiana[j, j] = (desplazado(j, 1.0) - 2.0 * f0 + desplazado(j, -1.0)) / h[j] ** 2
        for k in range(j + 1, d):
            valor = (
                desplazado(j, 1.0, k, 1.0)
                - desplazado(j, 1.0, k, -1.0)
                - desplazado(j, -1.0, k, 1.0)
                + desplazado(j, -1.0, k, -1.0)
            ) / (4.0 * h[j] * h[k])
            hessiana[j, k] = valor
            hessiana[k, j] = valor

    return hessiana


@dataclass
class ResultadoOptimizacion:
    """Resultado de una minimización."""
    x: np.ndarray
    valor: float
    gradiente: np.ndarray
    iteraciones: int
    convergio: bool
    mensaje: str

    @property
    def norma_gradiente(self) -> float:
        """Norma sup del gradiente final."""
        return float(np.max(np.abs(self.gradiente))) if self.gradiente.size else 0.0


def _minimizar_bfgs(
    objetivo: Objetivo,
    x0: np.ndarray,
    tolerancia: float,
    max_iteraciones: int,
    escala_paso: float,
    reinicios: int
) -> ResultadoOptimizacion:
    """
    BFGS con búsqueda lineal de Wolfe (condición de Armijo incluida).

    Cada reinicio arranca desde el último punto con la aproximación inicial
    de la inversa de la Hessiana reiniciada.
    """
    def acotado(theta: np.ndarray) -> float:
        valor = objetivo(theta)
        return valor if np.isfinite(valor) else PENALIZACION

    def gradiente(theta: np.ndarray) -> np.ndarray:
        return numeric_gradient(acotado, theta, escala_paso)

    x = np.asarray(x0, dtype=float)
    iteraciones = 0
    mensaje = ""

    for intento in range(reinicios + 1):
        restantes = max_iteraciones - iteraciones
        if restantes <= 0:
            break

        resultado = minimize(
            acotado,
            x,
            jac=gradiente,
            method='BFGS',
            options={'gtol': tolerancia, 'norm': np.inf, 'maxiter': restantes}
        )
        iteraciones += int(resultado.nit)
        mensaje = str(resultado.message)
        mejora = np.isfinite(resultado.fun) and resultado.fun <= acotado(x)
        if mejora:
            x = resultado.x

        norma = float(np.max(np.abs(gradiente(x))))
        logger.debug(
            f"BFGS intento {intento + 1}: f={resultado.fun:.10g}, "
            f"|g|={norma:.3g}, iteraciones={iteraciones} ({mensaje})"
        )
        if norma < tolerancia:
            break

    g = gradiente(x)
    convergio = bool(np.max(np.abs(g)) < tolerancia) if g.size else True
    if not convergio and iteraciones >= max_iteraciones:
        mensaje = f"Máximo de iteraciones alcanzado ({max_iteraciones})"

    return ResultadoOptimizacion(
        x=x,
        valor=acotado(x),
        gradiente=g,
        iteraciones=iteraciones,
        convergio=convergio,
        mensaje="Convergencia alcanzada" if convergio else mensaje
    )


# Registro de métodos de optimización
METODOS: Dict[str, Callable[..., ResultadoOptimizacion]] = {
    'bfgs': _minimizar_bfgs,
}


def minimizar(
    objetivo: Objetivo,
    x0: np.ndarray,
    metodo: str = 'bfgs',
    tolerancia: float = 1e-8,
    max_iteraciones: int = 1000,
    escala_paso: float = np.finfo(float).eps ** (1.0 / 3.0),
    reinicios: int = 3
) -> ResultadoOptimizacion:
    """
    Minimiza `objetivo` desde `x0` con el método registrado.

    Raises:
        ValueError: Si el método no está registrado o el objetivo no es finito en x0
    """
    if metodo not in METODOS:
        raise ValueError(f"Método '{metodo}' no registrado. Opciones: {list(METODOS)}")
    if not np.isfinite(objetivo(np.asarray(x0, dtype=float))):
        raise ValueError("El objetivo no es finito en el punto inicial")

    return METODOS[metodo](objetivo, x0, tolerancia, max_iteraciones, escala_paso, reinicios)
