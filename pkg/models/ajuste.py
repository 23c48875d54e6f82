"""
Modelo de Ajuste.

Opciones del optimizador y resultado de un ajuste por máxima verosimilitud.
"""

from dataclasses import dataclass, field
from typing import Optional, Dict, Any, List
import hashlib

import numpy as np

from models.datos import DatosDiseno, EspecificacionModelo
from models.familia import Familia, Parametros

EPS_MAQUINA = float(np.finfo(float).eps)


@dataclass
class OpcionesAjuste:
    """
    Opciones del optimizador.

    - gradient_tolerance: norma sup del gradiente (de ℓ/n) para declarar convergencia
    - max_iterations: None equivale a 200 × número de parámetros
    - fd_step_scale: escala del paso de diferencias centrales del gradiente
    - hessian_step_scale: escala del paso de la Hessiana numérica
    - warm_start: valores iniciales explícitos
    - nested_warm_start: ajustar primero el modelo base en familias infladas
    - method: clave del registro de optimizadores
    - max_restarts: reinicios de BFGS desde el último punto si no converge
    - condition_limit: número de condición máximo para invertir la Hessiana
    - allow_pinv: usar pseudo-inversa si la Hessiana es singular
    """
    gradient_tolerance: float = 1e-8
    max_iterations: Optional[int] = None
    fd_step_scale: float = EPS_MAQUINA ** (1.0 / 3.0)
    hessian_step_scale: float = EPS_MAQUINA ** 0.25
    warm_start: Optional[Parametros] = None
    nested_warm_start: bool = True
    method: str = "bfgs"
    max_restarts: int = 3
    condition_limit: float = 1e12
    allow_pinv: bool = False

    def __post_init__(self):
        """Valida que las cantidades sean positivas."""
        for nombre in ('gradient_tolerance', 'fd_step_scale', 'hessian_step_scale', 'condition_limit'):
            valor = getattr(self, nombre)
            if not np.isfinite(valor) or valor <= 0:
                raise ValueError(f"{nombre} debe ser positivo, se recibió {valor}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations debe ser positivo, se recibió {self.max_iterations}")
        if self.max_restarts < 0:
            raise ValueError(f"max_restarts no puede ser negativo, se recibió {self.max_restarts}")

    def iteraciones_para(self, dimension: int) -> int:
        """Límite de iteraciones efectivo para un modelo de `dimension` parámetros."""
        return self.max_iterations if self.max_iterations is not None else 200 * dimension

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> 'OpcionesAjuste':
        """
        Crea OpcionesAjuste desde el contenido de config/ajuste.yaml.

        Las claves ausentes o nulas toman el valor por defecto.
        """
        optimizador = config.get('optimizador', {}) or {}
        inferencia = config.get('inferencia', {}) or {}

        valores = {
            'gradient_tolerance': optimizador.get('tolerancia_gradiente'),
            'max_iterations': optimizador.get('max_iteraciones'),
            'fd_step_scale': optimizador.get('escala_paso_gradiente'),
            'hessian_step_scale': optimizador.get('escala_paso_hessiana'),
            'nested_warm_start': optimizador.get('arranque_anidado'),
            'method': optimizador.get('metodo'),
            'max_restarts': optimizador.get('reinicios'),
            'condition_limit': inferencia.get('limite_condicion'),
            'allow_pinv': inferencia.get('permitir_pseudoinversa'),
        }
        return cls(**{k: v for k, v in valores.items() if v is not None})


def huella_datos(dd: DatosDiseno) -> str:
    """Resumen SHA-1 de y y X; identifica 'los mismos datos' entre ajustes."""
    h = hashlib.sha1()
    h.update(np.ascontiguousarray(dd.y).tobytes())
    h.update(np.ascontiguousarray(dd.X).tobytes())
    return h.hexdigest()


@dataclass
class ModeloAjustado:
    """
    Resultado de un ajuste por máxima verosimilitud.

    `loglik` es ℓ total en el óptimo; `varcov` está en los parámetros
    naturales (β, γ, α) y es None si la Hessiana no pudo invertirse.
    """
    spec: EspecificacionModelo
    estimates: Parametros
    loglik: float
    varcov: Optional[np.ndarray]
    converged: bool
    iterations: int
    n: int
    param_names: List[str] = field(default_factory=list)
    grad_norm: float = float('nan')
    mensaje: str = ""
    advertencias: List[str] = field(default_factory=list)
    huella: str = ""

    @property
    def familia(self) -> Familia:
        """Familia del modelo ajustado."""
        return self.spec.family

    @property
    def varcov_disponible(self) -> bool:
        """Verifica si hay matriz de varianzas-covarianzas."""
        return self.varcov is not None

    @property
    def errores_estandar(self) -> Optional[np.ndarray]:
        """Raíces de la diagonal de varcov (NaN donde la diagonal es negativa)."""
        if self.varcov is None:
            return None
        diagonal = np.diag(self.varcov)
        with np.errstate(invalid='ignore'):
            return np.where(diagonal >= 0, np.sqrt(np.abs(diagonal)), np.nan)

    def indice(self, nombre: str) -> int:
        """
        Posición de un parámetro (por ejemplo 'beta:died') en el vector apilado.

        Raises:
            ValueError: Si el nombre no existe
        """
        try:
            return self.param_names.index(nombre)
        except ValueError:
            raise ValueError(f"Parámetro '{nombre}' no existe. Disponibles: {self.param_names}")

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'spec': self.spec.to_dict(),
            'estimates': self.estimates.to_dict(),
            'loglik': self.loglik,
            'varcov': self.varcov.tolist() if self.varcov is not None else None,
            'converged': self.converged,
            'iterations': self.iterations,
            'n': self.n,
            'param_names': self.param_names,
            'grad_norm': self.grad_norm,
            'mensaje': self.mensaje,
            'advertencias': self.advertencias
        }
