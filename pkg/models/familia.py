"""
Modelo de Familia y Parámetros.

Define las cuatro familias de conteo truncadas en cero que soporta el sistema
y los contenedores de parámetros estructurales (β, γ, α) y enlazados
(λ_i, θ, L_i, ω_i).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Dict, Any, List, Sequence

import numpy as np


class Familia(Enum):
    """Familia de la distribución de conteo."""
    PP = "pp"  # Poisson positiva
    ZTNB = "ztnb"  # Binomial negativa truncada en cero
    OIPP = "oipp"  # Poisson positiva inflada en uno
    OIZTNB = "oiztnb"  # Binomial negativa truncada en cero inflada en uno

    @property
    def es_inflada(self) -> bool:
        """Verifica si la familia tiene parámetro de inflación en uno (ω)."""
        return self in (Familia.OIPP, Familia.OIZTNB)

    @property
    def usa_alpha(self) -> bool:
        """Verifica si la familia tiene parámetro de dispersión (α)."""
        return self in (Familia.ZTNB, Familia.OIZTNB)

    @property
    def base(self) -> 'Familia':
        """Familia truncada subyacente (sin inflación en uno)."""
        if self == Familia.OIPP:
            return Familia.PP
        if self == Familia.OIZTNB:
            return Familia.ZTNB
        return self

    @property
    def inflada(self) -> 'Familia':
        """Familia inflada en uno que anida a esta familia."""
        if self == Familia.PP:
            return Familia.OIPP
        if self == Familia.ZTNB:
            return Familia.OIZTNB
        return self

    @property
    def etiqueta(self) -> str:
        """Nombre corto en mayúsculas (para reportes)."""
        return self.name

    @classmethod
    def desde_texto(cls, texto: str) -> 'Familia':
        """
        Convierte un texto ('pp', 'OIZTNB', ...) en Familia.

        Raises:
            ValueError: Si el texto no corresponde a ninguna familia
        """
        try:
            return cls(texto.strip().lower())
        except ValueError:
            opciones = [f.value for f in cls]
            raise ValueError(f"Familia '{texto}' no válida. Opciones: {opciones}")


def _como_vector(valor: Any, nombre: str) -> np.ndarray:
    vector = np.atleast_1d(np.asarray(valor, dtype=float))
    if vector.ndim != 1:
        raise ValueError(f"'{nombre}' debe ser un vector, se recibió forma {vector.shape}")
    return vector


@dataclass
class Parametros:
    """
    Parámetros estructurales de un modelo.

    - beta: coeficientes del enlace de la media (primer elemento = intercepto)
    - gamma: coeficientes del enlace de inflación (solo familias infladas)
    - alpha: dispersión de la binomial negativa (solo ZTNB/OIZTNB)
    """
    beta: np.ndarray
    gamma: Optional[np.ndarray] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        """Normaliza tipos y valida α."""
        self.beta = _como_vector(self.beta, 'beta')
        if self.gamma is not None:
            self.gamma = _como_vector(self.gamma, 'gamma')
        if self.alpha is not None:
            self.alpha = float(self.alpha)
            if not np.isfinite(self.alpha) or self.alpha <= 0:
                raise ValueError(f"alpha debe ser positivo y finito, se recibió {self.alpha}")

    def validar_para(
        self,
        familia: Familia,
        k: Optional[int] = None,
        p: Optional[int] = None
    ) -> None:
        """
        Verifica que los parámetros sean consistentes con la familia.

        Args:
            familia: Familia del modelo
            k: Columnas esperadas de X (opcional)
            p: Columnas esperadas de Z (opcional)

        Raises:
            ValueError: Si falta o sobra γ/α, o las longitudes no coinciden
        """
        if familia.es_inflada and self.gamma is None:
            raise ValueError(f"La familia {familia.etiqueta} requiere gamma")
        if not familia.es_inflada and self.gamma is not None:
            raise ValueError(f"La familia {familia.etiqueta} no admite gamma")
        if familia.usa_alpha and self.alpha is None:
            raise ValueError(f"La familia {familia.etiqueta} requiere alpha")
        if not familia.usa_alpha and self.alpha is not None:
            raise ValueError(f"La familia {familia.etiqueta} no admite alpha")

        if k is not None and len(self.beta) != k:
            raise ValueError(f"beta tiene longitud {len(self.beta)}, X tiene {k} columnas")
        if p is not None and self.gamma is not None and len(self.gamma) != p:
            raise ValueError(f"gamma tiene longitud {len(self.gamma)}, Z tiene {p} columnas")

    @property
    def dimension(self) -> int:
        """Número total de parámetros libres."""
        return (
            len(self.beta)
            + (len(self.gamma) if self.gamma is not None else 0)
            + (1 if self.alpha is not None else 0)
        )

    def to_vector(self, log_alpha: bool = False) -> np.ndarray:
        """
        Apila (β, γ, α) en un solo vector.

        Args:
            log_alpha: Si True, el último elemento es log(α) (parametrización interna del optimizador)
        """
        partes = [self.beta]
        if self.gamma is not None:
            partes.append(self.gamma)
        if self.alpha is not None:
            partes.append(np.array([np.log(self.alpha) if log_alpha else self.alpha]))
        return np.concatenate(partes)

    @classmethod
    def from_vector(
        cls,
        familia: Familia,
        vector: Sequence[float],
        k: int,
        p: int = 0,
        log_alpha: bool = False
    ) -> 'Parametros':
        """
        Reconstruye Parametros desde un vector apilado.

        Args:
            familia: Familia del modelo (define si hay γ y α)
            vector: Vector (β, γ, α)
            k: Longitud de β
            p: Longitud de γ (0 si la familia no es inflada)
            log_alpha: Si el último elemento está en escala logarítmica
        """
        vector = np.asarray(vector, dtype=float)
        esperado = k + (p if familia.es_inflada else 0) + (1 if familia.usa_alpha else 0)
        if len(vector) != esperado:
            raise ValueError(
                f"Vector de longitud {len(vector)} no coincide con {familia.etiqueta} "
                f"(k={k}, p={p}): se esperaban {esperado}"
            )

        beta = vector[:k]
        gamma = vector[k:k + p] if familia.es_inflada else None
        alpha = None
        if familia.usa_alpha:
            alpha = float(np.exp(vector[-1])) if log_alpha else float(vector[-1])
        return cls(beta=beta, gamma=gamma, alpha=alpha)

    def nombres(self, x_names: List[str], z_names: Optional[List[str]] = None) -> List[str]:
        """Nombres de los parámetros en el orden de `to_vector`."""
        nombres = [f"beta:{n}" for n in x_names]
        if self.gamma is not None:
            nombres += [f"gamma:{n}" for n in (z_names or [])]
        if self.alpha is not None:
            nombres.append("alpha")
        return nombres

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'beta': self.beta.tolist(),
            'gamma': self.gamma.tolist() if self.gamma is not None else None,
            'alpha': self.alpha
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Parametros':
        """Crea Parametros desde un diccionario."""
        return cls(
            beta=data['beta'],
            gamma=data.get('gamma'),
            alpha=data.get('alpha')
        )


@dataclass
class ParametrosEnlazados:
    """
    Transformaciones por observación de los parámetros estructurales.

    θ se deriva siempre como λ/α; L y ω solo existen en familias infladas.
    Todos los campos pueden ser escalares o vectores de igual longitud.

    `eta` (Z_iγ) solo está presente cuando ω salió del enlace logístico; en
    ese caso las log-probabilidades usan la forma exacta en η.
    """
    lam: np.ndarray
    theta: Optional[np.ndarray] = None
    lower_bound: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None

    def validar(self, familia: Familia) -> None:
        """
        Verifica consistencia con la familia y rangos válidos.

        Raises:
            ValueError: Si los campos no corresponden a la familia o están fuera de rango
        """
        lam = np.asarray(self.lam, dtype=float)
        if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("lambda debe ser positivo y finito")

        if familia.usa_alpha:
            if self.theta is None:
                raise ValueError(f"{familia.etiqueta} requiere theta")
            theta = np.asarray(self.theta, dtype=float)
            if np.any(~np.isfinite(theta)) or np.any(theta <= 0):
                raise ValueError("theta debe ser positivo y finito")

        if familia.es_inflada:
            if self.omega is None or self.lower_bound is None:
                raise ValueError(f"{familia.etiqueta} requiere omega y lower_bound")
            omega = np.asarray(self.omega, dtype=float)
            cota = np.asarray(self.lower_bound, dtype=float)
            # Se admite ω = 1 explícito (masa puntual en y=1)
            if np.any(omega < cota) or np.any(omega > 1):
                raise ValueError("omega fuera del intervalo [L, 1]")
        elif self.omega is not None:
            raise ValueError(f"{familia.etiqueta} no admite omega")
