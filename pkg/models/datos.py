"""
Modelo de Datos.

Contiene los contenedores de datos del sistema:
- ConjuntoDatos: columnas numéricas validadas leídas de un CSV
- EspecificacionModelo: familia, respuesta y regresores de X y Z
- DatosDiseno: respuesta y matrices de diseño listas para estimar
"""

from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional, Tuple

import numpy as np

from models.familia import Familia

INTERCEPTO = "(Intercept)"


@dataclass
class ConjuntoDatos:
    """
    Conjunto de datos numérico con columnas de igual longitud.

    Inmutable en la práctica: las columnas se copian al construir.
    """
    column_names: List[str]
    columns: List[np.ndarray]

    def __post_init__(self):
        """Valida longitudes, duplicados y valores finitos."""
        if len(self.column_names) != len(self.columns):
            raise ValueError(
                f"{len(self.column_names)} nombres para {len(self.columns)} columnas"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError(f"Nombres de columna duplicados: {self.column_names}")

        self.columns = [np.array(c, dtype=float) for c in self.columns]
        longitudes = {len(c) for c in self.columns}
        if len(longitudes) > 1:
            raise ValueError(f"Columnas de distinta longitud: {sorted(longitudes)}")

        for nombre, columna in zip(self.column_names, self.columns):
            if np.any(~np.isfinite(columna)):
                raise ValueError(f"La columna '{nombre}' tiene valores faltantes o no finitos")

    @property
    def n(self) -> int:
        """Número de filas."""
        return len(self.columns[0]) if self.columns else 0

    def columna(self, nombre: str) -> np.ndarray:
        """
        Obtiene una columna por nombre.

        Raises:
            ValueError: Si la columna no existe
        """
        try:
            return self.columns[self.column_names.index(nombre)]
        except ValueError:
            raise ValueError(
                f"Columna '{nombre}' no encontrada. Disponibles: {self.column_names}"
            )

    def to_dict(self) -> Dict[str, List[float]]:
        """Convierte a diccionario nombre -> valores."""
        return {n: c.tolist() for n, c in zip(self.column_names, self.columns)}


@dataclass
class EspecificacionModelo:
    """Especificación de un modelo: familia, respuesta y regresores."""
    family: Familia
    response: str
    x_terms: Tuple[str, ...] = ()
    z_terms: Tuple[str, ...] = ()
    # Columnas que el usuario fuerza a tratar como continuas
    continuous: Tuple[str, ...] = ()

    def __post_init__(self):
        """Normaliza listas a tuplas y valida la regla de familia."""
        self.x_terms = tuple(self.x_terms)
        self.z_terms = tuple(self.z_terms)
        self.continuous = tuple(self.continuous)

        if self.family.es_inflada and not self.z_terms:
            raise ValueError(f"La familia {self.family.etiqueta} requiere regresores en z_terms")
        if not self.family.es_inflada and self.z_terms:
            raise ValueError(f"La familia {self.family.etiqueta} no admite z_terms")

    @property
    def regresores(self) -> List[str]:
        """Regresores sin repetir: primero los de X, luego los exclusivos de Z."""
        vistos = list(self.x_terms)
        vistos += [t for t in self.z_terms if t not in self.x_terms]
        return vistos

    def con_familia(self, familia: Familia) -> 'EspecificacionModelo':
        """
        Devuelve la misma especificación para otra familia.

        Al pasar a una familia base se descarta Z; al pasar a una inflada se
        usa Z = X si no había z_terms.
        """
        z_terms = self.z_terms if familia.es_inflada else ()
        if familia.es_inflada and not z_terms:
            z_terms = self.x_terms
        return EspecificacionModelo(
            family=familia,
            response=self.response,
            x_terms=self.x_terms,
            z_terms=z_terms,
            continuous=self.continuous
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'family': self.family.value,
            'response': self.response,
            'x_terms': list(self.x_terms),
            'z_terms': list(self.z_terms),
            'continuous': list(self.continuous)
        }


@dataclass
class DatosDiseno:
    """
    Respuesta y matrices de diseño validadas.

    X y Z llevan el intercepto en la primera columna. `ones_mask` es el
    indicador I_1 (y_i == 1) de las log-verosimilitudes.
    """
    y: np.ndarray
    X: np.ndarray
    x_names: List[str]
    Z: Optional[np.ndarray] = None
    z_names: List[str] = field(default_factory=list)
    dummy_flags: Dict[str, bool] = field(default_factory=dict)
    ones_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        """Calcula la máscara de unos y valida dimensiones."""
        self.y = np.asarray(self.y, dtype=np.int64)
        self.X = np.asarray(self.X, dtype=float)
        if self.Z is not None:
            self.Z = np.asarray(self.Z, dtype=float)

        if self.X.shape[0] != len(self.y):
            raise ValueError(f"X tiene {self.X.shape[0]} filas y y tiene {len(self.y)}")
        if self.Z is not None and self.Z.shape[0] != len(self.y):
            raise ValueError(f"Z tiene {self.Z.shape[0]} filas y y tiene {len(self.y)}")
        if np.any(self.y < 1):
            raise ValueError("La respuesta debe ser >= 1 en todas las filas")

        self.ones_mask = self.y == 1

    @property
    def n(self) -> int:
        """Tamaño muestral."""
        return len(self.y)

    @property
    def k(self) -> int:
        """Columnas de X (incluye intercepto)."""
        return self.X.shape[1]

    @property
    def p(self) -> int:
        """Columnas de Z (0 si no hay Z)."""
        return self.Z.shape[1] if self.Z is not None else 0
