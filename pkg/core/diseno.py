"""
Ingesta de datos y construcción de matrices de diseño.

- load_csv / save_csv: lectura y escritura de ConjuntoDatos
- build_design: valida la respuesta y arma X y Z con intercepto
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from models.datos import ConjuntoDatos, DatosDiseno, EspecificacionModelo, INTERCEPTO
from utils.loaders import get_loader

logger = logging.getLogger(__name__)


def load_csv(path: Union[str, Path]) -> ConjuntoDatos:
    """
    Carga un CSV numérico con encabezado.

    Raises:
        FileNotFoundError: Si el archivo no existe
        ValueError: Celdas no numéricas (indica fila y columna), filas irregulares o archivo vacío
    """
    return get_loader().cargar_dataset(path)


def save_csv(datos: ConjuntoDatos, path: Union[str, Path]) -> None:
    """Escribe un ConjuntoDatos como CSV con encabezado."""
    get_loader().guardar_dataset(datos, path)


def es_dummy(columna: np.ndarray) -> bool:
    """Una columna es dummy si todos sus valores están en {0, 1}."""
    return bool(np.all((columna == 0) | (columna == 1)))


def _validar_respuesta(y: np.ndarray, nombre: str) -> np.ndarray:
    """
    Verifica que la respuesta sea entera y >= 1.

    Raises:
        ValueError: Si hay ceros, negativos o valores no enteros
    """
    no_enteros = y != np.floor(y)
    if no_enteros.any():
        fila = int(np.argmax(no_enteros)) + 1
        raise ValueError(
            f"La respuesta '{nombre}' debe ser entera: fila {fila} tiene {y[fila - 1]}"
        )

    ceros = int(np.sum(y == 0))
    if ceros > 0:
        raise ValueError(
            f"La respuesta '{nombre}' tiene {ceros} cero(s): los datos no parecen "
            f"truncados en cero"
        )

    if np.any(y < 0):
        raise ValueError(f"La respuesta '{nombre}' tiene valores negativos")

    return y.astype(np.int64)


def _matriz(datos: ConjuntoDatos, terminos: List[str]) -> np.ndarray:
    """Matriz con columna de unos seguida de las columnas pedidas, en orden."""
    columnas = [np.ones(datos.n)] + [datos.columna(t) for t in terminos]
    return np.column_stack(columnas)


def build_design(spec: EspecificacionModelo, datos: ConjuntoDatos) -> DatosDiseno:
    """
    Construye la respuesta y las matrices X (y Z en familias infladas).

    Args:
        spec: Especificación del modelo
        datos: Conjunto de datos

    Returns:
        DatosDiseno con intercepto en la primera columna de X y Z

    Raises:
        ValueError: Columna desconocida o respuesta inválida
    """
    nombres = [spec.response] + list(spec.x_terms) + list(spec.z_terms) + list(spec.continuous)
    desconocidas = [n for n in dict.fromkeys(nombres) if n not in datos.column_names]
    if desconocidas:
        raise ValueError(
            f"Columnas desconocidas: {desconocidas}. Disponibles: {datos.column_names}"
        )

    y = _validar_respuesta(datos.columna(spec.response), spec.response)

    X = _matriz(datos, list(spec.x_terms))
    Z = _matriz(datos, list(spec.z_terms)) if spec.family.es_inflada else None

    dummy_flags: Dict[str, bool] = {
        nombre: (nombre not in spec.continuous) and es_dummy(datos.columna(nombre))
        for nombre in spec.regresores
    }

    dd = DatosDiseno(
        y=y,
        X=X,
        x_names=[INTERCEPTO] + list(spec.x_terms),
        Z=Z,
        z_names=[INTERCEPTO] + list(spec.z_terms) if Z is not None else [],
        dummy_flags=dummy_flags
    )

    logger.debug(
        f"Diseño {spec.family.etiqueta}: n={dd.n}, k={dd.k}, p={dd.p}, "
        f"dummies={[n for n, d in dummy_flags.items() if d]}"
    )
    return dd
