"""
Utilidades para cargar datos y configuración.

Este módulo centraliza toda la lógica de lectura de archivos:
- Conjuntos de datos CSV (solo numéricos, con encabezado)
- Configuración YAML del optimizador
- Archivos de configuración de simulación (YAML, JSON o clave=valor)
"""

import yaml
import pandas as pd
import numpy as np
from pathlib import Path
from typing import Dict, List, Any, Optional, Union
import logging

from models.datos import ConjuntoDatos

logger = logging.getLogger(__name__)

RutaArchivo = Union[str, Path]


class DataLoader:
    """
    Carga datos y configuraciones desde archivos.

    Esta clase es el punto central de lectura: los comandos y los motores
    reciben ConjuntoDatos y diccionarios, nunca rutas.
    """

    def __init__(self, base_path: Optional[Path] = None):
        """
        Inicializa el DataLoader.

        Args:
            base_path: Ruta base del proyecto. Si no se provee, se usa la raíz del repositorio.
        """
        if base_path is None:
            # Asume que estamos en la raíz del proyecto
            self.base_path = Path(__file__).parent.parent
        else:
            self.base_path = Path(base_path)

        logger.info(f"DataLoader inicializado con base_path: {self.base_path}")

    def _cargar_yaml(self, filepath: Path) -> Dict[str, Any]:
        """
        Carga un archivo YAML (también sirve para JSON).

        Args:
            filepath: Ruta al archivo YAML

        Returns:
            Diccionario con los datos cargados

        Raises:
            FileNotFoundError: Si el archivo no existe
            yaml.YAMLError: Si hay error al parsear el YAML
        """
        if not filepath.exists():
            raise FileNotFoundError(f"Archivo no encontrado: {filepath}")

        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
            logger.debug(f"Archivo cargado exitosamente: {filepath}")
            return data or {}
        except yaml.YAMLError as e:
            logger.error(f"Error al parsear YAML {filepath}: {e}")
            raise

    def _cargar_clave_valor(self, filepath: Path) -> Dict[str, Any]:
        """
        Carga un archivo plano de líneas `clave = valor`.

        Los valores se tipan con YAML; una lista puede escribirse como
        `beta = -2, 0.4, 0.2`. Se ignoran líneas vacías y comentarios (#).

        Raises:
            FileNotFoundError: Si el archivo no existe
            ValueError: Si una línea no tiene la forma clave=valor o repite clave
        """
        if not filepath.exists():
            raise FileNotFoundError(f"Archivo no encontrado: {filepath}")

        data: Dict[str, Any] = {}
        with open(filepath, 'r', encoding='utf-8') as f:
            for numero, linea in enumerate(f, start=1):
                linea = linea.split('#', 1)[0].strip()
                if not linea:
                    continue
                if '=' not in linea:
                    raise ValueError(f"{filepath}, línea {numero}: se esperaba 'clave = valor'")

                clave, valor = (parte.strip() for parte in linea.split('=', 1))
                if clave in data:
                    raise ValueError(f"{filepath}, línea {numero}: clave '{clave}' repetida")

                if ',' in valor and not valor.startswith('['):
                    data[clave] = [yaml.safe_load(v.strip()) for v in valor.split(',')]
                else:
                    data[clave] = yaml.safe_load(valor)

        return data

    # =========================================================================
    # CONJUNTOS DE DATOS
    # =========================================================================

    def cargar_dataset(self, filepath: RutaArchivo) -> ConjuntoDatos:
        """
        Carga un CSV numérico con encabezado.

        Args:
            filepath: Ruta al CSV (separado por comas, UTF-8, punto decimal)

        Returns:
            ConjuntoDatos con las columnas en el orden del archivo

        Raises:
            FileNotFoundError: Si el archivo no existe
            ValueError: Archivo vacío, filas irregulares, encabezado duplicado o celda no numérica
        """
        filepath = Path(filepath)
        if not filepath.exists():
            raise FileNotFoundError(f"Archivo no encontrado: {filepath}")

        try:
            encabezado = pd.read_csv(filepath, header=None, nrows=1, dtype=str, encoding='utf-8')
            tabla = pd.read_csv(filepath, dtype=str, na_filter=False, encoding='utf-8')
        except pd.errors.EmptyDataError:
            raise ValueError(f"Archivo vacío: {filepath}")
        except pd.errors.ParserError as e:
            raise ValueError(f"Fila con más campos que el encabezado en {filepath}: {e}")

        nombres = [str(n).strip() for n in encabezado.iloc[0].tolist()]
        if len(set(nombres)) != len(nombres):
            raise ValueError(f"Encabezado con columnas duplicadas en {filepath}: {nombres}")
        if tabla.empty:
            raise ValueError(f"El archivo {filepath} no tiene filas de datos")

        tabla.columns = nombres

        # Con na_filter=False solo quedan NaN donde la fila tiene menos campos
        faltantes = tabla.isna().any(axis=1)
        if faltantes.any():
            fila = int(np.argmax(faltantes.to_numpy())) + 1
            raise ValueError(
                f"Fila {fila} (línea {fila + 1} del archivo) tiene menos campos "
                f"que el encabezado en {filepath}"
            )

        columnas: List[np.ndarray] = []
        for nombre in nombres:
            texto = tabla[nombre].str.strip()
            valores = pd.to_numeric(texto, errors='coerce').to_numpy(dtype=float)
            invalidos = ~np.isfinite(valores)
            if invalidos.any():
                fila = int(np.argmax(invalidos)) + 1
                raise ValueError(
                    f"Valor no numérico '{texto.iloc[fila - 1]}' en fila {fila} "
                    f"(línea {fila + 1} del archivo), columna '{nombre}' de {filepath}"
                )
            columnas.append(valores)

        datos = ConjuntoDatos(column_names=nombres, columns=columnas)
        logger.info(f"Dataset cargado: {filepath} ({datos.n} filas, {len(nombres)} columnas)")
        return datos

    def guardar_dataset(self, datos: ConjuntoDatos, filepath: RutaArchivo) -> None:
        """
        Guarda un ConjuntoDatos como CSV.

        Las columnas con valores enteros se escriben sin parte decimal; el
        resto usa la representación de ida y vuelta de Python.
        """
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)

        tabla = pd.DataFrame({
            nombre: (
                columna.astype(np.int64)
                if np.all(columna == np.round(columna)) and np.all(np.abs(columna) < 2 ** 53)
                else columna
            )
            for nombre, columna in zip(datos.column_names, datos.columns)
        })
        tabla.to_csv(filepath, index=False, encoding='utf-8')
        logger.info(f"Dataset guardado: {filepath}")

    # =========================================================================
    # CONFIGURACIÓN
    # =========================================================================

    def cargar_opciones_ajuste(self) -> Dict[str, Any]:
        """Carga las opciones por defecto del optimizador."""
        filepath = self.base_path / 'config' / 'ajuste.yaml'
        return self._cargar_yaml(filepath)

    def cargar_config_simulacion(self, filepath: RutaArchivo) -> Dict[str, Any]:
        """
        Carga un archivo de configuración de simulación.

        Args:
            filepath: .yaml/.yml/.json se leen con YAML; cualquier otra extensión como clave=valor

        Returns:
            Diccionario plano con las claves del archivo
        """
        filepath = Path(filepath)
        if not filepath.is_absolute() and not filepath.exists():
            candidato = self.base_path / 'config' / filepath
            if candidato.exists():
                filepath = candidato

        if filepath.suffix.lower() in ('.yaml', '.yml', '.json'):
            data = self._cargar_yaml(filepath)
        else:
            data = self._cargar_clave_valor(filepath)

        if not isinstance(data, dict):
            raise ValueError(f"La configuración {filepath} debe ser un mapeo clave: valor")
        return data

    # =========================================================================
    # FIXTURES
    # =========================================================================

    def ruta_fixture(self, nombre: str) -> Path:
        """Ruta de un CSV de data/fixtures (puede no existir)."""
        return self.base_path / 'data' / 'fixtures' / f"{nombre}.csv"

    def listar_fixtures(self) -> List[str]:
        """
        Lista los fixtures disponibles.

        Returns:
            Nombres (sin extensión) de los CSV en data/fixtures
        """
        fixtures_path = self.base_path / 'data' / 'fixtures'
        if not fixtures_path.exists():
            return []

        fixtures = sorted(p.stem for p in fixtures_path.glob('*.csv'))
        logger.info(f"Fixtures encontrados: {fixtures}")
        return fixtures


# Instancia global del loader (singleton pattern)
_loader_instance = None


def get_loader() -> DataLoader:
    """
    Obtiene la instancia global del DataLoader.

    Returns:
        Instancia de DataLoader
    """
    global _loader_instance
    if _loader_instance is None:
        _loader_instance = DataLoader()
    return _loader_instance


# Funciones de conveniencia
def cargar_dataset(filepath: RutaArchivo) -> ConjuntoDatos:
    """Función de conveniencia para cargar un CSV."""
    return get_loader().cargar_dataset(filepath)


def cargar_opciones_ajuste() -> Dict[str, Any]:
    """Función de conveniencia para cargar las opciones del optimizador."""
    return get_loader().cargar_opciones_ajuste()
