"""
Exportador de Reportes en Texto, JSON y CSV.

Genera tablas alineadas con estrellas de significancia al 1% (***),
5% (**) y 10% (*), el JSON de cada reporte y sus versiones CSV.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.efectos_marginales import EfectosMarginales
from core.inferencia import ResultadoPrueba, TablaResumen
from core.simulator import TablaSesgos

logger = logging.getLogger(__name__)

RutaSalida = Union[str, Path]

FORMATOS = ('text', 'json', 'csv')

NIVELES_ESTRELLAS = ((0.01, '***'), (0.05, '**'), (0.10, '*'))


def estrellas(p: Optional[float]) -> str:
    """Estrellas de significancia para un p-valor (vacío si no hay p)."""
    if p is None or not math.isfinite(p):
        return ''
    for nivel, marca in NIVELES_ESTRELLAS:
        if p < nivel:
            return marca
    return ''


def _num(valor: Optional[float], decimales: int = 3) -> str:
    if valor is None or not math.isfinite(valor):
        return '-'
    return f"{valor:.{decimales}f}"


def _tabla(encabezados: Sequence[str], filas: List[Sequence[str]]) -> str:
    """Columnas alineadas: la primera a la izquierda, el resto a la derecha."""
    anchos = [
        max(len(str(celda)) for celda in [encabezado] + [fila[j] for fila in filas])
        for j, encabezado in enumerate(encabezados)
    ]

    def linea(celdas: Sequence[str]) -> str:
        partes = [str(celdas[0]).ljust(anchos[0])]
        partes += [str(c).rjust(a) for c, a in zip(celdas[1:], anchos[1:])]
        return '  '.join(partes).rstrip()

    separador = '-' * len(linea(encabezados))
    return '\n'.join([linea(encabezados), separador] + [linea(f) for f in filas])


# =============================================================================
# TEXTO
# =============================================================================

def formatear_resumen(tabla: TablaResumen) -> str:
    """Tabla de coeficientes con errores estándar y estrellas."""
    filas = [
        [
            f.nombre,
            f"{_num(f.estimacion)}{estrellas(f.p)}",
            _num(f.error_estandar),
            _num(f.z, 2),
            _num(f.p)
        ]
        for f in tabla.filas
    ]
    lineas = [
        f"Modelo: {tabla.familia}   n = {tabla.n}   "
        f"log-verosimilitud = {tabla.loglik:.4f}   convergió: {'sí' if tabla.converged else 'no'}",
        '',
        _tabla(['Parámetro', 'Estimación', 'Error est.', 'z', 'p'], filas)
    ]
    if tabla.avg_one_inflation is not None:
        lineas += [
            '',
            f"Inflación de unos promedio: {100 * tabla.avg_one_inflation:.1f}%",
            f"Inflación de unos promedio absoluta: {100 * tabla.avg_abs_one_inflation:.1f}%"
        ]
    lineas += _pie(tabla.advertencias)
    return '\n'.join(lineas) + '\n'


def formatear_efectos(efectos: EfectosMarginales) -> str:
    """Tabla de efectos marginales."""
    filas = [
        [
            f.nombre,
            f.tipo,
            f"{_num(f.efecto)}{estrellas(f.p)}",
            _num(f.error_estandar),
            _num(f.z, 2),
            _num(f.p)
        ]
        for f in efectos.filas
    ]
    lineas = [
        f"Efectos marginales: {efectos.familia} ({efectos.agregacion})",
        '',
        _tabla(['Regresor', 'Tipo', 'Efecto', 'Error est.', 'z', 'p'], filas)
    ]
    lineas += _pie(efectos.advertencias)
    return '\n'.join(lineas) + '\n'


def formatear_pruebas(pruebas: List[ResultadoPrueba]) -> str:
    """Pruebas de no inflación de unos."""
    filas = [[r.method, _num(r.statistic), str(r.dof), _num(r.p_value, 4)] for r in pruebas]
    lineas = [
        'Pruebas de no inflación de unos (H0: gamma = 0)',
        '',
        _tabla(['Prueba', 'Estadístico', 'gl', 'p'], filas)
    ]
    notas = [nota for r in pruebas for nota in r.notas]
    lineas += _pie(notas)
    return '\n'.join(lineas) + '\n'


def formatear_sesgos(tabla: TablaSesgos) -> str:
    """Sesgos porcentuales: filas (familia, n), columnas de parámetros."""
    ancha = tabla.tabla_ancha()
    encabezados = ['Modelo', 'n'] + list(ancha.columns)
    filas = [
        [familia, str(n)] + [_num(v, 2) for v in valores]
        for (familia, n), valores in zip(ancha.index, ancha.to_numpy())
    ]
    lineas = [
        'Sesgo porcentual de los estimadores de máxima verosimilitud',
        '',
        _tabla(encabezados, filas),
        ''
    ]
    for n, omega in tabla.omega_promedio.items():
        lineas.append(f"n = {n}: inflación de unos promedio del proceso generador = {100 * omega:.2f}%")

    excluidas = tabla.filas.drop_duplicates(['familia', 'n'])
    for _, fila in excluidas[excluidas['excluidas'] > 0].iterrows():
        lineas.append(f"{fila['familia']}, n = {fila['n']}: {fila['excluidas']} réplica(s) excluida(s)")
    return '\n'.join(lineas) + '\n'


def formatear_conteos(conteos: pd.DataFrame) -> str:
    """Frecuencias observadas y conteos predichos por y."""
    encabezados = ['y'] + list(conteos.columns)
    filas = [[str(y)] + [_num(v, 2) for v in valores] for y, valores in zip(conteos.index, conteos.to_numpy())]
    return _tabla(encabezados, filas) + '\n'


def _pie(advertencias: List[str]) -> List[str]:
    lineas = ['', 'Significancia al 1% (***), 5% (**) y 10% (*).']
    lineas += [f"Advertencia: {a}" for a in advertencias]
    return lineas


# =============================================================================
# JSON Y CSV
# =============================================================================

def _nativo(valor: Any) -> Any:
    """Tipos nativos de Python; los no finitos pasan a None."""
    if isinstance(valor, dict):
        return {str(k): _nativo(v) for k, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_nativo(v) for v in valor]
    if isinstance(valor, np.ndarray):
        return [_nativo(v) for v in valor.tolist()]
    if isinstance(valor, (bool, np.bool_)):
        return bool(valor)
    if isinstance(valor, (int, np.integer)):
        return int(valor)
    if isinstance(valor, (float, np.floating)):
        return float(valor) if math.isfinite(valor) else None
    return valor


def a_json(datos: Dict[str, Any]) -> str:
    """JSON determinista (orden de inserción, indentado)."""
    return json.dumps(_nativo(datos), indent=2, ensure_ascii=False) + '\n'


def resumen_a_csv(tabla: TablaResumen) -> str:
    df = pd.DataFrame(
        [[f.nombre, f.estimacion, f.error_estandar, f.z, f.p] for f in tabla.filas],
        columns=['parametro', 'estimacion', 'error_estandar', 'z', 'p']
    )
    return df.to_csv(index=False, lineterminator='\n')


def efectos_a_csv(efectos: EfectosMarginales) -> str:
    df = pd.DataFrame(
        [[f.nombre, f.tipo, f.efecto, f.error_estandar, f.z, f.p] for f in efectos.filas],
        columns=['regresor', 'tipo', 'efecto', 'error_estandar', 'z', 'p']
    )
    return df.to_csv(index=False, lineterminator='\n')


def pruebas_a_csv(pruebas: List[ResultadoPrueba]) -> str:
    df = pd.DataFrame(
        [[r.method, r.statistic, r.dof, r.p_value] for r in pruebas],
        columns=['prueba', 'estadistico', 'gl', 'p']
    )
    return df.to_csv(index=False, lineterminator='\n')


def sesgos_a_csv(tabla: TablaSesgos) -> str:
    return tabla.filas.to_csv(index=False, lineterminator='\n')


def conteos_a_csv(conteos: pd.DataFrame) -> str:
    return conteos.to_csv(index=True, lineterminator='\n')


def escribir(contenido: str, ruta: Optional[RutaSalida] = None) -> None:
    """
    Escribe el reporte en `ruta` o en stdout si es None.

    Args:
        contenido: Texto del reporte
        ruta: Archivo de salida (se crean los directorios faltantes)
    """
    if ruta is None:
        print(contenido, end='')
        return
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text(contenido, encoding='utf-8')
    logger.info(f"Reporte escrito en {ruta}")
