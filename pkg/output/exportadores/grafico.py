"""
Exportador del Gráfico de Conteos.

Barras agrupadas por y: frecuencia observada y conteos predichos por
cada familia ajustada, en SVG estático y reproducible.
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

COLORES = ['#4ECDC4', '#FF6B6B', '#556270', '#C7F464', '#FFA500']

# Sal fija para que los identificadores internos del SVG sean deterministas
SAL_SVG = 'conteos'


def graficar_conteos(conteos: pd.DataFrame, ruta: Union[str, Path]) -> Path:
    """
    Escribe el gráfico de barras agrupadas en SVG.

    Cada barra lleva un gid "<serie>-<y>" para poder leer su altura del SVG.

    Args:
        conteos: DataFrame indexado por y con la columna 'observado' y una
                 columna de conteos predichos por familia
        ruta: Archivo SVG de salida

    Returns:
        Ruta escrita
    """
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)

    series = list(conteos.columns)
    y = np.asarray(conteos.index, dtype=int)
    ancho = 0.8 / max(len(series), 1)

    with plt.rc_context({'svg.hashsalt': SAL_SVG, 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=(10, 6))
        for j, serie in enumerate(series):
            desplazamiento = (j - (len(series) - 1) / 2.0) * ancho
            barras = ax.bar(
                y + desplazamiento,
                conteos[serie].to_numpy(dtype=float),
                width=ancho,
                label=serie,
                color=COLORES[j % len(COLORES)]
            )
            for valor_y, barra in zip(y, barras):
                barra.set_gid(f"{serie}-{valor_y}")

        ax.set_xlabel('y')
        ax.set_ylabel('Conteo')
        ax.set_xticks(y)
        ax.legend()
        fig.tight_layout()
        fig.savefig(ruta, format='svg', metadata={'Date': None})
        plt.close(fig)

    logger.info(f"Gráfico escrito en {ruta}")
    return ruta
