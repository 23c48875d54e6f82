"""
Comandos de la línea de comandos.

Cada comando define `help`, `add_arguments(parser)` y `handle(opciones)`,
que devuelve el código de salida:
- 0: éxito
- 1: error de entrada (archivo, columnas, configuración)
- 2: el ajuste no convergió (el reporte se escribe igual)
"""

import logging
import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type

import numpy as np
import pandas as pd

from core.diseno import build_design, load_csv
from core.efectos_marginales import Agregacion, margins
from core.estimador import maximize, predicted_counts
from core.inferencia import ResultadoPrueba, one_lrt, one_wald, summarize
from core.simulator import ConfiguracionSimulacion, Simulator
from models.ajuste import ModeloAjustado
from models.datos import ConjuntoDatos, DatosDiseno, EspecificacionModelo
from models.familia import Familia
from output.exportadores import texto
from output.exportadores.grafico import graficar_conteos

logger = logging.getLogger(__name__)

EXITO = 0
ERROR_ENTRADA = 1
NO_CONVERGIO = 2


def lista_terminos(valor: str) -> Tuple[str, ...]:
    """'a,b,c' -> ('a', 'b', 'c'); la cadena vacía da una tupla vacía."""
    return tuple(t.strip() for t in valor.split(',') if t.strip())


class Comando:
    """Base de los comandos: mensajes de estado a stderr, reporte a stdout o --out."""
    help = ''

    def add_arguments(self, parser: ArgumentParser) -> None:
        pass

    def handle(self, opciones: Namespace) -> int:
        raise NotImplementedError

    def exito(self, mensaje: str) -> None:
        sys.stderr.write(f"✅ {mensaje}\n")

    def error(self, mensaje: str) -> None:
        sys.stderr.write(f"❌ {mensaje}\n")


class ComandoModelo(Comando):
    """Comandos que cargan un CSV y ajustan un modelo."""

    def add_arguments(self, parser: ArgumentParser) -> None:
        parser.add_argument('--data', required=True, help='CSV con encabezado y solo columnas numéricas')
        parser.add_argument(
            '--family',
            required=True,
            choices=[f.value for f in Familia],
            help='Familia del modelo'
        )
        parser.add_argument('--response', required=True, help='Columna de conteos (y >= 1)')
        parser.add_argument('--x', type=lista_terminos, default=(), help='Regresores de la media: a,b,c')
        parser.add_argument('--z', type=lista_terminos, default=(), help='Regresores de la inflación: a,b,c')
        parser.add_argument(
            '--continuous',
            action='append',
            default=[],
            help='Columna 0/1 a tratar como continua (repetible)'
        )
        parser.add_argument('--format', choices=texto.FORMATOS, default='text', help='Formato del reporte')
        parser.add_argument('--out', default=None, help='Archivo de salida (por defecto stdout)')

    def especificacion(self, opciones: Namespace, familia: Optional[Familia] = None) -> EspecificacionModelo:
        familia = familia or Familia.desde_texto(opciones.family)
        return EspecificacionModelo(
            family=familia,
            response=opciones.response,
            x_terms=opciones.x,
            z_terms=opciones.z if familia.es_inflada else (),
            continuous=tuple(opciones.continuous)
        )

    def ajustar(
        self,
        spec: EspecificacionModelo,
        datos: ConjuntoDatos
    ) -> Tuple[ModeloAjustado, DatosDiseno]:
        dd = build_design(spec, datos)
        return maximize(spec, dd), dd

    def codigo(self, modelos: List[ModeloAjustado]) -> int:
        fallidos = [fm.familia.etiqueta for fm in modelos if not fm.converged]
        if fallidos:
            self.error(f"No convergió: {', '.join(fallidos)}")
            return NO_CONVERGIO
        return EXITO


class FitCommand(ComandoModelo):
    help = 'Ajusta un modelo y reporta coeficientes, errores estándar e inflación promedio'

    def handle(self, opciones: Namespace) -> int:
        datos = load_csv(opciones.data)
        fm, dd = self.ajustar(self.especificacion(opciones), datos)
        tabla = summarize(fm, dd)

        contenido = {
            'text': texto.formatear_resumen,
            'json': lambda t: texto.a_json(t.to_dict()),
            'csv': texto.resumen_a_csv
        }[opciones.format](tabla)
        texto.escribir(contenido, opciones.out)
        return self.codigo([fm])


class MarginsCommand(ComandoModelo):
    help = 'Efectos marginales con errores estándar por el método delta'

    def add_arguments(self, parser: ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument(
            '--aggregation',
            choices=['ae', 'em'],
            default='ae',
            help='ae: efectos promedio; em: efecto en las medias'
        )

    def handle(self, opciones: Namespace) -> int:
        datos = load_csv(opciones.data)
        fm, dd = self.ajustar(self.especificacion(opciones), datos)
        efectos = margins(fm, dd, Agregacion.desde_texto(opciones.aggregation))

        contenido = {
            'text': texto.formatear_efectos,
            'json': lambda e: texto.a_json(e.to_dict()),
            'csv': texto.efectos_a_csv
        }[opciones.format](efectos)
        texto.escribir(contenido, opciones.out)
        return self.codigo([fm])


class TestCommand(ComandoModelo):
    help = 'Pruebas de Wald y de razón de verosimilitud de no inflación de unos'

    def handle(self, opciones: Namespace) -> int:
        familia = Familia.desde_texto(opciones.family)
        datos = load_csv(opciones.data)

        spec_oi = self.especificacion(opciones, familia.inflada)
        fm_oi, _ = self.ajustar(spec_oi, datos)
        fm_base, _ = self.ajustar(spec_oi.con_familia(familia.base), datos)
        pruebas = [self._wald(fm_oi), self._lrt(fm_oi, fm_base)]

        contenido = {
            'text': texto.formatear_pruebas,
            'json': lambda ps: texto.a_json({'tests': [p.to_dict() for p in ps]}),
            'csv': texto.pruebas_a_csv
        }[opciones.format](pruebas)
        texto.escribir(contenido, opciones.out)

        codigo = self.codigo([fm_oi, fm_base])
        faltantes = [p for p in pruebas if not p.disponible]
        for prueba in faltantes:
            self.error(f"{prueba.method} no disponible: {prueba.notas[0]}")
        return NO_CONVERGIO if faltantes else codigo

    def _wald(self, fm_oi: ModeloAjustado) -> ResultadoPrueba:
        if fm_oi.varcov is None:
            return ResultadoPrueba.no_disponible(
                len(fm_oi.estimates.gamma), 'wald:no-inflacion', 'matriz de varianzas-covarianzas no disponible'
            )
        return one_wald(fm_oi)

    def _lrt(self, fm_oi: ModeloAjustado, fm_base: ModeloAjustado) -> ResultadoPrueba:
        """LRT o, si el ajuste inflado quedó por debajo del base, una prueba no disponible."""
        try:
            return one_lrt(fm_oi, fm_base)
        except RuntimeError as e:
            logger.warning(str(e))
            return ResultadoPrueba.no_disponible(len(fm_oi.estimates.gamma), 'lrt:no-inflacion', str(e))


def frecuencias_observadas(y: np.ndarray, y_max: int) -> pd.Series:
    """Frecuencia observada de cada y = 1..y_max."""
    conteos = np.bincount(np.asarray(y, dtype=np.int64), minlength=y_max + 1)[1:y_max + 1]
    return pd.Series(conteos.astype(float), index=pd.RangeIndex(1, y_max + 1, name='y'), name='observado')


class PredictCommand(ComandoModelo):
    help = 'Tabla de conteos predichos Σ_i pmf(y) por valor de y'

    def add_arguments(self, parser: ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument('--y-max', type=int, default=None, help='Último y (por defecto, adaptativo)')

    def handle(self, opciones: Namespace) -> int:
        datos = load_csv(opciones.data)
        fm, dd = self.ajustar(self.especificacion(opciones), datos)
        predichos = predicted_counts(fm, dd, y_max=opciones.y_max)
        tabla = pd.concat([frecuencias_observadas(dd.y, len(predichos)), predichos], axis=1)

        contenido = {
            'text': texto.formatear_conteos,
            'json': lambda t: texto.a_json({
                'family': fm.familia.etiqueta,
                'y': t.index.tolist(),
                'observed': t['observado'].tolist(),
                'predicted': t[fm.familia.etiqueta].tolist()
            }),
            'csv': texto.conteos_a_csv
        }[opciones.format](tabla)
        texto.escribir(contenido, opciones.out)
        return self.codigo([fm])


class PlotCommand(ComandoModelo):
    help = 'Frecuencias observadas y conteos predichos (CSV + gráfico SVG)'

    def add_arguments(self, parser: ArgumentParser) -> None:
        parser.add_argument('--data', required=True, help='CSV con encabezado y solo columnas numéricas')
        parser.add_argument('--response', required=True, help='Columna de conteos (y >= 1)')
        parser.add_argument('--x', type=lista_terminos, default=(), help='Regresores de la media: a,b,c')
        parser.add_argument('--z', type=lista_terminos, default=(), help='Regresores de la inflación: a,b,c')
        parser.add_argument(
            '--families',
            type=lista_terminos,
            default=(),
            help='Familias a superponer, hasta cuatro: ztnb,oiztnb (vacío: solo observados)'
        )
        parser.add_argument('--continuous', action='append', default=[], help='Columna 0/1 a tratar como continua')
        parser.add_argument(
            '--y-max',
            type=int,
            default=None,
            help='Último y (por defecto, la cota adaptativa de los modelos o el máximo observado)'
        )
        parser.add_argument('--out', required=True, help='Prefijo de salida: escribe <out>.csv y <out>.svg')

    def handle(self, opciones: Namespace) -> int:
        familias = [Familia.desde_texto(f) for f in opciones.families]
        if len(familias) > 4:
            raise ValueError(f"Se admiten hasta cuatro familias, se recibieron {len(familias)}")

        datos = load_csv(opciones.data)
        y = datos.columna(opciones.response)
        ajustes = [self.ajustar(self.especificacion(opciones, familia), datos) for familia in familias]

        y_max = opciones.y_max
        if y_max is None:
            # Cota adaptativa de cada modelo (la misma de predict), sin cortar los observados
            y_max = max([int(np.max(y))] + [len(predicted_counts(fm, dd)) for fm, dd in ajustes])

        columnas = [frecuencias_observadas(y, y_max)]
        columnas += [predicted_counts(fm, dd, y_max=y_max) for fm, dd in ajustes]
        modelos = [fm for fm, _ in ajustes]

        tabla = pd.concat(columnas, axis=1)
        base = Path(opciones.out)
        texto.escribir(texto.conteos_a_csv(tabla), base.with_suffix('.csv'))
        graficar_conteos(tabla, base.with_suffix('.svg'))
        self.exito(f"Gráfico escrito en {base.with_suffix('.svg')}")
        return self.codigo(modelos)


class SimulateCommand(Comando):
    help = 'Estudio Monte Carlo de sesgo porcentual de los estimadores'

    def add_arguments(self, parser: ArgumentParser) -> None:
        parser.add_argument('--config', required=True, help='Configuración (YAML, JSON o clave=valor)')
        parser.add_argument('--seed', type=int, default=None, help='Reemplaza master_seed de la configuración')
        parser.add_argument('--workers', type=int, default=None, help='Procesos paralelos')
        parser.add_argument('--format', choices=texto.FORMATOS, default='text', help='Formato del reporte')
        parser.add_argument('--out', default=None, help='Archivo de salida (por defecto stdout)')

    def handle(self, opciones: Namespace) -> int:
        simulador = Simulator()
        config = simulador.cargar_config(opciones.config)
        if opciones.seed is not None or opciones.workers is not None:
            datos = config.to_dict()
            if opciones.seed is not None:
                datos['master_seed'] = opciones.seed
            if opciones.workers is not None:
                datos['workers'] = opciones.workers
            config = ConfiguracionSimulacion.from_dict(datos)

        tabla = simulador.ejecutar_estudio(config)
        contenido = {
            'text': texto.formatear_sesgos,
            'json': lambda t: texto.a_json(t.to_dict()),
            'csv': texto.sesgos_a_csv
        }[opciones.format](tabla)
        texto.escribir(contenido, opciones.out)
        self.exito(f"Estudio completado: {len(tabla.filas)} celdas")
        return EXITO


COMANDOS: Dict[str, Type[Comando]] = {
    'fit': FitCommand,
    'margins': MarginsCommand,
    'test': TestCommand,
    'predict': PredictCommand,
    'plot': PlotCommand,
    'simulate': SimulateCommand,
}
