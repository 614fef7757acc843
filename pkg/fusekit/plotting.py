#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

from pathlib import Path
from typing import List, Union

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg as FigureCanvas
from matplotlib.figure import Figure

from fusekit.scenarios import ScenarioTrace
from fusekit.utils import LogHelper, Logger, FusekitProperties


class PlotData:

    def __init__(self, x_data:np.ndarray, y_data:np.ndarray,
            x_label:str=None, y_label:str=None, color:str= "b",
            line_style:str= "-", legend:str=None):
        self.x_data = x_data
        self.y_data = y_data
        self.x_label = x_label
        self.y_label = y_label
        self.color = color
        self.line_style = line_style
        self.legend = legend


class LinePlotData(PlotData):

    def __init__(self, x_data:np.ndarray, y_data:np.ndarray,
            x_label:str=None, y_label:str=None, color:str= "b",
            line_style:str= "-", legend:str=None, marker:str=None):
        super().__init__(x_data, y_data, x_label, y_label, color, line_style, legend)
        self.marker = marker


class TracePanel:
    """One set of axes of a trace figure and the lines drawn on it"""

    def __init__(self, title:str, lines:List[LinePlotData]):
        self.__title = title
        self.__lines = lines

    def title(self) -> str:
        return self.__title

    def lines(self) -> List[LinePlotData]:
        return self.__lines


def trace_panels(trace:ScenarioTrace) -> List[TracePanel]:
    """The plot data of a run.  Per state, truth against estimate and the estimation
    error inside its three-sigma bounds, then the innovations at the update steps."""
    records = trace.records()
    t = np.array([record.t() for record in records])
    x_true = np.array([record.x_true() for record in records])
    x_hat = np.array([record.x_hat() for record in records])
    bound = np.array([record.three_sigma() for record in records])

    panels = list()
    for index, label in enumerate(trace.state_labels()):
        panels.append(TracePanel("{0} truth and estimate".format(label), [
            LinePlotData(t, x_true[:, index], "t (s)", label, legend="truth", color="k"),
            LinePlotData(t, x_hat[:, index], "t (s)", label, legend="estimate", color="b", line_style="--")]))

        error = x_hat[:, index] - x_true[:, index]
        panels.append(TracePanel("{0} error".format(label), [
            LinePlotData(t, error, "t (s)", "error", legend="error", color="b"),
            LinePlotData(t, bound[:, index], "t (s)", "error", legend="3 sigma", color="r", line_style=":"),
            LinePlotData(t, -bound[:, index], "t (s)", "error", color="r", line_style=":")]))

    updates = [record for record in records if record.innovation() is not None]
    if len(updates) > 0:
        t_update = np.array([record.t() for record in updates])
        nu = np.array([record.nu() for record in updates])
        panels.append(TracePanel("innovation", [
            LinePlotData(t_update, nu[:, index], "t (s)", "innovation", legend="nu_{0}".format(index),
                color=color, line_style="", marker=".")
            for index, color in zip(range(trace.measurement_dim()), ["g", "m"])]))

    return panels


class TraceFigure:
    """Renders the panels of a run off screen to an image file"""

    __LOG:Logger = LogHelper.logger("TraceFigure")

    def __init__(self, trace:ScenarioTrace, width:float=8, panel_height:float=2.2, dpi:int=None):
        if dpi is None:
            dpi = FusekitProperties.get_property("PlotDpi", 100)

        self.__panels = trace_panels(trace)
        self.__figure = Figure(figsize=(width, panel_height * len(self.__panels)), dpi=dpi)
        self.__canvas = FigureCanvas(self.__figure)
        self.__title = "{0} seed {1}".format(trace.kind().value, trace.seed())

    def draw(self):
        self.__figure.clear()
        self.__figure.suptitle(self.__title)
        for index, panel in enumerate(self.__panels, 1):
            axes = self.__figure.add_subplot(len(self.__panels), 1, index)
            for data in panel.lines():
                axes.plot(data.x_data, data.y_data, color=data.color, linestyle=data.line_style,
                    marker=data.marker, label=data.legend)
            axes.set_title(panel.title(), fontsize="small")
            axes.set_ylabel(panel.lines()[0].y_label)
            if any(data.legend is not None for data in panel.lines()):
                axes.legend(loc="best", fontsize="x-small")
            axes.relim()
            axes.autoscale(True)

        self.__figure.axes[-1].set_xlabel(self.__panels[-1].lines()[0].x_label)
        self.__canvas.draw()

    def save(self, file_name:Union[str, Path]):
        self.draw()
        self.__figure.savefig(str(file_name))
        TraceFigure.__LOG.info("Wrote plot {0}", file_name)

    def panel_count(self) -> int:
        return len(self.__panels)

    def figure(self) -> Figure:
        return self.__figure
