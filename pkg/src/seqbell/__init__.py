"""Local hidden variable tests for sequences of generalized measurements,
with hidden nonlocality revealed by local filtering as the worked example."""

from . import bell, lhv, measurement, optics, qcore
from .bell import BlochObservable, ChshSettings, max_chsh
from .lhv import BehaviorTable, LhvModel, lhv_feasible
from .measurement import GeneralizedMeasurement, JointDistribution, MeasurementSequence, sequence_joint
from .optics import ExampleStateParams, fig3_pipeline

__version__ = "0.1.0"
