"""
Pipeline orchestration, run reports and plots.
"""

from .report import RunReport, evaluate_stages  # noqa: F401
from .pipeline import PipelineOutputs, SurvKANPipeline  # noqa: F401
