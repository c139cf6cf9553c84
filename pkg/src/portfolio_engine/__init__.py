"""Portfolio construction engine.

Stages: DEA efficiency screening, lexicon sentiment gate, correlation
clustering (k-means or Louvain), neural ranking within clusters, and
PSO/GA mean-variance weighting that yields the top three portfolios.
"""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config
from .pipeline import run_pipeline, run_stage

__all__ = ["PipelineConfig", "load_config", "run_pipeline", "run_stage", "__version__"]
