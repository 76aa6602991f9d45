"""lamlab: a desk-scale workbench for building and evaluating GUI action models.

Subpackages: ``env_sim`` (simulated document application), ``dataflow`` (data
pipeline), ``policy`` (featurized softmax models), ``training`` (four-phase
training), ``agent`` (the interaction loop), ``evaluation`` (metrics and
reports), ``oracle`` (text-generation providers), ``cli`` (orchestration).
"""

__version__ = "0.1.0"
