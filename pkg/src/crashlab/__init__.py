"""crashlab: replay-based root cause analysis for driving accidents.

Given a scenario that ends in a collision or emergency braking, the pipeline
replays it in a deterministic micro-simulator, searches the physical
environment for the minimal change that suppresses the accident (the
triggering entity), localizes the ADS module whose channel output deviated
first between the two executions, and searches that module's configuration
space for the minimal parameter change that also suppresses the accident
(the misconfiguration).
"""

__version__ = "0.1.0"
