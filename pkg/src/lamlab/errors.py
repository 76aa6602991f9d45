"""Exception taxonomy shared across the workbench.

Every raised error is a subclass of :class:`LamLabError`, so callers (most
notably the CLI) can distinguish domain validation failures from plain bugs.
"""

from __future__ import annotations


class LamLabError(Exception):
    """Base class for all workbench errors."""


class ConfigError(LamLabError):
    """Bad run configuration (unknown keys, unreadable file, bad values)."""


# --- simulated environment ------------------------------------------------

class UnknownTemplate(LamLabError):
    """Requested template id is not in the bundle."""


class UnknownControl(LamLabError):
    """No control matches the given label/text."""


class AmbiguousControl(LamLabError):
    """Two or more controls match at the same resolution tier."""


class UnknownFunction(LamLabError):
    """Action names a function that is not registered."""


class BadArgs(LamLabError):
    """Action arguments are missing, malformed, or unusable in this state."""


class DisabledControl(LamLabError):
    """Target control resolved but is disabled."""


# --- dataflow ---------------------------------------------------------------

class OracleFailure(LamLabError):
    """The text-generation provider failed to produce a usable response."""


class ValidationFailure(LamLabError):
    """A record violated a hard validator and was rejected."""


class NoTemplateMatch(LamLabError):
    """No template description shares a keyword with the task."""


class ParseFailure(LamLabError):
    """A structured oracle response could not be parsed into the expected shape."""


# --- policy / training ------------------------------------------------------

class StepActionNotInCandidateSet(LamLabError):
    """An expert action cannot be materialized from the state's controls."""


class DegenerateRatio(LamLabError):
    """Old-policy probability of a step action is numerically zero."""


class MissingPredecessor(LamLabError):
    """A training phase requires a checkpoint that does not exist."""


class EmptyCorpus(LamLabError):
    """A training phase was given no records to train on."""


class CheckpointError(LamLabError):
    """A checkpoint file is malformed or carries unknown feature names."""


# --- evaluation -------------------------------------------------------------

class MissingGroundTruth(LamLabError):
    """A predicted task has no aligned ground-truth trajectory."""


# --- oracle providers -------------------------------------------------------

class TemplateError(LamLabError):
    """Prompt template missing, or substitutions do not match its placeholders."""


class MalformedResponse(LamLabError):
    """Provider response failed strict structured parsing."""


class Timeout(LamLabError):
    """Remote provider did not answer within the retry budget."""
