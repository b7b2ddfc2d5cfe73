"""Party-approval elections: rules, axioms, counterexamples and a SAT pipeline."""

__version__ = "0.1.0"
