"""moodlogic: a mood-disorder CDSS on a small stratified Datalog engine."""

__version__ = "0.1.0"
