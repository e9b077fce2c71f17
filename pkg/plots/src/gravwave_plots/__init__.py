"""Publication-style figures from simulator run directories.

Consumes only the documented run-directory contract: diagnostics.csv for
time series and analysis.json for fitted quantities.  The simulator package
is not imported; this tool must work on any directory honoring the file
formats.
"""

__version__ = "0.1.0"
