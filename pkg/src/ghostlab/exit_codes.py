from __future__ import annotations

# Process exit codes of the ghostlab command line. No other codes are used.

EXIT_CODES = {
    0: "Success",
    2: "Configuration error (missing key, malformed value or unreadable config)",
    3: "Numeric failure (non-finite coefficients, blow-up, or an unexpected internal error)",
    4: "Verification failure (an identity, generation or propagation check failed)",
}

SUCCESS = 0
CONFIG_ERROR = 2
NUMERIC_FAILURE = 3
VERIFICATION_FAILURE = 4

# Unclassified exceptions share the numeric-failure code.
INTERNAL_FAILURE = NUMERIC_FAILURE
