"""City-scale vehicular network simulator bindings.

The compiled core lives in `_vanetsim`; this package re-exports it so both
`import vanetsim` (wheel installs) and `import _vanetsim` (build-tree runs)
work.
"""

from _vanetsim import (  # noqa: F401
    __version__,
    bearing,
    decode_message,
    delivery_probability,
    encode_cam,
    haversine_distance,
    lora_airtime,
    run_scenario,
    sample_ev_dissemination,
)
