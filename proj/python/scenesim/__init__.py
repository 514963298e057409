"""Python bindings for the scenesim driving scenario simulator."""

try:
    from ._scenesim import *  # noqa: F401,F403
    from ._scenesim import ScenesimError
except ImportError:  # build tree: the extension sits next to the package, not inside it
    from _scenesim import *  # noqa: F401,F403
    from _scenesim import ScenesimError

__all__ = [
    "ControlAction",
    "ImuSample",
    "KinematicParams",
    "ScenesimError",
    "VehicleState",
    "akm_step",
    "bicycle_step",
    "compute_rates",
    "estimate_akm_params",
    "estimate_light",
    "generate_dataset",
    "load_configs",
    "metrics_from_logs",
    "read_imu_csv",
    "run_episode",
    "slip_angle",
]
