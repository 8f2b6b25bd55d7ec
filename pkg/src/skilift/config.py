import os

from .errors import ResourceError

DEFAULT_CAP = 12
STATE_CAP = 20


def sim_cap():
    v = os.environ.get("SKILIFT_SIM_CAP")
    return int(v) if v else DEFAULT_CAP


def check_cap(n, state_only=False):
    cap = sim_cap()
    if state_only:
        cap = max(cap, STATE_CAP) if not os.environ.get("SKILIFT_SIM_CAP") else cap
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the simulator cap of {cap}")
