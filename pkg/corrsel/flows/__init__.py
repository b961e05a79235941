from .acceptance_check import AcceptanceCheck
from .schedule_sweep import ScheduleSweep
from .selection_sweep import SelectionSweep
from .tracking_sweep import TrackingSweep
