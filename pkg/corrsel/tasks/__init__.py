from .schedule import ScheduleToDF, TrackingToDF
from .selection import CorrelationToDF, SelectionToDF
from .verification import AcceptanceCheckToDF
