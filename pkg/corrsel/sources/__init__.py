from .base import Source
from .schedule import ScheduleStudy
from .selection import CorrelationStudy, SelectionStudy
from .tracking import TrackingStudy
from .verification import AcceptanceSuite
