import math

from django.db import models


class ExperimentRecord(models.Model):
    """One stored row of a ratio table."""

    algorithm = models.CharField(max_length=100)
    params = models.CharField(max_length=255, blank=True)
    instance = models.CharField(max_length=255)
    online = models.FloatField()
    offline = models.FloatField()
    offline_kind = models.CharField(max_length=30)
    ratio = models.FloatField(blank=True, null=True)
    is_infinite = models.BooleanField(default=False)
    stop_reason = models.CharField(max_length=50)
    command = models.CharField(max_length=30, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        verbose_name = "Experiment Record"
        verbose_name_plural = "Experiment Records"
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.algorithm} on {self.instance}: {self.ratio_display}"

    @property
    def ratio_display(self):
        return 'inf' if self.is_infinite else f"{self.ratio:.6g}"

    @classmethod
    def from_report(cls, report, command=''):
        infinite = math.isinf(report.ratio)
        return cls(
            algorithm=report.algorithm,
            params=report.params,
            instance=report.instance,
            online=report.online,
            offline=report.offline,
            offline_kind=report.offline_kind,
            ratio=None if infinite else report.ratio,
            is_infinite=infinite,
            stop_reason=report.stop_reason,
            command=command,
        )
