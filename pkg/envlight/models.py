import logging

from django.db import models
from django.db.utils import OperationalError

logger = logging.getLogger(__name__)


class BenchmarkRecord(models.Model):
    """
    One timed end-to-end estimate of a single frame.
    """
    STATUS_PASS = 'pass'
    STATUS_OVER = 'over_budget'
    STATUS_CHOICES = [
        (STATUS_PASS, 'Within budget'),
        (STATUS_OVER, 'Over budget'),
    ]

    run_label = models.CharField(max_length=64, verbose_name="Run Label", db_index=True)
    frame_index = models.IntegerField(verbose_name="Frame Index", default=0)
    resolution = models.IntegerField(verbose_name="Crop Size (px)")
    mode = models.CharField(max_length=32, verbose_name="Estimation Mode", default="full")
    config_digest = models.CharField(max_length=40, verbose_name="Config Digest")
    frame_ms = models.FloatField(verbose_name="Frame Time (ms)")
    budget_ms = models.FloatField(verbose_name="Budget (ms)")
    stage_ms = models.JSONField(verbose_name="Stage Times (ms)", default=dict, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, verbose_name="Status")
    created_at = models.DateTimeField(auto_now_add=True, verbose_name="Recorded At")

    class Meta:
        verbose_name = "Benchmark Record"
        verbose_name_plural = "Benchmark Records"
        ordering = ['-created_at', 'frame_index']

    def __str__(self):
        return f"{self.run_label}#{self.frame_index} {self.resolution}px {self.frame_ms:.0f}ms ({self.status})"

    @staticmethod
    def scaled_budget(budget_ms, resolution, reference=384):
        """Budget for a crop size, scaled by pixel count from the reference crop."""
        return budget_ms * (resolution / reference) ** 2

    @classmethod
    def record(cls, run_label, frame_index, resolution, mode, config_digest, frame_ms, budget_ms, stage_ms=None):
        """
        Store a measurement and classify it against the budget.

        Returns:
            BenchmarkRecord instance, unsaved when the table does not exist yet
        """
        status = cls.STATUS_PASS if frame_ms <= budget_ms else cls.STATUS_OVER
        record = cls(
            run_label=run_label,
            frame_index=frame_index,
            resolution=resolution,
            mode=mode,
            config_digest=config_digest,
            frame_ms=frame_ms,
            budget_ms=budget_ms,
            stage_ms=stage_ms or {},
            status=status,
        )
        try:
            record.save()
        except OperationalError as e:
            logger.warning(f"BenchmarkRecord table missing (run migrate); result not stored: {e}")
        return record
