from django.db import models


class PipelineRun(models.Model):
    """Registro de uma execução de comando do pipeline e do seu manifesto."""

    STATUS_CHOICES = [
        ('ok', 'Ok'),
        ('failed', 'Failed'),
    ]
    command = models.CharField(max_length=45)
    seed = models.CharField(max_length=20, null=True, blank=True)
    manifest = models.JSONField(default=dict)
    output_path = models.CharField(max_length=500, blank=True)
    status = models.CharField(max_length=45, default='ok', choices=STATUS_CHOICES)
    error = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.command} ({self.status})"

    @property
    def succeeded(self) -> bool:
        return self.status == 'ok'

    class Meta:
        verbose_name = "Pipeline Run"
        verbose_name_plural = "Pipeline Runs"
        ordering = ['-created_at', '-id']
