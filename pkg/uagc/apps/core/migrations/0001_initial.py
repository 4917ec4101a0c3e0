# Generated by Django 5.0.1 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='PipelineRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=45)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('manifest', models.JSONField(default=dict)),
                ('output_path', models.CharField(blank=True, max_length=500)),
                ('status', models.CharField(choices=[('ok', 'Ok'), ('failed', 'Failed')], default='ok', max_length=45)),
                ('error', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Pipeline Run',
                'verbose_name_plural': 'Pipeline Runs',
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
