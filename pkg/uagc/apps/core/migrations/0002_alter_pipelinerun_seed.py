# Generated by Django 5.0.1 on 2026-10-17 14:30

from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('core', '0001_initial'),
    ]

    operations = [
        migrations.AlterField(
            model_name='pipelinerun',
            name='seed',
            field=models.CharField(blank=True, max_length=20, null=True),
        ),
    ]
