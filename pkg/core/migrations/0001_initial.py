# Generated by Django 5.2.7 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(db_index=True, max_length=50)),
                ('network_kind', models.CharField(choices=[('baseline', 'Baseline (4 layers)'), ('seed', 'Seed network'), ('grown', 'ANG grown network'), ('fc20', '20 perceptron fully connected'), ('custom', 'Custom')], default='custom', max_length=20)),
                ('seed', models.IntegerField(default=0)),
                ('config', models.JSONField(default=dict, verbose_name='Configuração')),
                ('stopping_reason', models.CharField(blank=True, choices=[('max_cycles', 'Max cycles reached'), ('perfect_validation', 'Validation accuracy reached target'), ('patience', 'Validation did not improve')], max_length=30)),
                ('final_weights', models.PositiveIntegerField()),
                ('peak_validation', models.FloatField(blank=True, null=True)),
                ('test_at_peak', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command'], name='core_traini_command_5b1c2e_idx'), models.Index(fields=['network_kind'], name='core_traini_network_8f0a41_idx'), models.Index(fields=['created_at'], name='core_traini_created_3d9e77_idx')],
            },
        ),
        migrations.CreateModel(
            name='CycleRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('cycle', models.PositiveIntegerField()),
                ('train', models.FloatField()),
                ('validate', models.FloatField()),
                ('test', models.FloatField(blank=True, null=True)),
                ('weights', models.PositiveIntegerField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='cycles', to='core.trainingrun')),
            ],
            options={
                'ordering': ['run', 'cycle'],
                'constraints': [models.UniqueConstraint(fields=('run', 'cycle'), name='uniq_run_cycle')],
            },
        ),
        migrations.CreateModel(
            name='PruneRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('threshold', models.FloatField()),
                ('removed_fraction', models.FloatField()),
                ('remaining_weights', models.PositiveIntegerField()),
                ('test_accuracy', models.FloatField(blank=True, null=True)),
                ('retrained', models.BooleanField(default=False)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='prune_points', to='core.trainingrun')),
            ],
            options={
                'ordering': ['run', 'threshold'],
                'indexes': [models.Index(fields=['run', 'threshold'], name='core_prunere_run_id_4c7a90_idx')],
            },
        ),
    ]
