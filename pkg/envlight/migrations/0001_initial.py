from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='BenchmarkRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_label', models.CharField(db_index=True, max_length=64, verbose_name='Run Label')),
                ('frame_index', models.IntegerField(default=0, verbose_name='Frame Index')),
                ('resolution', models.IntegerField(verbose_name='Crop Size (px)')),
                ('mode', models.CharField(default='full', max_length=32, verbose_name='Estimation Mode')),
                ('config_digest', models.CharField(max_length=40, verbose_name='Config Digest')),
                ('frame_ms', models.FloatField(verbose_name='Frame Time (ms)')),
                ('budget_ms', models.FloatField(verbose_name='Budget (ms)')),
                ('stage_ms', models.JSONField(blank=True, default=dict, verbose_name='Stage Times (ms)')),
                ('status', models.CharField(choices=[('pass', 'Within budget'), ('over_budget', 'Over budget')], max_length=20, verbose_name='Status')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Recorded At')),
            ],
            options={
                'verbose_name': 'Benchmark Record',
                'verbose_name_plural': 'Benchmark Records',
                'ordering': ['-created_at', 'frame_index'],
            },
        ),
    ]
