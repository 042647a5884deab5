# Generated by Django 4.2.7

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('algorithm', models.CharField(max_length=100)),
                ('params', models.CharField(blank=True, max_length=255)),
                ('instance', models.CharField(max_length=255)),
                ('online', models.FloatField()),
                ('offline', models.FloatField()),
                ('offline_kind', models.CharField(max_length=30)),
                ('ratio', models.FloatField(blank=True, null=True)),
                ('is_infinite', models.BooleanField(default=False)),
                ('stop_reason', models.CharField(max_length=50)),
                ('command', models.CharField(blank=True, max_length=30)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Experiment Record',
                'verbose_name_plural': 'Experiment Records',
                'ordering': ['-created_at'],
            },
        ),
    ]
