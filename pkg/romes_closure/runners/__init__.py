from .studies import MetricTable, error_metrics, pareto_study, rom_only_errors
from .runner import RunnerROMES
