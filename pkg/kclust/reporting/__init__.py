from .aggregator import summarise_bench, timing_stats
from .exporters import export_csv, export_json, export_markdown
