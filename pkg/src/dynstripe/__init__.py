"""Dynamic (watermark-based) file striping: layouts, a segment-file store,
workload generators and a fluid storage-cluster simulator."""

__version__ = "0.1.0"
