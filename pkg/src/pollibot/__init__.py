"""Greenhouse pollination robot autonomy: pose-graph SLAM, flower detection,
inspection and pollination planning, arm sequencing, and a seeded mission
simulator."""

__version__ = "0.1.0"
