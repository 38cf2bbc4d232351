# Utilities for Risk Attitude
