"""
Test package for qiebench
"""
