"""
Test suite for flowlat
"""
