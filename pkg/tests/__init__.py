"""
Tests for MedusaXD AI Image Editor Bot
"""
