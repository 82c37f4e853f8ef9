"""Tests for sqc-smoother."""
