"""Tests for split-knockoffs."""
