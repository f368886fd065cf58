"""Tests for krauslab."""
