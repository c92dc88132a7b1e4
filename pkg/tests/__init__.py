"""Tests for the tbcnn toolkit."""
