"""Tests for the ishikawa-ep package."""
