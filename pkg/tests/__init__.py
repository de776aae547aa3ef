"""Tests for quantum-sbt."""
